"""
Effective oscillator model obtained by eliminating the cavity.

The eliminated oscillator is a single mode with frequency omega_eff, net
dissipation gamma_eff (negative means gain) and corrected bath occupancy
n_th_eff. Its first and second moments have closed forms, so nothing here is
integrated numerically. Full and effective runs are compared through the
Gaussian (Uhlmann) fidelity of the oscillator state.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np
import pandas as pd

import moments
from errors import NumericalError, ScenarioError
from params import (EffectiveParams, InitialMoments, OscillatorTriple, SystemParams,
                    balance_coupling, effective_params, modified_initial, threshold_coupling)

logger = logging.getLogger(__name__)

# Samples with t < TRANSIENT are left out of time-averaged fidelities
TRANSIENT = 50.0
PHYSICAL_TOL = 1e-9


# ======================================================================
# 1) Closed-form propagation
# ======================================================================

def effective_rates(eff: EffectiveParams) -> Tuple[float, float]:
    """Lindblad (down, up) rates of the effective oscillator channel.

    down = gamma_eff (n_th_eff + 1) = gamma (n_th + 1), up = gamma_eff n_th_eff,
    both nonnegative for every valid scenario.
    """
    up = eff.heating_rate
    return up + eff.gamma_eff, up


def _heating_integral(gamma_eff: float, t: np.ndarray) -> np.ndarray:
    """(1 - exp(-gamma_eff t)) / gamma_eff, with the limit t at gamma_eff = 0."""
    if gamma_eff == 0.0:
        return t.astype(float)
    return -np.expm1(-gamma_eff * t) / gamma_eff


def evolve_effective(eff: EffectiveParams, init: OscillatorTriple, times: Sequence[float],
                     bath_correction: bool = True,
                     bare_n_th: float = None) -> moments.Trajectory:
    """Closed-form oscillator triples of the eliminated model on the given times.

    With bath_correction=False the occupation is fed by gamma_eff * bare_n_th
    instead of the corrected heating rate. This reproduces the uncorrected
    heat flow and can cool an oscillator that the correct model heats.
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ScenarioError("times must be a nonempty 1-D sequence")
    if bath_correction:
        injection = eff.heating_rate
    else:
        if bare_n_th is None:
            raise ScenarioError("bare_n_th is required when bath_correction is False")
        injection = eff.gamma_eff * bare_n_th

    t0 = t - t[0]
    g = eff.gamma_eff
    b = complex(init.b_mean) * np.exp((-1j * eff.omega_eff - g / 2) * t0)
    n = init.n_b * np.exp(-g * t0) + injection * _heating_integral(g, t0)
    bb = complex(init.bb) * np.exp((-2j * eff.omega_eff - g) * t0)
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(n)) and np.all(np.isfinite(bb))):
        raise NumericalError("effective model overflowed", time=float(t[-1]))

    states = [OscillatorTriple(complex(bi), float(ni), complex(bbi)) for bi, ni, bbi in zip(b, n, bb)]
    return moments.Trajectory(times=t, states=states)


# ======================================================================
# 2) Gaussian fidelity
# ======================================================================

def triple_to_gaussian(tri: OscillatorTriple) -> Tuple[np.ndarray, np.ndarray]:
    """Quadrature mean and 2x2 covariance (vacuum variance 1/2) of an oscillator triple."""
    b = complex(tri.b_mean)
    mean = np.sqrt(2.0) * np.array([b.real, b.imag])
    dn = tri.n_b - abs(b) ** 2
    dm = complex(tri.bb) - b * b
    V = np.array([[0.5 + dn + dm.real, dm.imag],
                  [dm.imag, 0.5 + dn - dm.real]])
    if V[0, 0] <= 0 or np.linalg.det(V) < 0.25 - PHYSICAL_TOL * max(1.0, abs(tri.n_b)):
        raise NumericalError(f"unphysical oscillator moments {tri!r} (det V={np.linalg.det(V):.6g})")
    return mean, V


def gaussian_fidelity(tri_a: OscillatorTriple, tri_b: OscillatorTriple) -> float:
    """Uhlmann fidelity of two single-mode Gaussian states."""
    mean_a, Va = triple_to_gaussian(tri_a)
    mean_b, Vb = triple_to_gaussian(tri_b)
    S = Va + Vb
    d = mean_a - mean_b
    big = np.linalg.det(S)
    small = max(0.0, 4.0 * (np.linalg.det(Va) - 0.25) * (np.linalg.det(Vb) - 0.25))
    overlap = np.exp(-0.5 * d @ np.linalg.solve(S, d))
    F = overlap / (np.sqrt(big + small) - np.sqrt(small))
    return float(np.clip(F, 0.0, 1.0))


def fidelity_trace(full: moments.Trajectory, eff: moments.Trajectory,
                   transient: float = TRANSIENT) -> Tuple[np.ndarray, float]:
    """Pointwise fidelity and its mean over samples with t >= transient."""
    if len(full) != len(eff) or not np.allclose(full.times, eff.times, rtol=0.0, atol=1e-9):
        raise ScenarioError("full and effective trajectories are sampled on different grids")
    F = np.array([gaussian_fidelity(a, b) for a, b in zip(full.oscillator(), eff.oscillator())])
    kept = full.times >= transient
    if not kept.any():
        raise ScenarioError(f"no samples after the transient t={transient}")
    return F, float(F[kept].mean())


# ======================================================================
# 3) Full vs effective runs
# ======================================================================

@dataclass
class Comparison:
    """Full and effective trajectories of one scenario on a common grid."""
    full: moments.Trajectory
    effective: moments.Trajectory
    uncorrected: moments.Trajectory
    fidelity: np.ndarray
    average_fidelity: float
    eff: EffectiveParams

    def to_frame(self) -> pd.DataFrame:
        frame = self.full.to_frame()
        eff = self.effective.to_frame()
        frame['n_b_eff'] = eff['n_b']
        frame['re_b_eff'] = eff['re_b']
        frame['im_b_eff'] = eff['im_b']
        frame['n_b_uncorrected'] = [s.n_b for s in self.uncorrected.states]
        frame['F'] = self.fidelity
        return frame


def compare_models(p: SystemParams, init: InitialMoments, t_end: float, dt: float,
                   sample_every: int = 1, transient: float = TRANSIENT) -> Comparison:
    """Run the full model and the eliminated model from the same initial moments."""
    full = moments.evolve(p, moments.MomentState.from_initial(init), t_end, dt, sample_every)
    eff = effective_params(p)
    start = modified_initial(p, init).oscillator()
    effective = evolve_effective(eff, start, full.times)
    uncorrected = evolve_effective(eff, start, full.times, bath_correction=False, bare_n_th=p.n_th)
    F, avg = fidelity_trace(full, effective, transient)
    logger.info("G=%g delta=%g: time-averaged fidelity %.6f", p.g_lin, p.delta, avg)
    return Comparison(full=full, effective=effective, uncorrected=uncorrected,
                      fidelity=F, average_fidelity=avg, eff=eff)


def average_fidelity(p: SystemParams, init: InitialMoments, t_end: float = 500.0,
                     dt: float = 0.01, sample_every: int = 100,
                     transient: float = TRANSIENT) -> float:
    """Time-averaged fidelity between the full and eliminated oscillator."""
    return compare_models(p, init, t_end, dt, sample_every, transient).average_fidelity


def gain_family(g_grid: Iterable[float], deltas: Sequence[float] = (2.0, 3.0),
                gammas: Sequence[float] = (1e-5, 5e-4), omega_m: float = 1.0,
                kappa: float = 0.1, n_th: float = 1000.0) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Gamma_eff/gamma and omega_eff against G for each (delta, gamma) pair.

    Returns the curves and, per pair, the threshold coupling (gamma_eff = 0)
    and the balance coupling (gamma_eff = -gamma).
    """
    g_values = [float(g) for g in g_grid]
    if not g_values:
        raise ScenarioError("g_grid must not be empty")
    curves, couplings = [], []
    for delta in deltas:
        for gamma in gammas:
            base = SystemParams(omega_m=omega_m, kappa=kappa, gamma=gamma, delta=delta,
                                g_lin=0.0, n_th=n_th)
            if gamma <= 0:
                raise ScenarioError(f"gain_family needs gamma > 0, got {gamma}")
            for g in g_values:
                eff = effective_params(base.with_coupling(g))
                curves.append({'delta': delta, 'gamma': gamma, 'g_lin': g,
                               'gamma_eff_ratio': eff.gamma_eff / gamma,
                               'omega_eff': eff.omega_eff})
            couplings.append({'delta': delta, 'gamma': gamma,
                              'g_threshold': threshold_coupling(base),
                              'g_balance': balance_coupling(base, gamma)})
    return pd.DataFrame(curves), pd.DataFrame(couplings)
