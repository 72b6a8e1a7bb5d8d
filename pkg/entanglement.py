"""
Gaussian entanglement of the PT dimer.

Second moments over u = (b1^dag, b1, b2^dag, b2) follow the same Lyapunov
flow as the optomechanical model, dU/dt = M U + U M^T + N, with loss on
oscillator 1, signed gain on oscillator 2 and beam-splitter coupling mu.
First moments stay zero. Entanglement is read off the quadrature covariance
through the logarithmic negativity.
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import partial
from typing import Callable, List, Sequence, Tuple

import numpy as np
import pandas as pd

import moments
from errors import NumericalError, ScenarioError
from params import PtDimerParams

logger = logging.getLogger(__name__)

B1D, B1, B2D, B2 = 0, 1, 2, 3
CONJ = np.array([B1, B1D, B2, B2D])

COMMUTATOR = np.zeros((4, 4))
COMMUTATOR[B1, B1D], COMMUTATOR[B1D, B1] = 1.0, -1.0
COMMUTATOR[B2, B2D], COMMUTATOR[B2D, B2] = 1.0, -1.0

# (x, p) = T (b^dag, b)
_T = np.array([[1.0, 1.0], [1j, -1j]]) / np.sqrt(2.0)
TRANSITION = np.kron(np.eye(2), _T)
SIGMA = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
PARTIAL_TRANSPOSE = np.diag([1.0, 1.0, 1.0, -1.0])

DEATH_THRESHOLD = 1e-6
AVERAGE_HORIZON = 200.0
RESIDUE_TOL = 1e-10
SYMMETRY_TOL = 1e-12


# ======================================================================
# 1) States
# ======================================================================

@dataclass
class DimerMomentState:
    t: float
    U: np.ndarray

    @property
    def n1(self) -> float:
        return float(self.U[B1D, B1].real)

    @property
    def n2(self) -> float:
        return float(self.U[B2D, B2].real)


@dataclass
class CovarianceMatrix:
    """Quadrature covariance over (x1, p1, x2, p2), vacuum variance 1/2."""
    C: np.ndarray

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float)
        if C.shape != (4, 4):
            raise ScenarioError(f"covariance must be 4x4, got shape {C.shape}")
        asym = float(np.abs(C - C.T).max())
        if asym > SYMMETRY_TOL * max(1.0, float(np.abs(C).max())):
            raise NumericalError(f"covariance is not symmetric (|C - C^T| = {asym:.3e})")
        self.C = C

    def uncertainty_margin(self) -> float:
        """Smallest eigenvalue of C + (i/2) Sigma."""
        return float(np.linalg.eigvalsh(self.C + 0.5j * SIGMA).min())


def _moment_matrix(n1: float, n2: float, m12: complex = 0j) -> np.ndarray:
    U = np.zeros((4, 4), dtype=complex)
    U[B1D, B1], U[B1, B1D] = n1, n1 + 1.0
    U[B2D, B2], U[B2, B2D] = n2, n2 + 1.0
    U[B1, B2] = U[B2, B1] = m12
    U[B1D, B2D] = U[B2D, B1D] = np.conj(m12)
    return U


def tmsv_initial(r: float) -> DimerMomentState:
    """Two-mode squeezed vacuum; its log-negativity is 2r."""
    if not r >= 0 or not math.isfinite(r):
        raise ScenarioError(f"squeezing r must be finite and >= 0, got {r}")
    return DimerMomentState(t=0.0, U=_moment_matrix(math.sinh(r) ** 2, math.sinh(r) ** 2,
                                                    -0.5 * math.sinh(2 * r)))


def thermal_initial(n1: float, n2: float) -> DimerMomentState:
    """Product of two thermal states."""
    if n1 < 0 or n2 < 0:
        raise ScenarioError(f"thermal occupations must be >= 0, got {n1}, {n2}")
    return DimerMomentState(t=0.0, U=_moment_matrix(n1, n2))


# ======================================================================
# 2) Generator and propagation
# ======================================================================

def dimer_drift_noise(p: PtDimerParams) -> Tuple[np.ndarray, np.ndarray]:
    """Drift M and injection N of the dimer second moments."""
    w, mu = p.omega, p.mu
    M = np.zeros((4, 4), dtype=complex)
    M[B1D, B1D] = 1j * w - p.gamma_loss / 2
    M[B1D, B2D] = 1j * mu
    M[B1, B1] = -1j * w - p.gamma_loss / 2
    M[B1, B2] = -1j * mu
    M[B2D, B2D] = 1j * w + p.gamma_gain / 2
    M[B2D, B1D] = 1j * mu
    M[B2, B2] = -1j * w + p.gamma_gain / 2
    M[B2, B1] = -1j * mu

    (down_1, up_1), (down_2, up_2) = p.channel_rates()
    N = np.zeros((4, 4), dtype=complex)
    N[B1D, B1], N[B1, B1D] = up_1, down_1
    N[B2D, B2], N[B2, B2D] = up_2, down_2
    return M, N


def max_step(p: PtDimerParams) -> float:
    return moments.STEP_FRACTION / max(p.omega, p.mu, abs(p.gamma_loss), abs(p.gamma_gain))


_check = partial(moments.check_invariants, commutator=COMMUTATOR, conj=CONJ,
                 occupations=((B1D, B1), (B2D, B2)))


def evolve_dimer(p: PtDimerParams, start: DimerMomentState, t_end: float, dt: float,
                 sample_every: int = 1) -> List[DimerMomentState]:
    """Fixed-step RK4 dimer moments, sampled every sample_every steps."""
    limit = max_step(p)
    if dt > limit * (1 + 1e-12):
        raise ScenarioError(f"dt={dt} does not resolve the fastest scale (limit {limit:.4g})")
    if not p.completely_positive:
        logger.warning("Gain channel is not completely positive (rates %s); "
                       "moments are propagated but need not describe a physical state",
                       p.channel_rates())
    M, N = dimer_drift_noise(p)
    out = []
    for t, _, U in moments.integrate_lyapunov(M, N, np.zeros(4, dtype=complex), start.U,
                                              start.t, start.t + t_end, dt, sample_every,
                                              check=_check, conj=CONJ):
        out.append(DimerMomentState(t=t, U=U))
    logger.info("Dimer evolved to t=%g in %d samples", out[-1].t, len(out))
    return out


# ======================================================================
# 3) Covariance and negativity
# ======================================================================

def to_covariance(state: DimerMomentState) -> CovarianceMatrix:
    S = TRANSITION @ state.U @ TRANSITION.T
    sym = 0.5 * (S + S.T)
    residue = float(np.abs(sym.imag).max())
    if residue > RESIDUE_TOL * max(1.0, float(np.abs(sym.real).max())):
        raise NumericalError(f"covariance has imaginary residue {residue:.3e}", time=state.t)
    return CovarianceMatrix(sym.real)


def log_negativity(cov: CovarianceMatrix) -> float:
    """max(0, -ln 2 zeta) with zeta the smallest symplectic eigenvalue of the partial transpose."""
    Ct = PARTIAL_TRANSPOSE @ cov.C @ PARTIAL_TRANSPOSE
    X = SIGMA @ Ct
    ev = np.linalg.eigvals(-X @ X)
    if np.any(ev.real <= 0) or np.abs(ev.imag).max() > 1e-9 * np.abs(ev).max():
        raise NumericalError(f"partially transposed covariance has eigenvalues {ev}")
    zeta = math.sqrt(float(ev.real.min()))
    return max(0.0, -math.log(2.0 * zeta))


def negativity_trace(p: PtDimerParams, start: DimerMomentState, t_end: float,
                     dt: float = 0.01, sample_every: int = 100) -> Tuple[np.ndarray, np.ndarray]:
    """(times, E_n) along the dimer trajectory."""
    states = evolve_dimer(p, start, t_end, dt, sample_every)
    times = np.array([s.t for s in states])
    values = np.array([log_negativity(to_covariance(s)) for s in states])
    return times, values


def death_time(times: Sequence[float], values: Sequence[float], horizon: float = None,
               threshold: float = DEATH_THRESHOLD) -> float:
    """First sample time after which E_n stays below threshold; inf if it never dies."""
    t = np.asarray(times, dtype=float)
    e = np.asarray(values, dtype=float)
    if t.size == 0 or t.size != e.size:
        raise ScenarioError("death_time needs a nonempty series with matching times")
    if horizon is not None:
        keep = t <= horizon
        t, e = t[keep], e[keep]
        if t.size == 0:
            raise ScenarioError(f"no samples within horizon {horizon}")
    alive = np.flatnonzero(e >= threshold)
    if alive.size == 0:
        return float(t[0])
    last = int(alive[-1])
    if last == t.size - 1:
        return math.inf
    return float(t[last + 1])


def time_avg(times: Sequence[float], values: Sequence[float], T: float = AVERAGE_HORIZON) -> float:
    """Mean of E_n over the samples with t <= T."""
    t = np.asarray(times, dtype=float)
    e = np.asarray(values, dtype=float)
    if t.size == 0 or t.size != e.size:
        raise ScenarioError("time_avg needs a nonempty series with matching times")
    keep = t <= T
    if not keep.any():
        raise ScenarioError(f"no samples within T={T}")
    return float(e[keep].mean())


def at_gamma_eff(p: PtDimerParams, gamma_eff: float) -> PtDimerParams:
    """Same loss, gain set to gamma - 2 gamma_eff; n_th_gain is kept as given."""
    return replace(p, gamma_gain=p.gamma_loss - 2.0 * gamma_eff)


def sweep_point(p: PtDimerParams, start: DimerMomentState, gamma_eff: float,
                t_end: float = AVERAGE_HORIZON, dt: float = 0.01,
                sample_every: int = 100) -> dict:
    """Time-averaged negativity and death time at one value of gamma_eff."""
    q = at_gamma_eff(p, gamma_eff)
    times, values = negativity_trace(q, start, t_end, dt, sample_every)
    return {'gamma_eff': gamma_eff,
            'En_avg': time_avg(times, values, min(t_end, AVERAGE_HORIZON)),
            'T_s': death_time(times, values, horizon=AVERAGE_HORIZON)}


def gamma_eff_sweep(p: PtDimerParams, start: DimerMomentState, gamma_eff_grid: Sequence[float],
                    t_end: float = AVERAGE_HORIZON, dt: float = 0.01, sample_every: int = 100,
                    map_fn: Callable = map) -> pd.DataFrame:
    """E_n averages and death times over gamma_eff; gamma' = gamma - 2 gamma_eff at each point.

    map_fn lets the caller dispatch points to a worker pool; rows keep grid order.
    """
    grid = [float(g) for g in gamma_eff_grid]
    if not grid:
        raise ScenarioError("gamma_eff_grid must not be empty")
    # reject bad points before any integration starts
    for g in grid:
        at_gamma_eff(p, g)
    rows = list(map_fn(lambda g: sweep_point(p, start, g, t_end, dt, sample_every), grid))
    return pd.DataFrame(rows, columns=['gamma_eff', 'En_avg', 'T_s'])
