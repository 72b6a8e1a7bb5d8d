"""
Brute-force reference: the master equations integrated on a truncated Fock space.

Only meant for small instances (few quanta, cutoffs up to about 20 per mode).
Operators, states and the Liouvillian are built with qutip; the vectorized
density operator is propagated with fixed-step RK4, re-hermitized after every
step and never renormalized, so trace loss shows up in the checks.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple, Union

import numpy as np
import pandas as pd
import qutip as qt
from scipy.linalg import eigvalsh

import entanglement
import moments
from errors import LeakageError, NumericalError, ScenarioError
from params import PtDimerParams, SystemParams

logger = logging.getLogger(__name__)

MODELS = ('optomech', 'dimer')
LEAKAGE_TOL = 1e-6
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8
PURITY_TOL = 1e-10

DensityLike = Union[qt.Qobj, np.ndarray]


@dataclass(frozen=True)
class FockConfig:
    """Cutoffs of the two modes.

    For the optomechanical model cutoff_a is the cavity and cutoff_b the
    oscillator; for the dimer they are oscillators 1 and 2.
    """
    cutoff_a: int
    cutoff_b: int
    model: str = 'optomech'

    def __post_init__(self):
        if self.model not in MODELS:
            raise ScenarioError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.cutoff_a < 2 or self.cutoff_b < 2:
            raise ScenarioError(f"cutoffs must be >= 2, got {self.cutoff_a}, {self.cutoff_b}")

    @property
    def dim(self) -> int:
        return self.cutoff_a * self.cutoff_b

    @property
    def dims(self) -> list:
        return [[self.cutoff_a, self.cutoff_b], [self.cutoff_a, self.cutoff_b]]


# ======================================================================
# 1) Operators and states
# ======================================================================

def mode_operators(cfg: FockConfig) -> Tuple[qt.Qobj, qt.Qobj]:
    """Annihilators of the first and second mode on the product space."""
    a = qt.tensor(qt.destroy(cfg.cutoff_a), qt.qeye(cfg.cutoff_b))
    b = qt.tensor(qt.qeye(cfg.cutoff_a), qt.destroy(cfg.cutoff_b))
    return a, b


def coherent(alpha: complex, n: int) -> qt.Qobj:
    """Coherent state on n levels (displacement of the truncated vacuum)."""
    return qt.coherent_dm(n, complex(alpha))


def thermal(n_bar: float, n: int) -> qt.Qobj:
    if n_bar < 0:
        raise ScenarioError(f"n_bar must be >= 0, got {n_bar}")
    return qt.thermal_dm(n, float(n_bar))


def product_state(rho_a: qt.Qobj, rho_b: qt.Qobj) -> qt.Qobj:
    return qt.tensor(rho_a, rho_b)


def tmsv_density(r: float, n: int) -> qt.Qobj:
    """Two-mode squeezed vacuum truncated to n levels per mode."""
    amps = np.zeros(n * n, dtype=complex)
    amps[np.arange(n) * (n + 1)] = (-np.tanh(r)) ** np.arange(n)
    psi = qt.Qobj(amps.reshape(-1, 1), dims=[[n, n], [1, 1]])
    return qt.ket2dm(psi.unit())


def _as_qobj(cfg: FockConfig, rho: DensityLike) -> qt.Qobj:
    if isinstance(rho, qt.Qobj):
        return rho
    return qt.Qobj(np.asarray(rho), dims=cfg.dims)


def _as_array(rho: DensityLike) -> np.ndarray:
    return rho.full() if isinstance(rho, qt.Qobj) else np.array(rho, dtype=complex)


# ======================================================================
# 2) Generators
# ======================================================================

def _liouvillian(H: qt.Qobj, channels: list):
    """Sparse Liouvillian; channel rates may be negative for non-CP amplifiers."""
    L = qt.liouvillian(H)
    for rate, op in channels:
        if rate != 0.0:
            L = L + rate * qt.lindblad_dissipator(op)
    return L.to('csr').data_as('csr_matrix')


def _optomech_generator(cfg: FockConfig, p: SystemParams):
    a, b = mode_operators(cfg)
    H = -p.delta * a.dag() * a + p.omega_m * b.dag() * b + p.g_lin * (a * b + a.dag() * b.dag())
    return _liouvillian(H, [(p.kappa, a), (p.gamma * (p.n_th + 1.0), b),
                            (p.gamma * p.n_th, b.dag())])


def _dimer_generator(cfg: FockConfig, p: PtDimerParams):
    b1, b2 = mode_operators(cfg)
    H = p.omega * (b1.dag() * b1 + b2.dag() * b2) + p.mu * (b1.dag() * b2 + b2.dag() * b1)
    (down_1, up_1), (down_2, up_2) = p.channel_rates()
    return _liouvillian(H, [(down_1, b1), (up_1, b1.dag()), (down_2, b2), (up_2, b2.dag())])


def _rk4_step(L, v: np.ndarray, dt: float) -> np.ndarray:
    k1 = L @ v
    k2 = L @ (v + 0.5 * dt * k1)
    k3 = L @ (v + 0.5 * dt * k2)
    k4 = L @ (v + dt * k3)
    return v + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


# ======================================================================
# 3) Observables
# ======================================================================

def _optomech_row(cfg: FockConfig, rho: qt.Qobj, t: float) -> dict:
    a, b = mode_operators(cfg)
    bm = complex(qt.expect(b, rho))
    bb = complex(qt.expect(b * b, rho))
    ab = complex(qt.expect(a * b, rho))
    return {'t': t, 're_b': bm.real, 'im_b': bm.imag,
            'n_b': float(np.real(qt.expect(b.dag() * b, rho))),
            're_bb': bb.real, 'im_bb': bb.imag,
            'n_a': float(np.real(qt.expect(a.dag() * a, rho))),
            're_ab': ab.real, 'im_ab': ab.imag}


def dimer_moments(cfg: FockConfig, rho: DensityLike, t: float = 0.0) -> entanglement.DimerMomentState:
    """Second-moment matrix over (b1^dag, b1, b2^dag, b2) read from a density matrix."""
    rho = _as_qobj(cfg, rho)
    b1, b2 = mode_operators(cfg)
    ops = [b1.dag(), b1, b2.dag(), b2]
    U = np.array([[complex(qt.expect(oi * oj, rho)) for oj in ops] for oi in ops])
    # truncated ladders break [b, b^dag] = 1 on the top level
    U[entanglement.B1, entanglement.B1D] = U[entanglement.B1D, entanglement.B1] + 1.0
    U[entanglement.B2, entanglement.B2D] = U[entanglement.B2D, entanglement.B2] + 1.0
    return entanglement.DimerMomentState(t=t, U=moments.symmetrize(U, entanglement.CONJ))


def _dimer_row(cfg: FockConfig, rho: qt.Qobj, t: float) -> dict:
    return dimer_row(dimer_moments(cfg, rho, t))


def dimer_row(st: entanglement.DimerMomentState) -> dict:
    """Same columns as the dimer oracle trace, from the moment engine."""
    m12 = complex(st.U[entanglement.B1, entanglement.B2])
    return {'t': st.t, 'n1': st.n1, 'n2': st.n2, 're_b1b2': m12.real, 'im_b1b2': m12.imag,
            'En': entanglement.log_negativity(entanglement.to_covariance(st))}


# ======================================================================
# 4) Propagation and checks
# ======================================================================

def _check_density(cfg: FockConfig, rho: np.ndarray, t: float, full: bool) -> None:
    pops = np.real(np.diag(rho)).reshape(cfg.cutoff_a, cfg.cutoff_b)
    top = max(pops[-1, :].sum(), pops[:, -1].sum())
    if top > LEAKAGE_TOL:
        raise LeakageError(f"population {top:.3e} on the highest Fock level at t={t:g}; "
                           "raise the cutoff", time=t)
    if not full:
        return
    trace_err = abs(np.trace(rho) - 1.0)
    if trace_err > TRACE_TOL * max(1.0, t):
        raise NumericalError(f"trace drifted by {trace_err:.3e} at t={t:g}", time=t)
    lowest = float(eigvalsh(rho).min())
    if lowest < -POSITIVITY_TOL:
        raise NumericalError(f"density matrix eigenvalue {lowest:.3e} at t={t:g}", time=t)


def fock_evolve(cfg: FockConfig, p: Union[SystemParams, PtDimerParams], rho0: DensityLike,
                t_end: float, dt: float, sample_every: int = 1) -> pd.DataFrame:
    """RK4 on the density operator; returns the observable trace of the chosen model."""
    rho = _as_array(rho0)
    if rho.shape != (cfg.dim, cfg.dim):
        raise ScenarioError(f"rho0 has shape {rho.shape}, expected {(cfg.dim, cfg.dim)}")
    if cfg.model == 'optomech':
        if not isinstance(p, SystemParams):
            raise ScenarioError("optomech oracle needs SystemParams")
        limit = moments.max_step(p)
        L = _optomech_generator(cfg, p)
        row = _optomech_row
    else:
        if not isinstance(p, PtDimerParams):
            raise ScenarioError("dimer oracle needs PtDimerParams")
        limit = entanglement.max_step(p)
        L = _dimer_generator(cfg, p)
        row = _dimer_row
    if dt > limit * (1 + 1e-12):
        raise ScenarioError(f"dt={dt} does not resolve the fastest scale (limit {limit:.4g})")
    if sample_every < 1:
        raise ScenarioError(f"sample_every must be >= 1, got {sample_every}")
    n_steps = moments.step_count(t_end, dt)

    _check_density(cfg, rho, 0.0, full=True)
    rows: List[dict] = [row(cfg, _as_qobj(cfg, rho), 0.0)]
    # qutip vectorizes operators column by column
    v = rho.ravel(order='F')
    for k in range(1, n_steps + 1):
        v = _rk4_step(L, v, dt)
        rho = v.reshape((cfg.dim, cfg.dim), order='F')
        rho = 0.5 * (rho + rho.conj().T)
        v = rho.ravel(order='F')
        t = k * dt
        if not np.all(np.isfinite(rho)):
            raise NumericalError(f"non-finite density matrix at t={t:g}", time=t)
        sampled = k % sample_every == 0 or k == n_steps
        _check_density(cfg, rho, t, full=sampled)
        if sampled:
            rows.append(row(cfg, _as_qobj(cfg, rho), t))
    logger.info("Fock oracle (%s, %dx%d) reached t=%g", cfg.model, cfg.cutoff_a, cfg.cutoff_b, t_end)
    return pd.DataFrame(rows)


def compare(oracle_trace: pd.DataFrame, moment_trace: pd.DataFrame) -> Dict[str, float]:
    """max_t |oracle - moments| / max(1, |moments|) for every shared observable."""
    if len(oracle_trace) != len(moment_trace) or not np.allclose(
            oracle_trace['t'].to_numpy(), moment_trace['t'].to_numpy(), rtol=0.0, atol=1e-9):
        raise ScenarioError("oracle and moment traces are sampled on different grids")
    report = {}
    for column in oracle_trace.columns:
        if column == 't' or column not in moment_trace.columns:
            continue
        o = oracle_trace[column].to_numpy(dtype=float)
        m = moment_trace[column].to_numpy(dtype=float)
        report[column] = float(np.max(np.abs(o - m) / np.maximum(1.0, np.abs(m))))
    return report


def _purified(rho: qt.Qobj) -> qt.Qobj:
    """Pure states as kets, so qutip skips the matrix square root of a projector."""
    if abs((rho * rho).tr() - 1.0) > PURITY_TOL:
        return rho
    return rho.eigenstates()[1][-1]


def density_fidelity(rho: qt.Qobj, sigma: qt.Qobj) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2; qutip returns the root."""
    return float(np.clip(qt.fidelity(_purified(rho), _purified(sigma)) ** 2, 0.0, 1.0))
