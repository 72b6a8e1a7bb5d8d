"""
Exact moment dynamics of the linearized cavity + oscillator model.

Operators are ordered u = (a, a^dag, b, b^dag). The first moments obey
d<u>/dt = M <u>, and the ordered second moments U_ij = <u_i u_j> obey the
Lyapunov flow dU/dt = M U + U M^T + N. Both are integrated with fixed-step RK4.
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np
import pandas as pd

from errors import NumericalError, ScenarioError
from params import InitialMoments, OscillatorTriple, SystemParams

logger = logging.getLogger(__name__)

A, AD, B, BD = 0, 1, 2, 3
# index of the adjoint operator: u_CONJ[i] = u_i^dag
CONJ = np.array([AD, A, BD, B])

# [u_i, u_j]
COMMUTATOR = np.zeros((4, 4))
COMMUTATOR[A, AD], COMMUTATOR[AD, A] = 1.0, -1.0
COMMUTATOR[B, BD], COMMUTATOR[BD, B] = 1.0, -1.0

# (q, p) = T (o, o^dag) for one mode, q = (o + o^dag)/sqrt2, p = i(o^dag - o)/sqrt2
_T_MODE = np.array([[1.0, 1.0], [-1j, 1j]]) / np.sqrt(2.0)
QUADRATURE = np.kron(np.eye(2), _T_MODE)
SYMPLECTIC = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))

SYMMETRY_TOL = 1e-10
COMMUTATOR_TOL = 1e-8
NEGATIVE_OCCUPATION_TOL = 1e-9
STEP_FRACTION = 0.05


# ======================================================================
# 1) State containers
# ======================================================================

@dataclass
class MomentState:
    """Moments at time t: mean = (<a>, <b>), second = U over (a, a^dag, b, b^dag)."""
    t: float
    mean: np.ndarray
    second: np.ndarray

    @classmethod
    def from_initial(cls, init: InitialMoments, t: float = 0.0) -> "MomentState":
        U = np.zeros((4, 4), dtype=complex)
        U[AD, A] = init.n_a
        U[A, AD] = init.n_a + 1.0
        U[BD, B] = init.n_b
        U[B, BD] = init.n_b + 1.0
        U[A, A], U[AD, AD] = init.aa, np.conj(init.aa)
        U[B, B], U[BD, BD] = init.bb, np.conj(init.bb)
        U[A, B] = U[B, A] = init.ab
        U[AD, BD] = U[BD, AD] = np.conj(init.ab)
        U[AD, B] = U[B, AD] = init.a_dag_b
        U[A, BD] = U[BD, A] = np.conj(init.a_dag_b)
        state = cls(t=t, mean=np.array([init.a_mean, init.b_mean], dtype=complex), second=U)
        margin = uncertainty_margin(state)
        if margin < -1e-9:
            raise ScenarioError(
                f"initial moments violate the uncertainty relation (margin {margin:.3e})")
        return state

    def full_mean(self) -> np.ndarray:
        """(<a>, <a^dag>, <b>, <b^dag>)."""
        a, b = self.mean
        return np.array([a, np.conj(a), b, np.conj(b)])

    @property
    def n_a(self) -> float:
        return float(self.second[AD, A].real)

    @property
    def n_b(self) -> float:
        return float(self.second[BD, B].real)

    @property
    def ab(self) -> complex:
        return complex(self.second[A, B])


@dataclass
class Trajectory:
    times: np.ndarray
    states: list

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def oscillator(self) -> List[OscillatorTriple]:
        """Oscillator triples along the trajectory."""
        return [s if isinstance(s, OscillatorTriple) else reduced_oscillator(s)
                for s in self.states]

    def to_frame(self) -> pd.DataFrame:
        """Columns t, re_b, im_b, n_b, re_bb, im_bb, n_a, re_ab, im_ab."""
        rows = []
        for t, s in zip(self.times, self.states):
            if isinstance(s, OscillatorTriple):
                tri, n_a, ab = s, np.nan, complex(np.nan, np.nan)
            else:
                tri, n_a, ab = reduced_oscillator(s), s.n_a, s.ab
            rows.append({
                't': t,
                're_b': tri.b_mean.real, 'im_b': tri.b_mean.imag,
                'n_b': tri.n_b,
                're_bb': tri.bb.real, 'im_bb': tri.bb.imag,
                'n_a': n_a,
                're_ab': ab.real, 'im_ab': ab.imag,
            })
        return pd.DataFrame(rows, columns=['t', 're_b', 'im_b', 'n_b', 're_bb', 'im_bb',
                                           'n_a', 're_ab', 'im_ab'])


# ======================================================================
# 2) Generator
# ======================================================================

def drift_matrix(p: SystemParams) -> np.ndarray:
    """Drift M of d<u>/dt = M <u> over u = (a, a^dag, b, b^dag)."""
    G = p.g_lin
    M = np.zeros((4, 4), dtype=complex)
    M[A, A] = 1j * p.delta - p.kappa / 2
    M[A, BD] = -1j * G
    M[AD, AD] = -1j * p.delta - p.kappa / 2
    M[AD, B] = 1j * G
    M[B, B] = -1j * p.omega_m - p.gamma / 2
    M[B, AD] = -1j * G
    M[BD, BD] = 1j * p.omega_m - p.gamma / 2
    M[BD, A] = 1j * G
    return M


def noise_matrix(p: SystemParams) -> np.ndarray:
    """Constant injections of the cavity and thermal oscillator channels."""
    N = np.zeros((4, 4), dtype=complex)
    N[A, AD] = p.kappa
    N[BD, B] = p.gamma * p.n_th
    N[B, BD] = p.gamma * (p.n_th + 1.0)
    return N


def lyapunov_rhs(M: np.ndarray, N: np.ndarray, U: np.ndarray) -> np.ndarray:
    return M @ U + U @ M.T + N


def linear_generator(M: np.ndarray, N: np.ndarray):
    """Affine generator (L, c) acting on y = (<u>, vec U) with row-major vec."""
    n = M.shape[0]
    eye = np.eye(n)
    L = np.zeros((n + n * n, n + n * n), dtype=complex)
    L[:n, :n] = M
    L[n:, n:] = np.kron(M, eye) + np.kron(eye, M)
    c = np.zeros(n + n * n, dtype=complex)
    c[n:] = N.reshape(-1)
    return L, c


def _rk4_step(L: np.ndarray, c: np.ndarray, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = L @ y + c
    k2 = L @ (y + 0.5 * dt * k1) + c
    k3 = L @ (y + 0.5 * dt * k2) + c
    k4 = L @ (y + dt * k3) + c
    return y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


# ======================================================================
# 3) Invariants
# ======================================================================

def conjugate_partner(U: np.ndarray, conj: np.ndarray = CONJ) -> np.ndarray:
    """Matrix V with V_ij = conj(U[conj j, conj i]); equals U for a valid state."""
    return U[np.ix_(conj, conj)].conj().T


def symmetrize(U: np.ndarray, conj: np.ndarray = CONJ) -> np.ndarray:
    return 0.5 * (U + conjugate_partner(U, conj))


def quadrature_covariance(state: MomentState) -> np.ndarray:
    """Real symmetric covariance of (x_a, p_a, x_b, p_b), vacuum variance 1/2."""
    m = state.full_mean()
    Uc = state.second - np.outer(m, m)
    S = QUADRATURE @ Uc @ QUADRATURE.T
    return np.real(0.5 * (S + S.T))


def uncertainty_margin(state: MomentState) -> float:
    """Smallest eigenvalue of V + (i/2) Omega; negative means unphysical."""
    V = quadrature_covariance(state)
    return float(np.linalg.eigvalsh(V + 0.5j * SYMPLECTIC).min())


def check_invariants(U: np.ndarray, t: float, commutator: np.ndarray = COMMUTATOR,
                     conj: np.ndarray = CONJ, occupations=((AD, A), (BD, B))) -> None:
    """Raise NumericalError when U breaks conjugation symmetry, the commutator ledger or n >= 0."""
    scale = max(1.0, float(np.abs(U).max()))
    asym = float(np.abs(U - conjugate_partner(U, conj)).max())
    if asym > SYMMETRY_TOL * scale:
        raise NumericalError(f"conjugation symmetry broken by {asym:.3e} at t={t:g}", time=t)
    ledger = float(np.abs((U - U.T) - commutator).max())
    if ledger > COMMUTATOR_TOL:
        raise NumericalError(f"commutator ledger drifted by {ledger:.3e} at t={t:g}", time=t)
    for i, j in occupations:
        if U[i, j].real < -NEGATIVE_OCCUPATION_TOL:
            raise NumericalError(f"negative occupation {U[i, j].real:.3e} at t={t:g}", time=t)


# ======================================================================
# 4) Propagation
# ======================================================================

def max_step(p: SystemParams) -> float:
    """Largest dt that resolves the fastest scale of the full model."""
    return STEP_FRACTION / max(p.omega_m, abs(p.delta), p.kappa)


def step_count(t_end: float, dt: float) -> int:
    if not t_end > 0:
        raise ScenarioError(f"t_end must be > 0, got {t_end}")
    if not dt > 0:
        raise ScenarioError(f"dt must be > 0, got {dt}")
    n = int(round(t_end / dt))
    if n < 1 or abs(n * dt - t_end) > 1e-9 * t_end:
        raise ScenarioError(f"t_end={t_end} is not a whole number of steps dt={dt}")
    return n


def integrate_lyapunov(M: np.ndarray, N: np.ndarray, mean0: np.ndarray, U0: np.ndarray,
                       t0: float, t_end: float, dt: float, sample_every: int,
                       check=check_invariants, conj: np.ndarray = CONJ):
    """RK4 over (<u>, U); yields (t, mean, U) every sample_every steps plus the end point."""
    if sample_every < 1:
        raise ScenarioError(f"sample_every must be >= 1, got {sample_every}")
    n_steps = step_count(t_end, dt)
    n = M.shape[0]
    L, c = linear_generator(M, N)
    y = np.concatenate([np.asarray(mean0, dtype=complex), np.asarray(U0, dtype=complex).reshape(-1)])
    check(y[n:].reshape(n, n), t0)
    yield t0, y[:n].copy(), y[n:].reshape(n, n).copy()

    for k in range(1, n_steps + 1):
        y = _rk4_step(L, c, y, dt)
        t = t0 + k * dt
        if not np.all(np.isfinite(y)):
            raise NumericalError(f"non-finite moments at t={t:g}", time=t)
        U = y[n:].reshape(n, n)
        if k % sample_every == 0 or k == n_steps:
            check(U, t)
        y[n:] = symmetrize(U, conj).reshape(-1)
        if k % sample_every == 0 or k == n_steps:
            yield t, y[:n].copy(), y[n:].reshape(n, n).copy()


def evolve(p: SystemParams, init: MomentState, t_end: float, dt: float,
           sample_every: int = 1) -> Trajectory:
    """Fixed-step RK4 trajectory of the full cavity + oscillator moments."""
    limit = max_step(p)
    if dt > limit * (1 + 1e-12):
        raise ScenarioError(f"dt={dt} does not resolve the fastest scale (limit {limit:.4g})")

    M, N = drift_matrix(p), noise_matrix(p)
    times, states = [], []
    for t, mean4, U in integrate_lyapunov(M, N, init.full_mean(), init.second,
                                          init.t, init.t + t_end, dt, sample_every):
        times.append(t)
        states.append(MomentState(t=t, mean=np.array([mean4[A], mean4[B]]), second=U))
    logger.info("Full model evolved to t=%g in %d samples", times[-1], len(times))
    return Trajectory(times=np.array(times), states=states)


def reduced_oscillator(state: MomentState) -> OscillatorTriple:
    """(<b>, <b^dag b>, <bb>) of the oscillator."""
    return OscillatorTriple(complex(state.mean[1]), float(state.second[BD, B].real),
                            complex(state.second[B, B]))
