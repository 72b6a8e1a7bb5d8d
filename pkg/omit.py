"""
Optomechanically induced transparency of a cavity coupled to the PT dimer.

Only the symmetric supermode of the dimer couples to the cavity. It has
frequency omega_m + mu and net damping gamma_m = (gamma - gamma')/2, so a
balanced dimer (gamma' = gamma) presents an undamped oscillator to the probe.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Sequence

import numpy as np
import pandas as pd

from errors import NumericalError, ScenarioError

logger = logging.getLogger(__name__)

WINDOW_POINTS = 20000
WINDOW_HALF_WIDTH = 0.1


@dataclass(frozen=True)
class OmitParams:
    delta: float
    omega_m: float
    mu: float
    kappa: float
    gamma: float
    gamma_gain: float
    g0: float
    drive: float

    def __post_init__(self):
        values = dict(delta=self.delta, omega_m=self.omega_m, mu=self.mu, kappa=self.kappa,
                      gamma=self.gamma, gamma_gain=self.gamma_gain, g0=self.g0, drive=self.drive)
        for name, value in values.items():
            if isinstance(value, complex) or not np.isfinite(value):
                raise ScenarioError(f"{name} must be a finite real number, got {value!r}")
        if self.kappa <= 0:
            raise ScenarioError(f"kappa must be > 0, got {self.kappa}")
        if self.drive < 0:
            raise ScenarioError(f"drive must be >= 0, got {self.drive}")
        if self.omega_m <= 0:
            raise ScenarioError(f"omega_m must be > 0, got {self.omega_m}")
        if self.g0 < 0:
            raise ScenarioError(f"g0 must be >= 0, got {self.g0}")

    @property
    def omega_m_eff(self) -> float:
        return self.omega_m + self.mu

    @property
    def gamma_m(self) -> float:
        return 0.5 * (self.gamma - self.gamma_gain)

    @property
    def g(self) -> float:
        return np.sqrt(2.0) * self.g0

    def with_gamma_m(self, gamma_m: float) -> "OmitParams":
        """Same loss gamma, gain adjusted so that (gamma - gamma')/2 = gamma_m."""
        return replace(self, gamma_gain=self.gamma - 2.0 * gamma_m)


class SteadyState(NamedTuple):
    a0: complex
    q0: float
    beta: complex


@dataclass(frozen=True)
class OmitResponse:
    delta_probe: float
    a_plus: complex
    chi: complex


# ======================================================================
# 1) Steady state and probe response
# ======================================================================

def steady_state(p: OmitParams) -> SteadyState:
    a0 = p.drive / (1j * p.delta + p.kappa / 2)
    q0 = 2.0 * p.g0 * abs(a0) ** 2 / p.omega_m
    beta = 1j * p.g0 * p.omega_m * q0
    return SteadyState(complex(a0), float(q0), complex(beta))


def _a_plus(p: OmitParams, deltas: np.ndarray) -> np.ndarray:
    beta = steady_state(p).beta
    d = np.atleast_1d(np.asarray(deltas, dtype=float))
    oscillator = p.omega_m_eff ** 2 - d ** 2 - 0.5j * d * p.gamma_m
    x = -1j * (p.delta + d) + p.kappa / 2
    y = 1j * (p.delta - d) + p.kappa / 2
    numerator = oscillator * x + beta
    denominator = oscillator * x * y + 2j * beta * p.delta
    if np.any(denominator == 0):
        at = d[np.flatnonzero(denominator == 0)[0]]
        raise NumericalError(f"probe response is singular at delta_probe={at!r} for {p!r}")
    return numerator / denominator


def response(p: OmitParams, delta_probe: float) -> OmitResponse:
    """Probe field a_+ at detuning delta_probe and its response chi = kappa a_+."""
    a = complex(_a_plus(p, np.array([delta_probe]))[0])
    return OmitResponse(delta_probe=float(delta_probe), a_plus=a, chi=p.kappa * a)


def spectrum(p: OmitParams, delta_grid: Sequence[float]) -> List[OmitResponse]:
    deltas = np.asarray(delta_grid, dtype=float)
    if deltas.ndim != 1 or deltas.size == 0:
        raise ScenarioError("delta_grid must be a nonempty 1-D sequence")
    a = _a_plus(p, deltas)
    return [OmitResponse(float(d), complex(ai), complex(p.kappa * ai)) for d, ai in zip(deltas, a)]


def to_frame(rows: Sequence[OmitResponse]) -> pd.DataFrame:
    return pd.DataFrame({'delta': [r.delta_probe for r in rows],
                         're_chi': [r.chi.real for r in rows],
                         'im_chi': [r.chi.imag for r in rows]})


# ======================================================================
# 2) Window metrics
# ======================================================================

def window_grid(p: OmitParams, points: int = WINDOW_POINTS,
                half_width: float = WINDOW_HALF_WIDTH) -> np.ndarray:
    """Uniform probe grid around omega_m + mu; an even point count straddles the centre."""
    return np.linspace(p.omega_m_eff - half_width, p.omega_m_eff + half_width, points)


def _interior_minimum(re_chi: np.ndarray) -> int:
    """Index of the lowest interior local minimum, or -1."""
    inner = re_chi[1:-1]
    is_min = (inner < re_chi[:-2]) & (inner <= re_chi[2:])
    candidates = np.flatnonzero(is_min) + 1
    if candidates.size == 0:
        return -1
    return int(candidates[np.argmin(re_chi[candidates])])


def _depth(re_chi: np.ndarray) -> float:
    peak = float(re_chi.max())
    i = _interior_minimum(re_chi)
    if i < 0 or peak <= 0:
        return 0.0
    return float(np.clip((peak - re_chi[i]) / peak, 0.0, 1.0))


def window_depth(rows: Sequence[OmitResponse]) -> float:
    """Relative suppression of Re chi at the window against the absorption peak."""
    if len(rows) < 3:
        return 0.0
    return _depth(np.array([r.chi.real for r in rows]))


def window_center(rows: Sequence[OmitResponse]) -> float:
    """Probe detuning of the window, NaN when there is none.

    Normally this is the lowest interior minimum of Re chi. An undamped or
    amplified supermode drives Re chi below zero (probe gain) just under its
    frequency, and Re chi rises back through zero at it; the centre is then
    that upward zero crossing, linearly interpolated.
    """
    re_chi = np.array([r.chi.real for r in rows])
    i = _interior_minimum(re_chi) if re_chi.size >= 3 else -1
    if i < 0:
        return float('nan')
    if re_chi[i] >= 0:
        return rows[i].delta_probe
    above = np.flatnonzero(re_chi[i + 1:] >= 0)
    if above.size == 0:
        return rows[i].delta_probe
    j = i + 1 + int(above[0])
    d0, d1 = rows[j - 1].delta_probe, rows[j].delta_probe
    return float(d0 + (d1 - d0) * (-re_chi[j - 1]) / (re_chi[j] - re_chi[j - 1]))


def depth_at(p: OmitParams, grid: np.ndarray = None) -> float:
    """window_depth on the fixed scan, without building response objects."""
    deltas = window_grid(p) if grid is None else grid
    return _depth((p.kappa * _a_plus(p, deltas)).real)


def required_coupling(p: OmitParams, target_depth: float, g_hi: float = 0.02,
                      rtol: float = 1e-6, max_iter: int = 200) -> float:
    """Smallest g0 whose window reaches target_depth, by bisection on a fixed probe grid."""
    if not 0.0 < target_depth < 1.0:
        raise ScenarioError(f"target_depth must lie in (0, 1), got {target_depth}")
    grid = window_grid(p)
    reached = depth_at(replace(p, g0=g_hi), grid)
    if reached < target_depth:
        raise ScenarioError(
            f"target depth {target_depth} is unreachable below g0={g_hi} (depth {reached:.4g})")

    lo, hi = 0.0, g_hi
    for _ in range(max_iter):
        if hi - lo <= rtol * hi:
            break
        mid = 0.5 * (lo + hi)
        if depth_at(replace(p, g0=mid), grid) >= target_depth:
            hi = mid
        else:
            lo = mid
    logger.info("gamma_m=%g: depth %.3g reached at g0=%.6g", p.gamma_m, target_depth, hi)
    return hi


def depth_map(p: OmitParams, g0_grid: Sequence[float], gamma_m_grid: Sequence[float]) -> pd.DataFrame:
    """Window depth over a (g0, gamma_m) grid, CSV columns g0, gamma_m, depth."""
    rows = []
    for gm in gamma_m_grid:
        base = p.with_gamma_m(float(gm))
        grid = window_grid(base)
        for g0 in g0_grid:
            rows.append({'g0': float(g0), 'gamma_m': float(gm),
                         'depth': depth_at(replace(base, g0=float(g0)), grid)})
    return pd.DataFrame(rows, columns=['g0', 'gamma_m', 'depth'])
