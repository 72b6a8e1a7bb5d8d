"""
Scenario parameter types and the closed-form algebra of the adiabatic elimination.

Units follow the usual convention of the optomechanics literature: the
mechanical frequency is the unit (omega_m = 1) and every rate is dimensionless.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

from errors import ScenarioError

logger = logging.getLogger(__name__)

# Validity margin for the elimination: kappa >= 10 gamma or |delta - omega_m| >= 10 G
TRUST_RATIO = 10.0


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ScenarioError(message)


def _finite(**values: float) -> None:
    for name, value in values.items():
        if isinstance(value, complex):
            raise ScenarioError(f"{name} must be real, got {value!r}")
        if not math.isfinite(value):
            raise ScenarioError(f"{name} must be finite, got {value!r}")


# ======================================================================
# 1) Parameter types
# ======================================================================

@dataclass(frozen=True)
class SystemParams:
    """Linearized cavity + oscillator scenario (blue-detuned drive)."""
    omega_m: float
    kappa: float
    gamma: float
    delta: float
    g_lin: float
    n_th: float

    def __post_init__(self):
        _finite(omega_m=self.omega_m, kappa=self.kappa, gamma=self.gamma,
                delta=self.delta, g_lin=self.g_lin, n_th=self.n_th)
        _require(self.omega_m > 0, f"omega_m must be > 0, got {self.omega_m}")
        _require(self.kappa > 0, f"kappa must be > 0, got {self.kappa}")
        _require(self.gamma >= 0, f"gamma must be >= 0, got {self.gamma}")
        _require(self.n_th >= 0, f"n_th must be >= 0, got {self.n_th}")
        _require(self.g_lin >= 0, f"g_lin must be real and >= 0, got {self.g_lin}")

    @property
    def detuning_gap(self) -> float:
        """Delta - omega_m, the distance of the drive from the blue sideband."""
        return self.delta - self.omega_m

    @property
    def lorentzian_denominator(self) -> float:
        """D = 4 (Delta - omega_m)^2 + kappa^2."""
        return 4.0 * self.detuning_gap ** 2 + self.kappa ** 2

    @property
    def trusted(self) -> bool:
        """True when the adiabatic elimination is expected to hold."""
        return (self.kappa >= TRUST_RATIO * self.gamma
                or abs(self.detuning_gap) >= TRUST_RATIO * self.g_lin)

    def with_coupling(self, g_lin: float) -> "SystemParams":
        return replace(self, g_lin=g_lin)


@dataclass(frozen=True)
class EffectiveParams:
    """Constants of the eliminated oscillator.

    n_th_eff is None when gamma_eff is exactly zero; heating_rate then carries
    the whole bath coupling.
    """
    omega_eff: float
    gamma_eff: float
    n_th_eff: Optional[float]
    heating_rate: float


@dataclass(frozen=True)
class PtDimerParams:
    """Two oscillators with phonon tunneling mu, loss on the first and gain on the second.

    gamma_gain is signed: positive amplifies oscillator 2, negative is an
    ordinary loss of rate |gamma_gain|. n_th_gain is the corrected bath
    occupancy of that channel, entering the moment equations as
    d<n2>/dt = ... + gamma_gain <n2> - gamma_gain n_th_gain. For an amplifier
    the channel is completely positive only when n_th_gain <= -1.
    When gamma_gain < 0 the channel is an ordinary loss and n_th_gain is its
    (nonnegative) thermal occupancy.
    """
    omega: float
    gamma_loss: float
    gamma_gain: float
    mu: float
    n_th_loss: float = 0.0
    n_th_gain: float = 0.0

    def __post_init__(self):
        _finite(omega=self.omega, gamma_loss=self.gamma_loss, gamma_gain=self.gamma_gain,
                mu=self.mu, n_th_loss=self.n_th_loss, n_th_gain=self.n_th_gain)
        _require(self.omega > 0, f"omega must be > 0, got {self.omega}")
        _require(self.mu >= 0, f"mu must be >= 0, got {self.mu}")
        _require(self.gamma_loss >= 0, f"gamma_loss must be >= 0, got {self.gamma_loss}")
        _require(self.n_th_loss >= 0, f"n_th_loss must be >= 0, got {self.n_th_loss}")
        _require(self.gamma_gain >= 0 or self.n_th_gain >= 0,
                 f"a lossy second channel (gamma_gain={self.gamma_gain}) needs n_th_gain >= 0, "
                 f"got {self.n_th_gain}")

    def channel_rates(self) -> tuple:
        """Lindblad (down, up) rates of oscillator 1 and oscillator 2."""
        down_1 = self.gamma_loss * (self.n_th_loss + 1.0)
        up_1 = self.gamma_loss * self.n_th_loss
        gamma_2 = -self.gamma_gain
        down_2 = gamma_2 * (self.n_th_gain + 1.0)
        up_2 = gamma_2 * self.n_th_gain
        return (down_1, up_1), (down_2, up_2)

    @property
    def completely_positive(self) -> bool:
        (d1, u1), (d2, u2) = self.channel_rates()
        return min(d1, u1, d2, u2) >= 0.0

    @property
    def gamma_eff(self) -> float:
        """Net dissipation of the pair, (gamma - gamma') / 2."""
        return 0.5 * (self.gamma_loss - self.gamma_gain)


class OscillatorTriple(NamedTuple):
    """(<b>, <b^dag b>, <bb>) of a single oscillator."""
    b_mean: complex
    n_b: float
    bb: complex


@dataclass(frozen=True)
class InitialMoments:
    """Initial first and second moments of the cavity + oscillator pair."""
    b_mean: complex = 0j
    n_b: float = 0.0
    bb: complex = 0j
    n_a: float = 0.0
    ab: complex = 0j
    a_mean: complex = 0j
    # <a a> and <a^dag b>; zero unless a scenario sets them
    aa: complex = field(default=0j)
    a_dag_b: complex = field(default=0j)

    def __post_init__(self):
        _require(self.n_b >= 0, f"n_b must be >= 0, got {self.n_b}")
        _require(self.n_a >= 0, f"n_a must be >= 0, got {self.n_a}")

    def oscillator(self) -> OscillatorTriple:
        return OscillatorTriple(complex(self.b_mean), float(self.n_b), complex(self.bb))

    @classmethod
    def coherent_oscillator(cls, n_b: float) -> "InitialMoments":
        """Cavity in vacuum, oscillator coherent with real amplitude sqrt(n_b)."""
        b = math.sqrt(n_b)
        return cls(b_mean=complex(b), n_b=n_b, bb=complex(b * b))


# ======================================================================
# 2) Elimination algebra
# ======================================================================

def effective_params(p: SystemParams) -> EffectiveParams:
    """Effective frequency, dissipation and corrected bath occupancy of the oscillator."""
    D = p.lorentzian_denominator
    g2 = p.g_lin ** 2
    antidamping = 4.0 * g2 * p.kappa / D
    omega_eff = p.omega_m + 4.0 * g2 * p.detuning_gap / D
    gamma_eff = p.gamma - antidamping
    heating_rate = p.gamma * p.n_th + antidamping
    n_th_eff = heating_rate / gamma_eff if gamma_eff != 0.0 else None

    if not p.trusted:
        logger.warning("Elimination outside its validity regime: kappa=%g gamma=%g "
                       "|delta-omega_m|=%g G=%g", p.kappa, p.gamma, abs(p.detuning_gap), p.g_lin)
    return EffectiveParams(omega_eff=omega_eff, gamma_eff=gamma_eff,
                           n_th_eff=n_th_eff, heating_rate=heating_rate)


def balance_coupling(p: SystemParams, target_gain: float) -> float:
    """Coupling G* at which the effective dissipation equals -target_gain.

    target_gain = gamma gives the balanced point gamma_eff/gamma = -1,
    target_gain = 0 the gain threshold.
    """
    if not math.isfinite(target_gain) or target_gain < -p.gamma:
        raise ScenarioError(
            f"target_gain={target_gain} is infeasible: it must be >= -gamma={-p.gamma}")
    return math.sqrt((p.gamma + target_gain) * p.lorentzian_denominator / (4.0 * p.kappa))


def threshold_coupling(p: SystemParams) -> float:
    """Coupling at which gamma_eff crosses zero."""
    return balance_coupling(p, 0.0)


def modified_initial(p: SystemParams, init: InitialMoments) -> InitialMoments:
    """Oscillator initial moments corrected for the eliminated cavity."""
    D = p.lorentzian_denominator
    G = p.g_lin
    n_b = ((1.0 + 8.0 * G ** 2 / D) * init.n_b
           + 4.0 * G ** 2 * init.n_a / D
           - 8.0 * G * p.detuning_gap * complex(init.ab).real / D)
    if n_b < 0:
        raise ScenarioError(
            f"modified phonon number is negative ({n_b:.6g}); <ab>(0)={init.ab} is "
            "unphysical for the elimination")
    if G == 0.0:
        return init
    b = math.sqrt(n_b)
    return replace(init, b_mean=complex(b), n_b=n_b, bb=complex(b * b))
