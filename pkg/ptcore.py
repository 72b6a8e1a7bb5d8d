"""
Spectrum of the PT dimer: two oscillators of frequency omega, one lossy
(gamma) and one amplified (gamma'), coupled by phonon tunneling mu.
"""

import cmath
import logging
from dataclasses import dataclass, replace
from typing import List, Sequence

import numpy as np
import pandas as pd

from errors import ScenarioError
from params import PtDimerParams

logger = logging.getLogger(__name__)

DIRECT_TOL = 1e-12
TIE_TOL = 1e-9


@dataclass(frozen=True)
class PtSpectrum:
    lambda_plus: complex
    lambda_minus: complex
    mu: float
    # largest |closed form - direct eigensolver| at this point, NaN if not checked
    direct_error: float = float('nan')


def hamiltonian(p: PtDimerParams) -> np.ndarray:
    """Non-Hermitian 2x2 dimer Hamiltonian with loss on mode 1 and gain on mode 2."""
    return np.array([[p.omega - 0.5j * p.gamma_loss, p.mu],
                     [p.mu, p.omega + 0.5j * p.gamma_gain]])


def exceptional_point(p: PtDimerParams) -> float:
    return 0.25 * (p.gamma_loss + p.gamma_gain)


def effective_dissipation(p: PtDimerParams) -> float:
    """Net dissipation (gamma - gamma')/2 shared by the supermodes above the EP."""
    return p.gamma_eff


def _order(pair, scale: float):
    """Sort by real part, ties (within TIE_TOL * scale) by imaginary part."""
    a, b = pair
    if abs(a.real - b.real) <= TIE_TOL * scale:
        return (a, b) if a.imag <= b.imag else (b, a)
    return (a, b) if a.real < b.real else (b, a)


def eigenvalues(p: PtDimerParams) -> PtSpectrum:
    """Closed-form supermode frequencies lambda_-, lambda_+ (principal square-root branch)."""
    centre = p.omega - 0.25j * (p.gamma_loss - p.gamma_gain)
    g = exceptional_point(p)
    split = cmath.sqrt(complex(p.mu ** 2 - g ** 2, 0.0))
    return PtSpectrum(lambda_plus=centre + split, lambda_minus=centre - split, mu=p.mu)


def direct_eigenvalues(p: PtDimerParams) -> np.ndarray:
    """Eigenvalues of the assembled Hamiltonian, in sweep order."""
    scale = max(1.0, abs(p.omega))
    # shifting out omega keeps the eigensolver's backward error on the scale of the rates
    shifted = np.linalg.eigvals(hamiltonian(p) - p.omega * np.eye(2)) + p.omega
    return np.array(_order(shifted, scale))


def sweep(p: PtDimerParams, mu_grid: Sequence[float]) -> List[PtSpectrum]:
    """Spectrum over a mu grid, checked point by point against the direct eigensolver."""
    mus = np.asarray(mu_grid, dtype=float)
    if mus.ndim != 1 or mus.size == 0:
        raise ScenarioError("mu_grid must be a nonempty 1-D sequence")
    if np.any(mus < 0) or not np.all(np.isfinite(mus)):
        raise ScenarioError("mu_grid values must be finite and >= 0")

    out = []
    worst = 0.0
    for mu in mus:
        q = replace(p, mu=float(mu))
        pt = eigenvalues(q)
        closed = _order((pt.lambda_plus, pt.lambda_minus), max(1.0, abs(q.omega)))
        direct = direct_eigenvalues(q)
        err = float(np.max(np.abs(np.array(closed) - direct)))
        worst = max(worst, err)
        if err > DIRECT_TOL:
            logger.warning("mu=%.6g: direct eigensolver deviates from the closed form by %.3e",
                           mu, err)
        out.append(replace(pt, direct_error=err))
    logger.debug("Swept %d mu points, worst direct deviation %.3e", len(out), worst)
    return out


def to_frame(spectra: Sequence[PtSpectrum]) -> pd.DataFrame:
    """CSV table mu, re_lp, im_lp, re_lm, im_lm."""
    return pd.DataFrame({
        'mu': [s.mu for s in spectra],
        're_lp': [s.lambda_plus.real for s in spectra],
        'im_lp': [s.lambda_plus.imag for s in spectra],
        're_lm': [s.lambda_minus.real for s in spectra],
        'im_lm': [s.lambda_minus.imag for s in spectra],
    })


def bifurcation_exponent(p: PtDimerParams, offsets: Sequence[float] = None) -> float:
    """Log-log slope of d(Re splitting)/dmu against mu - mu_EP just above the EP.

    A square-root branch point gives -0.5.
    """
    mu_ep = exceptional_point(p)
    if offsets is None:
        offsets = np.geomspace(1e-9, 1e-6, 61) * max(mu_ep, 1e-3)
    x = np.asarray(offsets, dtype=float)
    if x.size < 5 or np.any(x <= 0):
        raise ScenarioError("offsets must hold at least 5 positive values")
    spectra = [eigenvalues(replace(p, mu=mu_ep + d)) for d in x]
    splitting = np.array([s.lambda_plus.real - s.lambda_minus.real for s in spectra])
    slope = np.gradient(splitting, x)
    fit = np.polyfit(np.log(x[1:-1]), np.log(np.abs(slope[1:-1])), 1)
    return float(fit[0])
