"""
Test suite for the PT dimer spectrum in ptcore.py:
- eigenvalues(): closed-form supermode frequencies
- sweep(): closed form checked against the direct eigensolver
- bifurcation_exponent(): square-root branch point at the EP
"""

import math

import numpy as np
import pytest
from hypothesis import example, given, strategies as st, settings

import ptcore
from errors import ScenarioError
from params import PtDimerParams


BALANCED = PtDimerParams(omega=1.0, gamma_loss=0.004, gamma_gain=0.004, mu=0.0)


# ============================================================================
# Unit Tests for eigenvalues()
# ============================================================================

class TestEigenvalues:
    """Unit tests for the closed-form eigenvalues() function."""

    def test_uncoupled(self):
        """Test that mu = 0 gives the bare gain and loss frequencies."""
        pt = ptcore.eigenvalues(BALANCED)
        assert pt.lambda_plus == pytest.approx(1.0 + 0.002j, abs=1e-15)
        assert pt.lambda_minus == pytest.approx(1.0 - 0.002j, abs=1e-15)

    def test_exceptional_point(self):
        """Test mu_EP = (gamma + gamma') / 4."""
        assert ptcore.exceptional_point(BALANCED) == pytest.approx(0.002)

    def test_degenerate_at_ep(self):
        """Test that both supermodes coalesce at mu = mu_EP."""
        pt = ptcore.eigenvalues(PtDimerParams(1.0, 0.004, 0.004, 0.002))
        assert abs(pt.lambda_plus - pt.lambda_minus) <= 1e-10

    def test_broken_phase_splitting(self):
        """Test the real splitting sqrt(mu^2 - mu_EP^2) above the EP."""
        pt = ptcore.eigenvalues(PtDimerParams(1.0, 0.004, 0.004, 0.02))
        assert pt.lambda_plus.real == pytest.approx(1.0 + math.sqrt(0.02 ** 2 - 0.002 ** 2), abs=1e-15)
        assert pt.lambda_plus.real == pytest.approx(1.0198997, abs=1e-7)
        assert pt.lambda_minus.real == pytest.approx(0.9801003, abs=1e-7)
        assert pt.lambda_plus.imag == pytest.approx(0.0, abs=1e-15)

    def test_unbalanced_shift(self):
        """Test that unequal gain and loss shift both imaginary parts by -(gamma - gamma')/4."""
        p = PtDimerParams(omega=1.0, gamma_loss=0.006, gamma_gain=0.002, mu=0.05)
        pt = ptcore.eigenvalues(p)
        assert pt.lambda_plus.imag == pytest.approx(-0.001, abs=1e-15)
        assert pt.lambda_minus.imag == pytest.approx(-0.001, abs=1e-15)
        assert ptcore.effective_dissipation(p) == pytest.approx(0.002)

    def test_trace_identity(self):
        """Test lambda_+ + lambda_- = tr H."""
        p = PtDimerParams(omega=1.3, gamma_loss=0.01, gamma_gain=0.003, mu=0.004)
        pt = ptcore.eigenvalues(p)
        assert pt.lambda_plus + pt.lambda_minus == pytest.approx(np.trace(ptcore.hamiltonian(p)))


# ============================================================================
# Unit Tests for sweep()
# ============================================================================

class TestSweep:
    """Unit tests for the sweep() function."""

    def test_matches_direct_eigensolver(self):
        """Test that the closed form matches the eigensolver to 1e-12 across the EP."""
        spectra = ptcore.sweep(BALANCED, np.linspace(0.0, 0.01, 1000))
        assert len(spectra) == 1000
        assert max(s.direct_error for s in spectra) <= 1e-12

    def test_sweep_is_ordered(self):
        """Test that Re lambda_- <= Re lambda_+ everywhere on the grid."""
        spectra = ptcore.sweep(BALANCED, np.linspace(0.0, 0.01, 101))
        assert all(s.lambda_minus.real <= s.lambda_plus.real for s in spectra)

    def test_frame_columns(self):
        """Test the CSV layout."""
        frame = ptcore.to_frame(ptcore.sweep(BALANCED, [0.0, 0.005]))
        assert list(frame.columns) == ['mu', 're_lp', 'im_lp', 're_lm', 'im_lm']
        assert frame['mu'].tolist() == [0.0, 0.005]

    @pytest.mark.parametrize("grid", [[], [-0.1, 0.0], [0.0, float('nan')]])
    def test_invalid_grid(self, grid):
        """Test that empty, negative or non-finite grids are rejected."""
        with pytest.raises(ScenarioError):
            ptcore.sweep(BALANCED, grid)


# ============================================================================
# Unit Tests for bifurcation_exponent()
# ============================================================================

class TestBifurcation:
    """Unit tests for the bifurcation_exponent() function."""

    def test_square_root_branch(self):
        """Test that d(splitting)/dmu diverges with exponent -1/2 at the EP."""
        assert ptcore.bifurcation_exponent(BALANCED) == pytest.approx(-0.5, abs=0.05)

    def test_too_few_offsets(self):
        """Test that fewer than five offsets are rejected."""
        with pytest.raises(ScenarioError):
            ptcore.bifurcation_exponent(BALANCED, offsets=[1e-9, 1e-8])


# ============================================================================
# Property-Based Tests
# ============================================================================

class TestSpectrumProperties:
    """Property-based tests for the dimer spectrum."""

    @settings(max_examples=1000)
    @given(omega=st.floats(0.1, 10.0), gamma=st.floats(0.0, 0.1), gamma_gain=st.floats(-0.1, 0.1),
           mu=st.floats(0.0, 0.2))
    @example(omega=1.0, gamma=0.0, gamma_gain=0.0, mu=5e-324)
    def test_closed_form_solves_characteristic_polynomial(self, omega, gamma, gamma_gain, mu):
        """Test that both closed-form eigenvalues annihilate det(H - lambda I)."""
        p = PtDimerParams(omega=omega, gamma_loss=gamma, gamma_gain=gamma_gain, mu=mu)
        H = ptcore.hamiltonian(p)
        pt = ptcore.eigenvalues(p)
        for lam in (pt.lambda_plus, pt.lambda_minus):
            # det(H - lambda I) expanded about omega, so a subnormal mu cannot reach LU
            x = lam - omega
            residual = (H[0, 0] - omega - x) * (H[1, 1] - omega - x) - H[0, 1] * H[1, 0]
            assert abs(residual) <= 1e-12 * max(1.0, omega) ** 2

    @settings(max_examples=1000)
    @given(gamma=st.floats(1e-4, 0.1), mu=st.floats(0.0, 0.2))
    def test_balanced_spectrum_is_real_or_conjugate(self, gamma, mu):
        """Test PT symmetry: real spectrum above the EP, conjugate pair below."""
        p = PtDimerParams(omega=1.0, gamma_loss=gamma, gamma_gain=gamma, mu=mu)
        pt = ptcore.eigenvalues(p)
        if mu >= ptcore.exceptional_point(p):
            assert abs(pt.lambda_plus.imag) <= 1e-15
        else:
            assert pt.lambda_plus == pytest.approx(pt.lambda_minus.conjugate(), abs=1e-15)
