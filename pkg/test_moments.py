"""
Test suite for the full cavity + oscillator moment engine in moments.py:
- drift_matrix() / noise_matrix(): generator structure
- evolve(): RK4 Lyapunov flow, invariants and convergence order
- reduced_oscillator(): oscillator projection
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st, settings
from scipy.linalg import expm

import moments
from errors import NumericalError, ScenarioError
from moments import A, AD, B, BD, MomentState, Trajectory
from params import InitialMoments, OscillatorTriple, SystemParams


FIG2 = SystemParams(omega_m=1.0, kappa=0.1, gamma=1e-5, delta=3.0, g_lin=0.04, n_th=1000.0)
SMOOTH = SystemParams(omega_m=1.0, kappa=0.5, gamma=0.1, delta=2.0, g_lin=0.2, n_th=1.0)


def coherent_pair(a: complex = 0j, b: complex = 0j) -> MomentState:
    """Product of two coherent states."""
    return MomentState.from_initial(InitialMoments(
        a_mean=a, n_a=abs(a) ** 2, aa=a * a, b_mean=b, n_b=abs(b) ** 2, bb=b * b,
        ab=a * b, a_dag_b=np.conj(a) * b))


# ============================================================================
# Unit Tests for drift_matrix() and noise_matrix()
# ============================================================================

class TestGenerator:
    """Unit tests for the drift and noise matrices."""

    def test_decoupled_drift(self):
        """Test that G = 0 gives a diagonal drift with the bare rates."""
        M = moments.drift_matrix(FIG2.with_coupling(0.0))
        assert np.count_nonzero(M - np.diag(np.diag(M))) == 0
        assert M[A, A] == pytest.approx(3j - 0.05)
        assert M[B, B] == pytest.approx(-1j - 0.5e-5)

    def test_first_moment_rows(self):
        """Test the <a> and <b> rows against the linearized Langevin equations."""
        M = moments.drift_matrix(FIG2)
        assert M[A, A] == pytest.approx(1j * 3.0 - 0.05)
        assert M[A, BD] == pytest.approx(-0.04j)
        assert M[B, AD] == pytest.approx(-0.04j)
        assert M[A, B] == 0 and M[A, AD] == 0

    def test_conjugate_rows(self):
        """Test that rows of conjugate operators are element-wise conjugates."""
        M = moments.drift_matrix(SMOOTH)
        c = moments.CONJ
        assert np.allclose(M[np.ix_(c, c)], M.conj())

    def test_noise_at_zero_temperature(self):
        """Test that n_th = 0 injects only into <b b^dag>."""
        N = moments.noise_matrix(SystemParams(1.0, 0.1, 0.01, 3.0, 0.04, 0.0))
        assert N[BD, B] == 0
        assert N[B, BD] == pytest.approx(0.01)
        assert N[A, AD] == pytest.approx(0.1)
        assert N[AD, A] == 0

    def test_fig2_thermal_injection(self):
        """Test that the <b^dag b> injection equals gamma n_th."""
        assert moments.noise_matrix(FIG2)[BD, B] == pytest.approx(1e-2)

    def test_photon_number_row(self):
        """Test d<a^dag a>/dt = -kappa n_a + iG(<ab> - <a^dag b^dag>)."""
        state = coherent_pair(0.3 + 0.1j, 0.7 - 0.2j)
        U = state.second
        dU = moments.lyapunov_rhs(moments.drift_matrix(SMOOTH), moments.noise_matrix(SMOOTH), U)
        G = SMOOTH.g_lin
        expected = -SMOOTH.kappa * U[AD, A] + 1j * G * (U[A, B] - U[AD, BD])
        assert dU[AD, A] == pytest.approx(expected)

    def test_correlation_row_has_vacuum_source(self):
        """Test that <ab> is fed by -iG even from the vacuum."""
        U = coherent_pair().second
        dU = moments.lyapunov_rhs(moments.drift_matrix(SMOOTH), moments.noise_matrix(SMOOTH), U)
        assert dU[A, B] == pytest.approx(-1j * SMOOTH.g_lin)


# ============================================================================
# Unit Tests for evolve()
# ============================================================================

class TestEvolve:
    """Unit tests for the evolve() function."""

    def test_thermalization(self):
        """Test <b^dag b>(t) = n_th (1 - exp(-gamma t)) at t = 1/gamma with G = 0."""
        p = SystemParams(omega_m=1.0, kappa=1.0, gamma=0.1, delta=1.0, g_lin=0.0, n_th=2.0)
        traj = moments.evolve(p, coherent_pair(), 10.0, 0.01, sample_every=100)
        n_b = traj.states[-1].n_b
        assert n_b == pytest.approx(2.0 * (1 - np.exp(-1.0)), rel=1e-6)

    def test_free_cavity_decay(self):
        """Test <a>(t) = exp((i Delta - kappa/2) t) with G = 0."""
        p = SystemParams(omega_m=1.0, kappa=1.0, gamma=0.1, delta=1.0, g_lin=0.0, n_th=0.0)
        traj = moments.evolve(p, coherent_pair(a=1.0), 5.0, 0.01, sample_every=50)
        for t, s in zip(traj.times, traj.states):
            assert abs(s.mean[0] - np.exp((1j - 0.5) * t)) <= 1e-8

    def test_finite_difference_flow(self):
        """Test that one short step follows dU/dt = MU + UM^T + N."""
        start = coherent_pair(0.4j, 1.2)
        h = 1e-6
        traj = moments.evolve(SMOOTH, start, h, h)
        M, N = moments.drift_matrix(SMOOTH), moments.noise_matrix(SMOOTH)
        U0, U1 = traj.states[0].second, traj.states[-1].second
        slope = (U1 - U0) / h
        midpoint = 0.5 * (moments.lyapunov_rhs(M, N, U0) + moments.lyapunov_rhs(M, N, U1))
        assert np.abs(slope - midpoint).max() <= 1e-6

    def test_commutator_ledger_along_fig2(self):
        """Test that <oo^dag> - <o^dag o> = 1 holds along a fig2 trajectory."""
        start = MomentState.from_initial(InitialMoments.coherent_oscillator(1000.0))
        traj = moments.evolve(FIG2, start, 20.0, 0.01, sample_every=200)
        for s in traj.states:
            assert np.abs((s.second - s.second.T) - moments.COMMUTATOR).max() <= 1e-8

    def test_rk4_order(self):
        """Test that halving dt cuts the end-state error at least twelvefold."""
        start = coherent_pair(0.5, 1.0 + 0.5j)
        M, N = moments.drift_matrix(SMOOTH), moments.noise_matrix(SMOOTH)
        L, c = moments.linear_generator(M, N)
        aug = np.zeros((L.shape[0] + 1, L.shape[0] + 1), dtype=complex)
        aug[:-1, :-1], aug[:-1, -1] = L, c
        y0 = np.concatenate([start.full_mean(), start.second.reshape(-1), [1.0]])
        exact = (expm(10.0 * aug) @ y0)[4:-1].reshape(4, 4)

        errors = []
        for dt in (0.02, 0.01):
            end = moments.evolve(SMOOTH, start, 10.0, dt, sample_every=1000).states[-1]
            errors.append(np.abs(end.second - exact).max())
        assert errors[0] / errors[1] >= 12.0

    def test_step_too_large(self):
        """Test that a step that does not resolve the fastest scale is rejected."""
        with pytest.raises(ScenarioError):
            moments.evolve(FIG2, coherent_pair(), 1.0, 0.05)

    def test_nonpositive_horizon(self):
        """Test that t_end <= 0 is rejected."""
        with pytest.raises(ScenarioError):
            moments.evolve(FIG2, coherent_pair(), 0.0, 0.01)

    def test_broken_ledger_detected(self):
        """Test that a state violating the commutator ledger raises NumericalError at t=0."""
        bad = MomentState(t=0.0, mean=np.zeros(2, dtype=complex), second=np.zeros((4, 4), dtype=complex))
        with pytest.raises(NumericalError) as info:
            moments.evolve(FIG2, bad, 1.0, 0.01)
        assert info.value.time == 0.0

    def test_unphysical_initial(self):
        """Test that moments below the uncertainty bound are rejected."""
        with pytest.raises(ScenarioError):
            MomentState.from_initial(InitialMoments(b_mean=1.0, n_b=0.5, bb=1.0))


# ============================================================================
# Unit Tests for reduced_oscillator() and Trajectory
# ============================================================================

class TestReducedOscillator:
    """Unit tests for the reduced_oscillator() function."""

    def test_vacuum(self):
        """Test that the vacuum projects to (0, 0, 0)."""
        assert moments.reduced_oscillator(coherent_pair()) == (0j, 0.0, 0j)

    def test_coherent(self):
        """Test that a coherent oscillator projects to (beta, |beta|^2, beta^2)."""
        beta = 0.6 - 0.8j
        tri = moments.reduced_oscillator(coherent_pair(b=beta))
        assert tri.b_mean == pytest.approx(beta)
        assert tri.n_b == pytest.approx(1.0)
        assert tri.bb == pytest.approx(beta ** 2)

    def test_thermal(self):
        """Test that a thermal oscillator projects to (0, n, 0)."""
        tri = moments.reduced_oscillator(MomentState.from_initial(InitialMoments(n_b=3.5)))
        assert tri == (0j, 3.5, 0j)


class TestTrajectory:
    """Unit tests for the Trajectory container."""

    def test_length_mismatch(self):
        """Test that unequal times and states are rejected."""
        with pytest.raises(ValueError):
            Trajectory(times=np.array([0.0, 1.0]), states=[coherent_pair()])

    def test_frame_columns(self):
        """Test the CSV column layout."""
        traj = moments.evolve(SMOOTH, coherent_pair(b=1.0), 0.1, 0.01, sample_every=5)
        frame = traj.to_frame()
        assert list(frame.columns) == ['t', 're_b', 'im_b', 'n_b', 're_bb', 'im_bb',
                                       'n_a', 're_ab', 'im_ab']
        assert frame['t'].tolist() == pytest.approx([0.0, 0.05, 0.1])

    def test_triple_frame(self):
        """Test that oscillator-only trajectories leave the cavity columns empty."""
        traj = Trajectory(times=np.array([0.0]), states=[OscillatorTriple(1j, 1.0, -1.0)])
        frame = traj.to_frame()
        assert frame['im_b'].iloc[0] == 1.0
        assert np.isnan(frame['n_a'].iloc[0])


# ============================================================================
# Property-Based Tests
# ============================================================================

class TestEvolveProperties:
    """Property-based tests for the moment flow."""

    @settings(max_examples=50, deadline=None)
    @given(omega_m=st.floats(0.2, 2.0), kappa=st.floats(0.05, 2.0), gamma=st.floats(0.0, 0.5),
           delta=st.floats(-2.0, 2.0), g_lin=st.floats(0.0, 0.3), n_th=st.floats(0.0, 5.0),
           b=st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False))
    def test_invariants_hold(self, omega_m, kappa, gamma, delta, g_lin, n_th, b):
        """Test that random short runs keep the ledger, symmetry and physicality."""
        p = SystemParams(omega_m, kappa, gamma, delta, g_lin, n_th)
        dt = moments.max_step(p)
        traj = moments.evolve(p, coherent_pair(b=b), 40 * dt, dt, sample_every=10)
        for s in traj.states:
            assert s.n_a >= -1e-9 and s.n_b >= -1e-9
            assert np.abs(s.second - moments.conjugate_partner(s.second)).max() <= 1e-10
            assert moments.uncertainty_margin(s) >= -1e-8
