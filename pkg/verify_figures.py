#!/usr/bin/env python3
"""
Quick verification that the figure computations reproduce their headline numbers.
"""

import math

import numpy as np


def check_imports():
    """Check that the numerical stack and every ptgain module import."""
    print("🔍 Checking imports...")

    try:
        import pandas  # noqa: F401
        import scipy.linalg  # noqa: F401
        print("✅ numpy / pandas / scipy available")

        import elimination, entanglement, moments, omit, oracle, params, ptcore, scenarios  # noqa: F401,E401
        print("✅ ptgain modules import")
        return True

    except ImportError as e:
        print(f"❌ Import error: {e}")
        return False


def check_gain_algebra():
    """Effective dissipation at the fig2 point and the balance coupling round trip."""
    print("\n📈 Checking effective gain algebra...")

    try:
        from params import balance_coupling, effective_params
        import scenarios

        p = scenarios.system_params(scenarios.resolve('evolve', 'fig2'))
        eff = effective_params(p)
        assert abs(eff.gamma_eff - (-2.9975e-5)) < 1e-8, eff.gamma_eff
        print(f"✅ gamma_eff = {eff.gamma_eff:.6e} (gain)")

        g_star = balance_coupling(p, p.gamma)
        ratio = effective_params(p.with_coupling(g_star)).gamma_eff / p.gamma
        assert abs(ratio + 1.0) < 1e-10, ratio
        print(f"✅ balance coupling G* = {g_star:.6f} gives gamma_eff/gamma = {ratio:.12f}")
        return True

    except Exception as e:
        print(f"❌ Gain algebra error: {e}")
        return False


def check_pt_spectrum():
    """Exceptional point and direct-eigensolver agreement on the fig3 grid."""
    print("\n🌀 Checking PT spectrum...")

    try:
        import ptcore
        import scenarios

        p = scenarios.dimer_params(scenarios.resolve('pt-spectrum', 'fig3'))
        spectra = ptcore.sweep(p, np.linspace(0.0, 0.01, 1000))
        worst = max(s.direct_error for s in spectra)
        assert worst <= 1e-12, worst
        print(f"✅ closed form matches the eigensolver (worst {worst:.2e})")

        slope = ptcore.bifurcation_exponent(p)
        assert abs(slope + 0.5) <= 0.05, slope
        print(f"✅ square-root bifurcation, exponent {slope:.3f}")
        return True

    except Exception as e:
        print(f"❌ PT spectrum error: {e}")
        return False


def check_omit_window():
    """Exact transparency with balanced gain and the coupling amplification factor."""
    print("\n🔦 Checking OMIT window...")

    try:
        from dataclasses import replace
        import omit
        import scenarios

        p = scenarios.omit_params(scenarios.resolve('omit', 'fig5'))
        centre = omit.response(p, p.omega_m_eff)
        assert abs(centre.chi.real) <= 1e-12, centre.chi
        print(f"✅ Re chi(omega_m + mu) = {centre.chi.real:.1e}")

        balanced = omit.required_coupling(p, 0.9)
        dissipative = omit.required_coupling(replace(p, gamma_gain=0.0), 0.9)
        ratio = dissipative / balanced
        assert 10.0 <= ratio <= 100.0, ratio
        print(f"✅ gain lowers the required coupling {ratio:.1f}x")
        return True

    except Exception as e:
        print(f"❌ OMIT error: {e}")
        return False


def check_entanglement():
    """TMSV negativity and survival of entanglement at balanced gain."""
    print("\n🔗 Checking entanglement...")

    try:
        import entanglement
        import scenarios

        p = scenarios.dimer_params(scenarios.resolve('entangle', 'fig6'))
        start = entanglement.tmsv_initial(0.05)
        e0 = entanglement.log_negativity(entanglement.to_covariance(start))
        assert abs(e0 - 0.1) < 1e-10, e0
        print(f"✅ E_n(0) = {e0:.6f}")

        times, values = entanglement.negativity_trace(p, start, 200.0)
        t_s = entanglement.death_time(times, values, horizon=entanglement.AVERAGE_HORIZON)
        assert math.isinf(t_s), t_s
        print(f"✅ no entanglement death by t=200 (E_n(200) = {values[-1]:.4f})")
        return True

    except Exception as e:
        print(f"❌ Entanglement error: {e}")
        return False


def main():
    """Run all verification checks."""
    print("⚛️  ptgain Figure Verification")
    print("=" * 30)

    results = {
        'Imports': check_imports(),
        'Gain Algebra': check_gain_algebra(),
        'PT Spectrum': check_pt_spectrum(),
        'OMIT Window': check_omit_window(),
        'Entanglement': check_entanglement(),
    }

    print("\n" + "=" * 30)
    print("📋 Verification Summary:")
    for name, ok in results.items():
        print(f"  {name}: {'✅ PASS' if ok else '❌ FAIL'}")

    if all(results.values()):
        print("\n🎉 All verifications passed!")
        print("\n🚀 To reproduce a figure, run e.g.:")
        print("   python ptgain.py evolve --preset fig2 --out out/fig2")
        return 0
    else:
        print("\n⚠️  Some verifications failed. Please check the errors above.")
        return 1


if __name__ == "__main__":
    exit(main())
