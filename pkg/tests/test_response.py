"""Transfer matrix, stability, susceptibility, and effective response."""

import math
import warnings

import numpy as np
import pytest

from ep3_optomech.model import CONSTANTS, RawConfig, derive_params, update_params
from ep3_optomech import numkernel as nk
from ep3_optomech import response as rp
from ep3_optomech import supermodes as sm
from ep3_optomech.steady_state import SteadyState, solve_steady_state

OMEGA_M = 2.0 * math.pi * 500e6


@pytest.fixture(scope="module")
def base():
    return derive_params(RawConfig())


def _params(base, **changes):
    return update_params(base, **changes)


def _decoupled(**kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return derive_params(RawConfig(xi=0.0, **kw))


def _scaled(tm, which):
    a = tm.A_complex if which == "complex" else tm.A_quadrature
    return a * np.outer(tm.scale, 1.0 / tm.scale)


def _multiset_distance(pool, targets):
    pool = list(pool)
    worst = 0.0
    for t in targets:
        j = min(range(len(pool)), key=lambda i: abs(pool[i] - t))
        worst = max(worst, abs(pool[j] - t))
        pool.pop(j)
    return worst


def _fake_state(a2s, Delta_bar):
    return SteadyState(
        a1s=0.0j,
        a2s=a2s,
        x_s=0.0,
        p_s=0.0,
        Delta_bar=Delta_bar,
        G=0.0j,
        branch_count=1,
        branch_index=0,
        intensities=(abs(a2s) ** 2,),
    )


class TestTransferMatrix:
    def test_undriven_matrix_has_no_coupling(self, base):
        p = _params(base, P_in=0.0, Delta=-OMEGA_M, kappa=0.5 * base.gamma, J=base.gamma)
        st = solve_steady_state(p)
        tm = rp.transfer_matrix(p, st)
        assert tm.R2 == 0.0 and tm.I2 == 0.0
        assert np.all(tm.A_complex[:4, 4:] == 0.0)
        assert np.all(tm.A_complex[4:, :4] == 0.0)
        mech = tm.A_quadrature[4:, 4:]
        assert mech[0, 1] == 1.0 / p.mass
        assert mech[1, 0] == pytest.approx(-p.mass * p.omega_m**2, rel=1e-14)
        assert mech[1, 1] == -p.Gamma_m

    def test_decoupled_optical_block_matches_two_mode_roots(self):
        g = derive_params(RawConfig()).gamma
        p = _decoupled(P_in=1e-3, Delta=-OMEGA_M, kappa=0.5 * g, J=g)
        st = solve_steady_state(p)
        tm = rp.transfer_matrix(p, st)
        eigs = nk.eigvals_small(_scaled(tm, "complex"))
        spec = sm.spectrum_exact(p, G=0.0)
        by = dict(zip(spec.labels, spec.omegas))
        expected = [
            -1j * by["plus"].conjugate(),
            -1j * by["minus"].conjugate(),
            1j * by["plus"],
            1j * by["minus"],
        ]
        scale = max(abs(z) for z in expected)
        assert _multiset_distance(eigs, expected) <= 1e-9 * scale

    def test_basis_change_preserves_spectrum(self, base):
        p = _params(base, P_in=1e-4, Delta=-OMEGA_M, kappa=1.001 * base.gamma, J=base.gamma)
        st = solve_steady_state(p)
        tm = rp.transfer_matrix(p, st)
        e1 = nk.eigvals_small(_scaled(tm, "complex"))
        e2 = nk.eigvals_small(_scaled(tm, "quadrature"))
        scale = max(abs(z) for z in e1)
        assert _multiset_distance(e1, e2) <= 1e-9 * scale

    def test_conjugation_symmetry_exact(self, base):
        p = _params(base, P_in=1e-4, Delta=-0.8 * OMEGA_M, kappa=0.6 * base.gamma, J=base.gamma)
        st = solve_steady_state(p)
        a = rp.transfer_matrix(p, st).A_complex
        swap = [1, 0, 3, 2, 4, 5]
        for i in range(6):
            for j in range(6):
                assert a[swap[i], swap[j]] == np.conj(a[i, j])

    def test_momentum_row_carries_R2_I2(self, base):
        p = _params(base, P_in=1e-4, Delta=-OMEGA_M, kappa=0.5 * base.gamma, J=base.gamma)
        st = solve_steady_state(p)
        tm = rp.transfer_matrix(p, st)
        assert tm.A_quadrature[5, 2] == tm.R2
        assert tm.A_quadrature[5, 3] == tm.I2
        assert tm.R2 == math.sqrt(2.0) * CONSTANTS.hbar * p.xi * st.a2s.real
        assert tm.A_quadrature.dtype == np.float64


class TestStability:
    def test_all_passive_undriven_stable(self, base):
        p = _params(base, P_in=0.0, Delta=-OMEGA_M, kappa=-base.gamma, J=base.gamma)
        st = solve_steady_state(p)
        rep = rp.stability(rp.transfer_matrix(p, st))
        assert rep.stable
        assert rep.max_real_part < 0.0
        assert rep.agree

    def test_strong_gain_unstable(self, base):
        p = _params(base, P_in=0.0, Delta=-OMEGA_M, kappa=2.0 * base.gamma, J=base.gamma)
        st = solve_steady_state(p)
        rep = rp.stability(rp.transfer_matrix(p, st))
        assert not rep.stable
        assert rep.max_real_part > 0.0

    def test_dual_oracle_agreement(self, base):
        rng = np.random.default_rng(55)
        g = base.gamma
        agree_checked = 0
        for _ in range(200):
            p = _params(
                base,
                P_in=float(rng.uniform(0.0, 3e-4)),
                Delta=float(rng.uniform(-1.5, -0.5)) * OMEGA_M,
                kappa=float(rng.uniform(-1.5, 1.5)) * g,
                J=float(rng.uniform(0.2, 1.5)) * g,
            )
            st = solve_steady_state(p)
            rep = rp.stability(rp.transfer_matrix(p, st))
            if rep.marginal:
                continue
            assert rep.agree
            agree_checked += 1
        assert agree_checked > 150


class TestAPM:
    def test_zero_frequency_degenerate(self, base):
        p = _params(base, P_in=1e-4, Delta=-OMEGA_M, kappa=0.5 * base.gamma, J=base.gamma)
        st = solve_steady_state(p)
        ap, am = rp.a_pm(p, st, 0.0)
        assert ap == am

    def test_single_cavity_closed_form(self):
        p = _decoupled(P_in=1e-3, Delta=-OMEGA_M, kappa=0.0, J=0.0)
        st = solve_steady_state(p)
        assert st.Delta_bar == p.Delta
        w = 0.4 * OMEGA_M
        ap, am = rp.a_pm(p, st, w)
        assert ap == pytest.approx(-((p.Delta - w) ** 2), rel=1e-12)
        assert am == pytest.approx(-((p.Delta + w) ** 2), rel=1e-12)

    def test_sign_symmetry(self, base):
        p = _params(base, P_in=1e-4, Delta=-0.7 * OMEGA_M, kappa=0.8 * base.gamma, J=base.gamma)
        st = solve_steady_state(p)
        for w in (0.3 * OMEGA_M, OMEGA_M, 2.2 * OMEGA_M):
            for mixed in (False, True):
                ap_f, _ = rp.a_pm(p, st, w, mixed_detuning=mixed)
                _, am_b = rp.a_pm(p, st, -w, mixed_detuning=mixed)
                assert ap_f == pytest.approx(am_b, rel=1e-12)

    def test_mixed_flag_changes_cross_term(self, base):
        p = _params(base, P_in=1e-4, Delta=-OMEGA_M, kappa=base.gamma, J=base.gamma)
        st = solve_steady_state(p)
        assert st.Delta_bar != p.Delta
        default = rp.a_pm(p, st, OMEGA_M)
        mixed = rp.a_pm(p, st, OMEGA_M, mixed_detuning=True)
        assert default != mixed


class TestEffectiveQuantities:
    def test_undriven_exact(self, base):
        p = _params(base, P_in=0.0, Delta=-OMEGA_M, kappa=0.5 * base.gamma, J=base.gamma)
        st = solve_steady_state(p)
        assert rp.omega_eff(p, st) == p.omega_m
        assert rp.gamma_eff(p, st) == p.Gamma_m

    def test_single_cavity_cooling_formulas(self, base):
        # J = kappa = 0 reduces both closed forms to the textbook sideband
        # expressions; compare against them evaluated independently.
        p = _params(base, P_in=1e-4, Delta=-OMEGA_M, kappa=0.0, J=0.0)
        st = solve_steady_state(p)
        I = abs(st.a2s) ** 2
        w = p.omega_m
        Db = st.Delta_bar
        g = p.gamma
        pref = CONSTANTS.hbar * p.xi**2 * I / p.mass
        want_gamma = p.Gamma_m + (pref / w) * g * (
            1.0 / ((Db + w) ** 2 + g * g) - 1.0 / ((Db - w) ** 2 + g * g)
        )
        want_omsq = w * w + pref * (
            (Db + w) / ((Db + w) ** 2 + g * g) + (Db - w) / ((Db - w) ** 2 + g * g)
        )
        assert rp.gamma_eff(p, st) == pytest.approx(want_gamma, rel=1e-12)
        assert rp.omega_eff(p, st) ** 2 == pytest.approx(want_omsq, rel=1e-12)
        assert rp.gamma_eff(p, st) > p.Gamma_m

    def test_damping_sign_inversion_near_balance(self, base):
        g = base.gamma
        lo = _params(base, P_in=1e-4, Delta=-OMEGA_M, kappa=0.95 * g, J=g)
        hi = _params(base, P_in=1e-4, Delta=-OMEGA_M, kappa=1.05 * g, J=g)
        assert rp.gamma_eff(lo, solve_steady_state(lo)) < 0.0
        assert rp.gamma_eff(hi, solve_steady_state(hi)) > 0.0

    def test_corrections_linear_in_power(self, base):
        g = base.gamma
        shifts = []
        for P in (1e-6, 2e-6):
            p = _params(base, P_in=P, Delta=-OMEGA_M, kappa=0.5 * g, J=g)
            st = solve_steady_state(p)
            shifts.append(
                (
                    rp.gamma_eff(p, st) - p.Gamma_m,
                    rp.omega_eff(p, st) - p.omega_m,
                )
            )
        assert shifts[1][0] / shifts[0][0] == pytest.approx(2.0, rel=1e-2)
        assert shifts[1][1] / shifts[0][1] == pytest.approx(2.0, rel=1e-2)

    def test_divergent_denominator(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p = derive_params(
                RawConfig(kappa=1e-9, J=2e-9, Delta=0.0, gamma=1e-9, P_in=0.0)
            )
        st = _fake_state(1.0 + 0.0j, 0.0)
        with pytest.raises(rp.DivergentDenominator):
            rp.gamma_eff(p, st, math.sqrt(3.0) * 1e-9)

    def test_zero_frequency_rejected_when_driven(self, base):
        p = _params(base, P_in=1e-4, Delta=-OMEGA_M, kappa=0.5 * base.gamma, J=base.gamma)
        st = solve_steady_state(p)
        with pytest.raises(ValueError):
            rp.gamma_eff(p, st, 0.0)

    def test_static_instability(self, base):
        # Softening dominates when a huge red-detuned intensity is imposed.
        # Shifted detuning avoids the exact Delta_bar + omega = 0 degeneracy.
        p = _params(base, P_in=0.0, kappa=0.0, J=0.0, Delta=-OMEGA_M)
        st = _fake_state(70000.0 + 0.0j, -0.999 * OMEGA_M)
        with pytest.raises(rp.StaticInstability):
            rp.omega_eff(p, st)

    def test_self_consistent_fixed_point(self, base):
        p = _params(base, P_in=1e-4, Delta=-OMEGA_M, kappa=0.5 * base.gamma, J=base.gamma)
        st = solve_steady_state(p)
        res = rp.effective_response(p, st, self_consistent=True)
        assert res.omega_eff == pytest.approx(res.eval_freq, rel=1e-8)

    def test_chi_grid_samples(self, base):
        p = _params(base, P_in=0.0, Delta=-OMEGA_M, kappa=0.5 * base.gamma, J=base.gamma)
        st = solve_steady_state(p)
        grid = [0.9 * OMEGA_M, OMEGA_M, 1.1 * OMEGA_M]
        res = rp.effective_response(p, st, chi_grid=grid)
        assert res.chi_samples is not None and len(res.chi_samples) == 3
        w, chi = res.chi_samples[1]
        assert w == OMEGA_M
        assert chi == rp.susceptibility_analytic(p, st, OMEGA_M)


class TestSusceptibility:
    def test_static_undriven_value(self, base):
        p = _params(base, P_in=0.0, Delta=-OMEGA_M, kappa=0.5 * base.gamma, J=base.gamma)
        st = solve_steady_state(p)
        chi = rp.susceptibility_analytic(p, st, 0.0)
        assert chi == pytest.approx(1.0 / (p.mass * p.omega_m**2), rel=1e-12)
        assert chi.imag == 0.0

    def test_numeric_matches_bare_oscillator(self):
        p = _decoupled(P_in=0.0, Delta=-OMEGA_M, kappa=0.5e9, J=1e9)
        st = solve_steady_state(p)
        tm = rp.transfer_matrix(p, st)
        for w in np.linspace(0.3 * OMEGA_M, 2.0 * OMEGA_M, 9):
            got = rp.susceptibility_numeric(tm, float(w))
            want = 1.0 / (p.mass * complex(p.omega_m**2 - w * w, -w * p.Gamma_m))
            assert abs(got - want) <= 1e-10 * abs(want)

    def test_singular_resolvent(self):
        # Undamped bare oscillator: resolvent pole exactly at omega_m.
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p = derive_params(RawConfig(xi=0.0, P_in=0.0, Delta=-OMEGA_M, Gamma_m=1.0))
        object.__setattr__(p, "Gamma_m", 0.0)
        st = solve_steady_state(p)
        tm = rp.transfer_matrix(p, st)
        with pytest.raises(rp.SingularResolvent):
            rp.susceptibility_numeric(tm, p.omega_m)

    def test_compound_fit_agrees_with_closed_forms(self, base):
        # Gain above ~0.55 gamma destabilises the mechanics at this power.
        g = base.gamma
        for kappa in (-0.5 * g, 0.3 * g, 0.5 * g):
            p = _params(base, P_in=1e-4, Delta=-OMEGA_M, kappa=kappa, J=g)
            st = solve_steady_state(p)
            assert rp.stability(rp.transfer_matrix(p, st)).stable
            res = rp.effective_response(p, st)
            peak, width = rp.measure_lorentzian(
                rp.transfer_matrix(p, st), res.omega_eff, res.gamma_eff
            )
            assert peak == pytest.approx(res.omega_eff, rel=0.05)
            assert width == pytest.approx(res.gamma_eff, rel=0.05)


class TestExtractLorentzian:
    @staticmethod
    def _lorentzian_samples(center, width, n, span=10.0):
        lo, hi = center - span * width, center + span * width
        out = []
        for i in range(n):
            w = lo + (hi - lo) * i / (n - 1)
            chi = 1.0 / complex(center**2 - w * w, -w * width)
            out.append((w, chi))
        return out

    def test_synthetic_recovery(self):
        peak, width = rp.extract_lorentzian(self._lorentzian_samples(1.0, 0.01, 2001))
        assert peak == pytest.approx(1.0, rel=1e-3)
        assert width == pytest.approx(0.01, rel=1e-3)

    def test_density_convergence(self):
        a = rp.extract_lorentzian(self._lorentzian_samples(1.0, 0.01, 2001))
        b = rp.extract_lorentzian(self._lorentzian_samples(1.0, 0.01, 4001))
        assert abs(a[0] - b[0]) <= 1e-4
        assert abs(a[1] - b[1]) <= 1e-4 * 0.01 + 1e-5

    def test_bare_oscillator_numeric(self):
        p = _decoupled(P_in=0.0, Delta=-OMEGA_M, kappa=0.5e9, J=1e9)
        st = solve_steady_state(p)
        tm = rp.transfer_matrix(p, st)
        peak, width = rp.measure_lorentzian(tm, p.omega_m, p.Gamma_m)
        assert peak == pytest.approx(p.omega_m, rel=1e-2)
        assert width == pytest.approx(p.Gamma_m, rel=1e-2)

    def test_no_peak_on_edge(self):
        samples = [(float(k), complex(k + 1, 0)) for k in range(32)]
        with pytest.raises(rp.NoPeakInRange):
            rp.extract_lorentzian(samples)

    def test_unbracketed_flank(self):
        # A maximum exists but the wings never fall below half power.
        samples = [
            (w, complex(math.sqrt(1.0 - 0.1 * (w - 1.0) ** 2), 0.0))
            for w in np.linspace(0.0, 2.0, 41)
        ]
        with pytest.raises(rp.NoPeakInRange):
            rp.extract_lorentzian(samples)


class TestThermalSpectrum:
    def test_zero_temperature_limit(self, base):
        w = OMEGA_M
        got = rp.thermal_spectrum(w, 0.0, base)
        assert got == pytest.approx(base.Gamma_m * w / base.omega_m, rel=1e-12)

    def test_high_temperature_linear(self, base):
        w = 1e6
        approx = (base.Gamma_m / base.omega_m) * (CONSTANTS.k_B * 300.0 / CONSTANTS.hbar)
        got = rp.thermal_spectrum(w, 300.0, base)
        assert got == pytest.approx(approx, rel=1e-4)
        # Linear growth in T at fixed omega.
        assert rp.thermal_spectrum(w, 600.0, base) == pytest.approx(
            2.0 * got, rel=1e-4
        )

    def test_monotone_in_temperature(self, base):
        w = OMEGA_M
        values = [rp.thermal_spectrum(w, T, base) for T in (0.1, 1.0, 10.0, 100.0)]
        assert all(b > a for a, b in zip(values, values[1:]))
        assert all(v > 0.0 for v in values)

    def test_zero_frequency_rejected(self, base):
        with pytest.raises(ValueError):
            rp.thermal_spectrum(0.0, 300.0, base)
