"""Steady-state solver: closed forms, branch handling, residual oracle."""

import math
import warnings

import pytest

from ep3_optomech.model import RawConfig, derive_params, update_params
from ep3_optomech.steady_state import (
    NoPhysicalRoot,
    SingularDenominator,
    coupling_G,
    intensity_polynomial,
    solve_steady_state,
    steady_residual,
)

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


def test_polynomial_undriven_constant_term_zero(base):
    p = _params(base, P_in=0.0, Delta=-OMEGA_M, kappa=base.gamma, J=base.gamma)
    c3, c2, c1, c0 = intensity_polynomial(p)
    assert c0 == 0.0
    assert c3 > 0.0
    st = solve_steady_state(p)
    assert st.intensities[0] == 0.0


def test_polynomial_degenerates_without_backaction():
    g = derive_params(RawConfig()).gamma
    p = _decoupled(P_in=1e-3, Delta=-OMEGA_M, kappa=g, J=g)
    c3, c2, c1, c0 = intensity_polynomial(p)
    assert c3 == 0.0 and c2 == 0.0
    # Linear relation: I * |(J^2 - kg - D^2) + i D(k - g)|^2 = eta^2 (D^2 + k^2)
    aR = p.J**2 - p.kappa * p.gamma - p.Delta**2
    aI = p.Delta * (p.kappa - p.gamma)
    expected = p.eta_L**2 * (p.Delta**2 + p.kappa**2) / (aR * aR + aI * aI)
    st = solve_steady_state(p)
    assert st.intensities[0] == pytest.approx(expected, rel=1e-12)
    assert st.x_s == 0.0


def test_single_branch_at_default_operating_point(base):
    g = base.gamma
    p = _params(base, P_in=1e-3, Delta=-OMEGA_M, kappa=g, J=g)
    st = solve_steady_state(p)
    assert st.branch_count == 1
    assert st.intensities[0] > 0.0
    assert st.p_s == 0.0
    assert st.x_s > 0.0
    assert st.Delta_bar == pytest.approx(p.Delta + p.xi * st.x_s, rel=1e-12)


def test_undriven_state_is_zero(base):
    p = _params(base, P_in=0.0, Delta=-OMEGA_M, kappa=0.5 * base.gamma, J=base.gamma)
    st = solve_steady_state(p)
    assert st.a1s == 0.0 and st.a2s == 0.0
    assert st.x_s == 0.0 and st.G == 0.0


def test_residual_oracle(base):
    # The solved state must satisfy all four static equations.
    g = base.gamma
    for kappa in (0.5 * g, g, 2.0 * g, -g):
        p = _params(base, P_in=1e-3, Delta=-OMEGA_M, kappa=kappa, J=g)
        st = solve_steady_state(p)
        assert steady_residual(st, p) < 1e-8


def test_first_resonator_elimination_relation(base):
    g = base.gamma
    p = _params(base, P_in=1e-3, Delta=-0.5 * OMEGA_M, kappa=0.7 * g, J=1.3 * g)
    st = solve_steady_state(p)
    lhs = st.a1s
    rhs = 1j * p.J * st.a2s / complex(p.kappa, p.Delta)
    assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_bistable_branch_selection(base):
    # Single passive cavity driven hard enough sits between its two knees.
    p = _params(base, J=0.0, kappa=0.0, Delta=-OMEGA_M, P_in=0.072)
    st = solve_steady_state(p)
    assert st.branch_count == 3
    assert st.branch_index == 0
    assert st.intensities == tuple(sorted(st.intensities))
    upper = solve_steady_state(p, branch_index=2)
    assert upper.intensities == st.intensities
    assert abs(upper.a2s) ** 2 == pytest.approx(st.intensities[2], rel=1e-6)
    assert steady_residual(upper, p) < 1e-8
    with pytest.raises(IndexError):
        solve_steady_state(p, branch_index=3)


def test_branch_continuity_below_threshold(base):
    p0 = _params(base, J=0.0, kappa=0.0, Delta=-OMEGA_M)
    prev = -1.0
    for k in range(1, 40):
        st = solve_steady_state(_params(p0, P_in=0.05 * k / 40))
        assert st.intensities[0] >= prev
        prev = st.intensities[0]


def test_no_physical_root():
    g = derive_params(RawConfig()).gamma
    p = _decoupled(P_in=1e-3, Delta=0.0, kappa=g, J=g)
    with pytest.raises(NoPhysicalRoot):
        solve_steady_state(p)


def test_singular_denominator(base):
    p = _params(base, kappa=0.0, Delta=0.0, P_in=1e-3)
    with pytest.raises(SingularDenominator):
        solve_steady_state(p)


def test_coupling_zero_without_field(base):
    p = _params(base, P_in=0.0, Delta=-OMEGA_M, kappa=base.gamma, J=base.gamma)
    st = solve_steady_state(p)
    assert coupling_G(st, p) == 0.0


def test_coupling_scales_as_sqrt_power(base):
    g = base.gamma
    lo = _params(base, P_in=1e-4, Delta=-OMEGA_M, kappa=g, J=g)
    hi = _params(base, P_in=4e-4, Delta=-OMEGA_M, kappa=g, J=g)
    G_lo = abs(solve_steady_state(lo).G)
    G_hi = abs(solve_steady_state(hi).G)
    assert G_hi / G_lo == pytest.approx(2.0, rel=1e-2)


def test_coupling_matches_amplitude(base):
    p = _params(base, P_in=1e-3, Delta=-OMEGA_M, kappa=base.gamma, J=base.gamma)
    st = solve_steady_state(p)
    assert st.G == st.a2s * p.xi * p.x0
    assert coupling_G(st, p) == st.G
