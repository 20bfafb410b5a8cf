"""Mean-field steady state of the driven two-resonator optomechanical system.

The static displacement shifts the detuning of the driven resonator, which
feeds back on the intracavity intensity; eliminating the fields turns the
self-consistency condition into a real cubic in I = |a2s|^2.  All branches
are found by radicals and the physical one is selected explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import CONSTANTS, SystemParams
from .numkernel import solve_cubic_cardano

# Filter tolerance for accepting a cubic root as a real intensity.
_REAL_TOL = 1e-8


class NoPhysicalRoot(RuntimeError):
    """No nonnegative real intensity satisfies the self-consistency cubic."""


class SingularDenominator(ZeroDivisionError):
    """kappa + i*Delta = 0; the first-resonator elimination is undefined."""


@dataclass(frozen=True)
class SteadyState:
    """Static operating point: fields in sqrt(photons), displacement in m."""

    a1s: complex
    a2s: complex
    x_s: float
    p_s: float
    Delta_bar: float
    G: complex
    branch_count: int
    branch_index: int
    intensities: tuple[float, ...]


def _backaction_coefficient(params: SystemParams) -> float:
    # x_s = (hbar * xi / (m * omega_m^2)) * I, so Delta_bar - Delta = C * I.
    return CONSTANTS.hbar * params.xi**2 / (params.mass * params.omega_m**2)


def intensity_polynomial(params: SystemParams) -> tuple[float, float, float, float]:
    """Real cubic (c3, c2, c1, c0), descending, in the intensity I = |a2s|^2.

    Built from |denominator(x_s(I))|^2 * I = eta_L^2 * (Delta^2 + kappa^2)
    with the static displacement eliminated in favor of I.  With xi = 0 the
    leading two coefficients vanish and the relation is linear.
    """
    kappa, gamma, J, Delta = params.kappa, params.gamma, params.J, params.Delta
    C = _backaction_coefficient(params)
    aR = J * J - kappa * gamma - Delta * Delta
    bR = -Delta * C
    aI = Delta * (kappa - gamma)
    bI = kappa * C
    drive = params.eta_L**2 * (Delta * Delta + kappa * kappa)
    c3 = bR * bR + bI * bI
    c2 = 2.0 * (aR * bR + aI * bI)
    c1 = aR * aR + aI * aI
    c0 = -drive
    return (c3, c2, c1, c0)


def _real_nonnegative_roots(coeffs: tuple[float, float, float, float]) -> list[float]:
    c3, c2, c1, c0 = coeffs
    if c3 == 0.0:
        if c2 != 0.0:
            # Quadratic degenerate case; physical params cannot reach it
            # (c3 = 0 forces c2 = 0) but the algebra is kept complete.
            disc = c1 * c1 - 4.0 * c2 * c0
            if disc < 0.0:
                return []
            r = disc**0.5
            candidates = [(-c1 + r) / (2.0 * c2), (-c1 - r) / (2.0 * c2)]
        elif c1 != 0.0:
            candidates = [-c0 / c1]
        else:
            return [] if c0 != 0.0 else [0.0]
        return sorted(x for x in candidates if x >= 0.0)
    out = solve_cubic_cardano(c2 / c3, c1 / c3, c0 / c3)
    kept = []
    for w in out.roots:
        if abs(w.imag) <= _REAL_TOL * max(1.0, abs(w)) and w.real >= -_REAL_TOL * max(
            1.0, abs(w)
        ):
            kept.append(max(w.real, 0.0))
    return sorted(kept)


def solve_steady_state(params: SystemParams, branch_index: int = 0) -> SteadyState:
    """Solve the operating point and reconstruct all static amplitudes.

    All nonnegative real intensity branches are retained; ``branch_index``
    selects among them in ascending-I order.  The default 0 is the lower
    branch, the state reached by ramping the power up from zero.
    """
    kappa, gamma, J, Delta = params.kappa, params.gamma, params.J, params.Delta
    if kappa == 0.0 and Delta == 0.0:
        raise SingularDenominator("kappa + i*Delta = 0")
    roots = _real_nonnegative_roots(intensity_polynomial(params))
    if not roots:
        raise NoPhysicalRoot(
            "no nonnegative real intensity branch at these parameters"
        )
    if not 0 <= branch_index < len(roots):
        raise IndexError(
            f"branch_index {branch_index} out of range for {len(roots)} branches"
        )
    intensity = roots[branch_index]
    C = _backaction_coefficient(params)
    x_s = C * intensity / params.xi if params.xi != 0.0 else 0.0
    Delta_bar = Delta + params.xi * x_s
    if params.eta_L == 0.0:
        a2s = 0.0j
    else:
        denom = complex(
            J * J - kappa * gamma - Delta * Delta_bar,
            kappa * Delta_bar - gamma * Delta,
        )
        a2s = params.eta_L * complex(-Delta, kappa) / denom
    a1s = 1j * J * a2s / complex(kappa, Delta)
    G = a2s * params.xi * params.x0
    return SteadyState(
        a1s=a1s,
        a2s=a2s,
        x_s=x_s,
        p_s=0.0,
        Delta_bar=Delta_bar,
        G=G,
        branch_count=len(roots),
        branch_index=branch_index,
        intensities=tuple(roots),
    )


def coupling_G(state: SteadyState, params: SystemParams) -> complex:
    """Linearized optomechanical coupling a2s * xi * x0, in rad/s."""
    return state.a2s * params.xi * params.x0


def steady_residual(state: SteadyState, params: SystemParams) -> float:
    """Max residual of the four static equations, relative to the drive scale.

    Zero time-derivatives require:
      (kappa + i Delta) a1s - i J a2s            = 0
      (-gamma + i Delta_bar) a2s - i J a1s - i eta_L = 0
      p_s / m                                     = 0
      -m omega_m^2 x_s + hbar xi |a2s|^2          = 0
    """
    kappa, gamma, J, Delta = params.kappa, params.gamma, params.J, params.Delta
    r1 = complex(kappa, Delta) * state.a1s - 1j * J * state.a2s
    r2 = (
        complex(-gamma, state.Delta_bar) * state.a2s
        - 1j * J * state.a1s
        - 1j * params.eta_L
    )
    r3 = state.p_s / params.mass
    r4 = (
        -params.mass * params.omega_m**2 * state.x_s
        + CONSTANTS.hbar * params.xi * abs(state.a2s) ** 2
    )
    field_scale = max(params.eta_L, params.gamma * abs(state.a2s), 1e-300)
    force_scale = max(
        params.mass * params.omega_m**2 * abs(state.x_s),
        CONSTANTS.hbar * params.xi * abs(state.a2s) ** 2,
        1e-300,
    )
    return max(
        abs(r1) / field_scale,
        abs(r2) / field_scale,
        abs(r3) / max(field_scale, 1e-300),
        abs(r4) / force_scale if (state.x_s != 0.0 or state.a2s != 0.0) else 0.0,
    )
