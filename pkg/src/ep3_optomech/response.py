"""Linearized fluctuation dynamics, stability, and mechanical response.

The fluctuations of the two optical fields and the mechanical mode obey a
linear system dv/dt = A v + noise.  This module assembles A in both the
complex-amplitude and the real quadrature bases, decides stability by two
independent routes, and computes the mechanical susceptibility twice: from
the closed-form effective frequency/damping expressions and from a direct
resolvent solve that serves as their oracle.

All dense linear algebra runs on a rate-scaled similarity transform of A
(mechanical displacement in zero-point units, momentum in hbar per
zero-point-length units); eigenvalues are unchanged and coefficient growth
in the characteristic polynomial stays tame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .model import CONSTANTS, SystemParams
from .numkernel import (
    DegenerateArray,
    char_poly,
    eigvals_small,
    routh_hurwitz_stable,
)
from .steady_state import SteadyState

# Absolute SI floor under which the closed-form denominators are treated as
# an exact parameter degeneracy rather than a small number.
_DENOM_FLOOR = 1e-30
# Stability is flagged marginal when the leading real part is within this
# fraction of gamma of the imaginary axis.
_MARGINAL_FRAC = 1e-6


class DivergentDenominator(ArithmeticError):
    """A closed-form backaction denominator vanished at these parameters."""


class SingularResolvent(RuntimeError):
    """The fluctuation matrix has an eigenvalue at exactly -i*omega."""


class NoPeakInRange(RuntimeError):
    """The sampled response has no interior maximum or no half-power flank."""


class StaticInstability(RuntimeError):
    """The effective spring constant is nonpositive; no oscillator remains."""


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Fluctuation dynamics in two bases plus the scaling data reused later."""

    A_complex: np.ndarray
    A_quadrature: np.ndarray
    R2: float
    I2: float
    params: SystemParams
    scale: np.ndarray


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    max_real_part: float
    method: Literal["eigenvalue", "routh_hurwitz", "both"]
    margin: float
    marginal: bool
    agree: bool


@dataclass(frozen=True)
class ResponseResult:
    omega_eff: float
    gamma_eff: float
    eval_freq: float
    chi_samples: list[tuple[float, complex]] | None = None


def transfer_matrix(params: SystemParams, state: SteadyState) -> TransferMatrix:
    """Assemble the 6x6 fluctuation matrix about a solved operating point.

    Complex basis (da1, da1*, da2, da2*, dx, dp); the driven resonator keeps
    the effective detuning, the undriven one the bare detuning.  The real
    quadrature matrix is the exact basis change X = (a + a*)/sqrt(2),
    Y = (a - a*)/(i sqrt(2)).
    """
    kappa, gamma, J = params.kappa, params.gamma, params.J
    Delta, Dbar = params.Delta, state.Delta_bar
    m, om, Gm = params.mass, params.omega_m, params.Gamma_m
    xi = params.xi
    a2 = state.a2s
    hxi = CONSTANTS.hbar * xi
    ac = np.array(
        [
            [complex(kappa, Delta), 0, -1j * J, 0, 0, 0],
            [0, complex(kappa, -Delta), 0, 1j * J, 0, 0],
            [-1j * J, 0, complex(-gamma, Dbar), 0, 1j * xi * a2, 0],
            [0, 1j * J, 0, complex(-gamma, -Dbar), -1j * xi * a2.conjugate(), 0],
            [0, 0, 0, 0, 0, 1.0 / m],
            [0, 0, hxi * a2.conjugate(), hxi * a2, -m * om * om, -Gm],
        ],
        dtype=np.complex128,
    )
    r2 = math.sqrt(2.0) * hxi * a2.real
    i2 = math.sqrt(2.0) * hxi * a2.imag
    sq2xi = math.sqrt(2.0) * xi
    aq = np.array(
        [
            [kappa, -Delta, 0, J, 0, 0],
            [Delta, kappa, -J, 0, 0, 0],
            [0, J, -gamma, -Dbar, -sq2xi * a2.imag, 0],
            [-J, 0, Dbar, -gamma, sq2xi * a2.real, 0],
            [0, 0, 0, 0, 0, 1.0 / m],
            [0, 0, r2, i2, -m * om * om, -Gm],
        ],
        dtype=np.float64,
    )
    scale = np.array([1.0, 1.0, 1.0, 1.0, 1.0 / params.x0, params.x0 / CONSTANTS.hbar])
    return TransferMatrix(
        A_complex=ac, A_quadrature=aq, R2=r2, I2=i2, params=params, scale=scale
    )


def _rescaled(tm: TransferMatrix, which: str) -> np.ndarray:
    a = tm.A_complex if which == "complex" else tm.A_quadrature
    d = tm.scale
    return a * np.outer(d, 1.0 / d)


def stability(tm: TransferMatrix) -> StabilityReport:
    """Eigenvalue sign test with an independent algebraic cross-check.

    The primary verdict comes from the complex-basis eigenvalues; the real
    quadrature characteristic polynomial feeds the algebraic stability table
    as a second route.  Disagreement outside the marginal band is reported,
    not hidden; the eigenvalue verdict wins.
    """
    eigs = eigvals_small(_rescaled(tm, "complex"))
    max_re = max(z.real for z in eigs)
    eig_verdict = max_re < 0.0
    gamma = tm.params.gamma
    marginal = abs(max_re) < _MARGINAL_FRAC * gamma
    coeffs = char_poly(_rescaled(tm, "quadrature"))
    method: Literal["eigenvalue", "routh_hurwitz", "both"] = "both"
    try:
        rh_verdict = routh_hurwitz_stable([float(c) for c in np.real(coeffs)])
        agree = rh_verdict == eig_verdict
    except DegenerateArray:
        method = "eigenvalue"
        agree = True
    return StabilityReport(
        stable=eig_verdict,
        max_real_part=max_re,
        method=method,
        margin=abs(max_re),
        marginal=marginal,
        agree=agree or marginal,
    )


def a_pm(
    params: SystemParams,
    state: SteadyState,
    omega: float | None = None,
    mixed_detuning: bool = False,
) -> tuple[float, float]:
    """Quadratic factors A_+/- entering the backaction denominators.

    Default form uses the effective detuning throughout:
    A_+/- = (J^2 - kappa*gamma - Dbar^2 - omega^2) +/- 2*Dbar*omega.
    ``mixed_detuning`` switches the cross term to the bare detuning, a
    printed variant kept for sensitivity analysis; near gain-loss balance
    the two differ qualitatively (the bare cross term flips the sign of the
    backaction) and only the effective-detuning form reproduces the cooling
    behavior of the rest of this module.
    """
    if omega is None:
        omega = params.omega_m
    Dbar = state.Delta_bar
    cross = params.Delta if mixed_detuning else Dbar
    base = (
        params.J**2
        - params.kappa * params.gamma
        - Dbar * Dbar
        - omega * omega
    )
    return (base + 2.0 * cross * omega, base - 2.0 * cross * omega)


def _backaction_sums(
    params: SystemParams,
    state: SteadyState,
    omega: float,
    mixed_detuning: bool,
) -> tuple[float, float]:
    """(spring, damping) brace sums shared by the closed-form expressions."""
    kappa, gamma = params.kappa, params.gamma
    Dbar = state.Delta_bar
    ap, am = a_pm(params, state, omega, mixed_detuning)
    dk = kappa - gamma
    sp = Dbar + omega
    sm = Dbar - omega
    d_minus = am * am + sp * sp * dk * dk
    d_plus = ap * ap + sm * sm * dk * dk
    if d_minus < _DENOM_FLOOR or d_plus < _DENOM_FLOOR:
        raise DivergentDenominator(
            f"backaction denominators ({d_minus:.3e}, {d_plus:.3e}) below "
            f"{_DENOM_FLOOR:g}; exact parameter degeneracy"
        )
    spring = (sp * (kappa * dk - am)) / d_minus + (sm * (kappa * dk - ap)) / d_plus
    damping = (kappa * am + sp * sp * dk) / d_minus - (
        kappa * ap + sm * sm * dk
    ) / d_plus
    return spring, damping


def _radiation_prefactor(params: SystemParams, state: SteadyState) -> float:
    return (
        CONSTANTS.hbar
        * params.xi**2
        * abs(state.a2s) ** 2
        / params.mass
    )


def omega_eff(
    params: SystemParams,
    state: SteadyState,
    omega: float | None = None,
    mixed_detuning: bool = False,
) -> float:
    """Effective mechanical frequency at evaluation frequency ``omega``.

    Without drive this is the bare frequency exactly.  Raises
    StaticInstability when the optical spring overwhelms the restoring
    force (nonpositive effective squared frequency).
    """
    if omega is None:
        omega = params.omega_m
    pref = _radiation_prefactor(params, state)
    if pref == 0.0:
        return params.omega_m
    spring, _ = _backaction_sums(params, state, omega, mixed_detuning)
    om_sq = params.omega_m**2 + pref * spring
    if om_sq <= 0.0:
        raise StaticInstability(
            f"effective squared frequency {om_sq:.3e} <= 0 at omega={omega:.6g}"
        )
    return math.sqrt(om_sq)


def gamma_eff(
    params: SystemParams,
    state: SteadyState,
    omega: float | None = None,
    mixed_detuning: bool = False,
) -> float:
    """Effective mechanical damping rate at evaluation frequency ``omega``.

    Negative values mean net amplification (anti-damping).  Without drive
    this is the bare damping exactly.
    """
    if omega is None:
        omega = params.omega_m
    pref = _radiation_prefactor(params, state)
    if pref == 0.0:
        return params.Gamma_m
    if omega == 0.0:
        raise ValueError("gamma_eff requires a nonzero evaluation frequency")
    _, damping = _backaction_sums(params, state, omega, mixed_detuning)
    return params.Gamma_m - pref * damping / omega


def effective_response(
    params: SystemParams,
    state: SteadyState,
    omega: float | None = None,
    self_consistent: bool = False,
    mixed_detuning: bool = False,
    chi_grid: Sequence[float] | None = None,
) -> ResponseResult:
    """Bundle (Omega_eff, Gamma_eff) at one evaluation frequency.

    With ``self_consistent`` the evaluation frequency is iterated to the
    fixed point omega = Omega_eff(omega), at most 50 steps to 1e-8 relative.
    """
    w = params.omega_m if omega is None else omega
    if self_consistent:
        for _ in range(50):
            w_next = omega_eff(params, state, w, mixed_detuning)
            if abs(w_next - w) <= 1e-8 * max(w, w_next):
                w = w_next
                break
            w = w_next
    result_omega = omega_eff(params, state, w, mixed_detuning)
    result_gamma = gamma_eff(params, state, w, mixed_detuning)
    samples = None
    if chi_grid is not None:
        samples = [
            (float(om), susceptibility_analytic(params, state, float(om), mixed_detuning))
            for om in chi_grid
        ]
    return ResponseResult(
        omega_eff=result_omega,
        gamma_eff=result_gamma,
        eval_freq=w,
        chi_samples=samples,
    )


def susceptibility_analytic(
    params: SystemParams,
    state: SteadyState,
    omega: float,
    mixed_detuning: bool = False,
) -> complex:
    """Closed-form mechanical susceptibility chi(omega), in m/N.

    chi = 1 / (m [(Omega_eff^2 - omega^2) - i omega Gamma_eff]) with both
    effective quantities evaluated at this same omega.  The damping enters
    only through omega*Gamma_eff, which stays finite at omega = 0.
    """
    pref = _radiation_prefactor(params, state)
    if pref == 0.0:
        om_sq = params.omega_m**2
        w_gamma = omega * params.Gamma_m
    else:
        spring, damping = _backaction_sums(params, state, omega, mixed_detuning)
        om_sq = params.omega_m**2 + pref * spring
        w_gamma = omega * params.Gamma_m - pref * damping
    return 1.0 / (params.mass * complex(om_sq - omega * omega, -w_gamma))


def susceptibility_numeric(tm: TransferMatrix, omega: float) -> complex:
    """Resolvent oracle: exact chi(omega) from the full 6x6 linear system.

    Solves (-i omega I - A) u = f with a unit force on the momentum row and
    returns the displacement component.  No effective-oscillator assumption
    enters, so this is the reference the closed forms are tested against.
    For unstable configurations the value is the formal resolvent.
    """
    a = _rescaled(tm, "complex")
    n = a.shape[0]
    rhs = np.zeros(n, dtype=np.complex128)
    # Unit SI force lands on the scaled momentum row with the same factor
    # used in the similarity transform.
    rhs[5] = tm.scale[5]
    try:
        u = np.linalg.solve(-1j * omega * np.eye(n) - a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularResolvent(f"resolvent singular at omega={omega:.6g}") from exc
    return complex(u[4]) * tm.params.x0


def extract_lorentzian(
    samples: Sequence[tuple[float, complex]],
) -> tuple[float, float]:
    """(peak, full width at half maximum) of |chi|^2 from sampled points.

    The peak is refined by a three-point parabola on log|chi|^2; each flank's
    half-power crossing is located by linear interpolation between the
    bracketing samples.  Raises NoPeakInRange when the maximum sits on the
    grid edge or either flank never falls below half power.
    """
    if len(samples) < 3:
        raise NoPeakInRange("need at least three samples")
    w = [s[0] for s in samples]
    y = [abs(s[1]) ** 2 for s in samples]
    k = max(range(len(y)), key=y.__getitem__)
    if k == 0 or k == len(y) - 1:
        raise NoPeakInRange("maximum lies on the sampling-range edge")
    ly0, ly1, ly2 = (math.log(y[k - 1]), math.log(y[k]), math.log(y[k + 1]))
    denom = ly0 - 2.0 * ly1 + ly2
    if denom < 0.0:
        # Parabolic vertex in log amplitude; grid assumed locally uniform.
        frac = 0.5 * (ly0 - ly2) / denom
        frac = max(-0.5, min(0.5, frac))
        step = 0.5 * (w[k + 1] - w[k - 1])
        peak = w[k] + frac * step
        log_peak = ly1 - 0.25 * frac * (ly0 - ly2)
    else:
        peak = w[k]
        log_peak = ly1
    half = math.exp(log_peak) / 2.0

    def crossing(direction: int) -> float:
        j = k
        while 0 <= j + direction < len(y):
            j += direction
            if y[j] < half:
                # Interpolate between j and j-direction.
                y_in, y_out = y[j - direction], y[j]
                w_in, w_out = w[j - direction], w[j]
                t = (y_in - half) / (y_in - y_out)
                return w_in + t * (w_out - w_in)
        raise NoPeakInRange("half-power flank not bracketed by the samples")

    left = crossing(-1)
    right = crossing(+1)
    return peak, right - left


def measure_lorentzian(
    tm: TransferMatrix,
    omega_guess: float,
    gamma_guess: float,
    points: int = 2001,
) -> tuple[float, float]:
    """Peak and width of the numeric susceptibility around a guess.

    Samples |chi| on a window of +/-10 guessed widths, extracts the peak,
    then refines once on a window of +/-10 measured widths around it.
    """
    width = abs(gamma_guess)
    if width == 0.0:
        width = 1e-6 * omega_guess

    def sample(center: float, half_span: float) -> list[tuple[float, complex]]:
        lo = max(center - half_span, 1e-6 * omega_guess)
        hi = center + half_span
        return [
            (
                lo + (hi - lo) * i / (points - 1),
                susceptibility_numeric(
                    tm, lo + (hi - lo) * i / (points - 1)
                ),
            )
            for i in range(points)
        ]

    peak, fwhm = extract_lorentzian(sample(omega_guess, 10.0 * width))
    peak, fwhm = extract_lorentzian(sample(peak, 10.0 * fwhm))
    return peak, fwhm


def thermal_spectrum(omega: float, T: float, params: SystemParams) -> float:
    """Spectral density of the thermal Brownian force drive (scaled units).

    S(omega) = (Gamma_m / 2 omega_m) * omega * [1 + coth(hbar omega / 2 kB T)].
    At T = 0 the coth saturates at sign(omega).  omega = 0 is excluded.
    """
    if omega == 0.0:
        raise ValueError("thermal spectrum is undefined at omega = 0")
    if T < 0.0:
        raise ValueError("temperature must be nonnegative")
    if T == 0.0:
        coth = 1.0 if omega > 0.0 else -1.0
    else:
        arg = CONSTANTS.hbar * omega / (2.0 * CONSTANTS.k_B * T)
        coth = 1.0 / math.tanh(arg)
    return (params.Gamma_m / (2.0 * params.omega_m)) * omega * (1.0 + coth)
