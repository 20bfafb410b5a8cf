"""Supermode spectrum of the three coupled modes and exceptional points.

The linearized dynamics of the two optical fields and the mechanical mode
has a cubic characteristic equation in the complex eigenfrequency.  This
module evaluates that cubic exactly (by radicals), builds the far-detuned
asymptotic form with second-order coupling corrections, and locates the
parameter points where eigenfrequencies coalesce.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .model import SystemParams, update_params
from .numkernel import match_branches, solve_cubic_cardano
from .steady_state import solve_steady_state
from .util import parallel_map

Label = Literal["plus", "minus", "zero"]
# EP tolerances in units of gamma; coalescence at finite drive is approximate.
TOL_EP2 = 1e-3
TOL_EP3 = 1e-2


class RegimeViolation(ValueError):
    """The asymptotic construction is invalid at the requested parameters."""


class NoMinimumInBracket(RuntimeError):
    """The coalescence measure has no interior minimum over the bracket."""


@dataclass(frozen=True)
class SupermodeSpectrum:
    """Three complex eigenfrequencies with branch tags and their cubic."""

    omegas: tuple[complex, complex, complex]
    labels: tuple[Label, Label, Label]
    lambda_coeffs: tuple[complex, complex, complex]


@dataclass(frozen=True)
class EpClassification:
    order: int
    coalescing_pair: tuple[Label, Label] | None
    min_separation: float
    depressed_p: complex
    depressed_q: complex
    discriminant: complex


@dataclass(frozen=True)
class SplittingResult:
    delta_omega: float
    delta_gamma: float
    regime: Literal["below_EP", "above_EP"]


def cubic_coeffs(
    params: SystemParams, G: complex, detuning: float | None = None
) -> tuple[complex, complex, complex]:
    """Coefficients (l1, l2, l3) of the eigenfrequency cubic w^3 + l1 w^2 + l2 w + l3.

    ``detuning`` substitutes an effective detuning for the bare one; the
    default is the bare value stored in ``params``.
    """
    kappa, gamma, J = params.kappa, params.gamma, params.J
    Delta = params.Delta if detuning is None else detuning
    om = params.omega_m
    g2 = abs(G) ** 2
    dk = complex(0.0, kappa - gamma)
    l1 = 2.0 * Delta + dk - om
    l2 = (
        (-2.0 * Delta - dk) * om
        + Delta * Delta
        + dk * Delta
        + kappa * gamma
        - g2
        - J * J
    )
    l3 = (J * J - Delta * Delta - dk * Delta - kappa * gamma) * om + g2 * complex(
        -Delta, -kappa
    )
    return (l1, l2, l3)


def mode_matrix(
    params: SystemParams, G: complex, detuning: float | None = None
) -> np.ndarray:
    """3x3 non-Hermitian matrix whose eigenvalues are the supermode frequencies.

    Basis (optical supply mode, driven mode, mechanical mode); the cubic from
    cubic_coeffs equals this matrix's characteristic polynomial.
    """
    kappa, gamma, J = params.kappa, params.gamma, params.J
    Delta = params.Delta if detuning is None else detuning
    return np.array(
        [
            [complex(-Delta, -kappa), -J, 0.0],
            [-J, complex(-Delta, gamma), G],
            [0.0, complex(G).conjugate(), params.omega_m],
        ],
        dtype=np.complex128,
    )


def _assign_labels(
    roots: Sequence[complex], omega_m: float
) -> tuple[tuple[complex, complex, complex], tuple[Label, Label, Label]]:
    # zero = root nearest the mechanical frequency; the optical pair is
    # ordered by descending real part.
    rest = list(roots)
    zero = min(rest, key=lambda w: abs(w - omega_m))
    rest.remove(zero)
    rest.sort(key=lambda w: -w.real)
    return (rest[0], rest[1], zero), ("plus", "minus", "zero")


def spectrum_exact(
    params: SystemParams,
    G: complex | None = None,
    detuning: float | None = None,
) -> SupermodeSpectrum:
    """Exact eigenfrequencies by radicals.

    With ``G=None`` the operating point is solved first and both the coupling
    and the effective detuning come from it; passing an explicit ``G`` (and
    optionally ``detuning``) bypasses the steady state for controlled scans.
    """
    if G is None:
        state = solve_steady_state(params)
        G = state.G
        if detuning is None:
            detuning = state.Delta_bar
    coeffs = cubic_coeffs(params, G, detuning)
    roots = solve_cubic_cardano(*coeffs).roots
    omegas, labels = _assign_labels(roots, params.omega_m)
    return SupermodeSpectrum(omegas=omegas, labels=labels, lambda_coeffs=coeffs)


def _two_mode_S(params: SystemParams, radicand: str) -> complex:
    half = 0.5 * (params.kappa + params.gamma)
    if radicand == "tunneling":
        return cmath.sqrt(complex(params.J * params.J - half * half))
    if radicand == "loss":
        # Printed variant; coincides with "tunneling" only at J = gamma.
        return cmath.sqrt(complex(params.gamma * params.gamma - half * half))
    raise ValueError(f"radicand must be 'tunneling' or 'loss', got {radicand!r}")


def spectrum_asymptotic(
    params: SystemParams,
    G: complex,
    regime: Literal["below_EP", "above_EP"] | None = None,
    radicand: str = "tunneling",
    detuning: float | None = None,
) -> SupermodeSpectrum:
    """Far-detuned spectrum: exact uncoupled roots plus |G|^2 shifts.

    Valid when the mechanical frequency sits far from the optical pair,
    |G|^2 / (Delta + omega_m)^2 <= 0.1; the residual error scales as |G|^4.
    The ``radicand`` switch exposes the printed loss-rate variant of the
    two-mode square root, which differs from the tunneling form unless
    J = gamma; the tunneling form is the G = 0 limit of the exact spectrum.
    """
    kappa, gamma, om = params.kappa, params.gamma, params.omega_m
    Delta = params.Delta if detuning is None else detuning
    g2 = abs(G) ** 2
    if G != 0.0:
        gap = (Delta + om) ** 2
        if gap == 0.0 or g2 / gap > 0.1:
            raise RegimeViolation(
                "coupling too strong for the far-detuned expansion: "
                f"|G|^2/(Delta+omega_m)^2 = {g2 / gap if gap else math.inf:.3g} > 0.1"
            )
    S = _two_mode_S(params, radicand)
    rate_scale = max(abs(kappa), gamma, params.J, 1.0)
    if abs(S) < 1e-9 * rate_scale and g2 > 0.0:
        raise RegimeViolation(
            "uncoupled optical roots are degenerate; the per-root shift diverges"
        )
    center = complex(-Delta, -0.5 * (kappa - gamma))
    w_plus = center + S
    w_minus = center - S
    if g2 == 0.0:
        shifts = (0.0j, 0.0j, 0.0j)
    else:
        num_p = w_plus + complex(Delta, kappa)
        num_m = w_minus + complex(Delta, kappa)
        q_m = (om + complex(Delta, kappa)) * (om + complex(Delta, -gamma)) - params.J**2
        shifts = (
            g2 * num_p / (2.0 * S * (w_plus - om)),
            g2 * num_m / (-2.0 * S * (w_minus - om)),
            g2 * (om + complex(Delta, kappa)) / q_m,
        )
    omegas = (w_plus + shifts[0], w_minus + shifts[1], om + shifts[2])
    labels: tuple[Label, Label, Label] = ("plus", "minus", "zero")
    del regime  # the complex square root covers both sides; kept for the API
    return SupermodeSpectrum(
        omegas=omegas,
        labels=labels,
        lambda_coeffs=cubic_coeffs(params, G, Delta),
    )


def splitting(
    params: SystemParams,
    G: complex = 0.0,
    regime: Literal["below_EP", "above_EP"] | None = None,
    radicand: str = "tunneling",
) -> SplittingResult:
    """Real-frequency and linewidth splittings of the optical pair.

    With G = 0 these are the closed two-mode forms: below the EP the pair
    splits in frequency by 2*S with equal linewidths; above it the
    frequencies lock and the linewidths split by 2*|S|.  With G != 0 the
    asymptotic corrections are included.
    """
    if regime is None:
        regime = (
            "below_EP" if params.kappa < 2.0 * params.J - params.gamma else "above_EP"
        )
    if G == 0.0:
        S = _two_mode_S(params, radicand)
        if regime == "below_EP":
            return SplittingResult(
                delta_omega=2.0 * S.real, delta_gamma=0.0, regime=regime
            )
        return SplittingResult(
            delta_omega=0.0, delta_gamma=2.0 * abs(S.imag), regime=regime
        )
    spec = spectrum_asymptotic(params, G, regime=regime, radicand=radicand)
    diff = spec.omegas[0] - spec.omegas[1]
    return SplittingResult(
        delta_omega=diff.real, delta_gamma=diff.imag, regime=regime
    )


def _pairwise_separations(
    spec: SupermodeSpectrum,
) -> list[tuple[float, tuple[Label, Label]]]:
    out = []
    for i in range(3):
        for j in range(i + 1, 3):
            out.append(
                (abs(spec.omegas[i] - spec.omegas[j]), (spec.labels[i], spec.labels[j]))
            )
    return out


def classify_ep(
    spec: SupermodeSpectrum,
    params: SystemParams,
    tol_ep2: float = TOL_EP2,
    tol_ep3: float = TOL_EP3,
) -> EpClassification:
    """Order of eigenfrequency coalescence, with depressed-cubic diagnostics.

    Separations are measured in units of gamma.  An exact EP has vanishing
    depressed coefficients (order 3) or vanishing discriminant (order 2);
    both are reported to let the caller distinguish near-misses.
    """
    seps = _pairwise_separations(spec)
    gamma = params.gamma
    min_sep, pair = min(seps, key=lambda t: t[0])
    max_sep = max(s for s, _ in seps)
    l1, l2, l3 = spec.lambda_coeffs
    p = l2 - l1 * l1 / 3.0
    q = 2.0 * l1**3 / 27.0 - l1 * l2 / 3.0 + l3
    disc = -4.0 * p**3 - 27.0 * q * q
    if max_sep <= tol_ep3 * gamma:
        return EpClassification(3, None, min_sep, p, q, disc)
    if min_sep <= tol_ep2 * gamma:
        return EpClassification(2, pair, min_sep, p, q, disc)
    return EpClassification(1, None, min_sep, p, q, disc)


def _spectrum_at(
    params: SystemParams, G_policy: complex | str
) -> SupermodeSpectrum:
    if G_policy == "self_consistent":
        return spectrum_exact(params)
    if G_policy == "zero":
        return spectrum_exact(params, G=0.0)
    return spectrum_exact(params, G=complex(G_policy))


def sweep_spectrum(
    params_template: SystemParams,
    axis: Literal["kappa", "Delta", "J"],
    grid: Sequence[float],
    G_policy: complex | str = "self_consistent",
) -> list[SupermodeSpectrum]:
    """One labeled spectrum per grid point with branches tracked continuously.

    Points are evaluated independently (concurrently when workers allow);
    the label assignment is a sequential pass matching each point's roots to
    the previous point by minimal total displacement.
    """
    if axis not in ("kappa", "Delta", "J"):
        raise ValueError(f"axis must be kappa, Delta, or J, got {axis!r}")
    specs = parallel_map(
        lambda v: _spectrum_at(update_params(params_template, **{axis: v}), G_policy),
        grid,
    )
    if not specs:
        return []
    tracked = [specs[0]]
    for spec in specs[1:]:
        prev = tracked[-1]
        perm = match_branches(prev.omegas, spec.omegas)
        omegas = tuple(spec.omegas[perm[i]] for i in range(3))
        tracked.append(
            SupermodeSpectrum(
                omegas=omegas,
                labels=prev.labels,
                lambda_coeffs=spec.lambda_coeffs,
            )
        )
    return tracked


def locate_ep(
    params_template: SystemParams,
    sweep_axis: Literal["kappa", "Delta", "J"],
    bracket: tuple[float, float],
    G_policy: complex | str = "self_consistent",
    measure: Literal["min", "max"] = "min",
    coarse: int = 33,
    tol_ep2: float = TOL_EP2,
    tol_ep3: float = TOL_EP3,
) -> tuple[float, EpClassification]:
    """Localize a coalescence along one parameter axis.

    ``measure`` selects the pairwise-separation statistic minimized: "min"
    finds two-fold coalescences, "max" three-fold ones.  A coarse scan must
    show an interior minimum; golden-section search then refines it.
    """
    lo, hi = bracket
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")

    def m(value: float) -> float:
        spec = _spectrum_at(
            update_params(params_template, **{sweep_axis: value}), G_policy
        )
        seps = [s for s, _ in _pairwise_separations(spec)]
        return min(seps) if measure == "min" else max(seps)

    grid = [lo + (hi - lo) * k / (coarse - 1) for k in range(coarse)]
    values = parallel_map(m, grid)
    k_best = min(range(coarse), key=values.__getitem__)
    if k_best in (0, coarse - 1):
        raise NoMinimumInBracket(
            f"coalescence measure is smallest at the bracket edge {grid[k_best]:g}"
        )
    a, b = grid[k_best - 1], grid[k_best + 1]
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = m(c), m(d)
    for _ in range(80):
        if b - a <= 1e-7 * (hi - lo):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = m(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = m(d)
    best = 0.5 * (a + b)
    spec = _spectrum_at(
        update_params(params_template, **{sweep_axis: best}), G_policy
    )
    return best, classify_ep(spec, params_template, tol_ep2, tol_ep3)
