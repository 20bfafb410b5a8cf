"""Dense small-matrix and polynomial numeric kernels.

Everything here operates on plain Python complex scalars, short sequences,
or numpy arrays of modest order (n <= 12).  Tolerances are always expressed
relative to an explicit per-call scale.  All kernels are pure functions.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

import numpy as np

_EPS = 2.220446049250313e-16
_MAX_DEGREE = 12
_MATCH_LIMIT = 6


class DegenerateInput(ValueError):
    """Non-finite or otherwise unusable solver input."""


class NoConvergence(RuntimeError):
    """Iteration budget exhausted; carries the best residual reached."""

    def __init__(self, message: str, best_residual: float):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


class DegenerateArray(RuntimeError):
    """A stability-table row vanished identically; the test is inconclusive."""


@dataclass(frozen=True)
class CubicRoots:
    """Roots of a monic cubic plus their scale-relative residuals."""

    roots: tuple[complex, complex, complex]
    residuals: tuple[float, float, float]


def _cubic_scale(l1: complex, l2: complex, l3: complex) -> float:
    return max(1.0, abs(l1), abs(l2) ** 0.5, abs(l3) ** (1.0 / 3.0))


def _cubic_eval(l1: complex, l2: complex, l3: complex, w: complex) -> complex:
    return ((w + l1) * w + l2) * w + l3


def _cubic_deriv(l1: complex, l2: complex, w: complex) -> complex:
    return (3.0 * w + 2.0 * l1) * w + l2


def _polish_cubic(l1, l2, l3, w):
    # Guarded Newton: accept a step only if it reduces |f|; at most 3 steps.
    best = w
    best_f = abs(_cubic_eval(l1, l2, l3, w))
    for _ in range(3):
        if best_f == 0.0:
            break
        d = _cubic_deriv(l1, l2, best)
        if d == 0.0:
            break
        cand = best - _cubic_eval(l1, l2, l3, best) / d
        f = abs(_cubic_eval(l1, l2, l3, cand))
        if f >= best_f:
            break
        best, best_f = cand, f
    return best


def solve_cubic_cardano(l1: complex, l2: complex, l3: complex) -> CubicRoots:
    """Roots of w**3 + l1*w**2 + l2*w + l3 = 0 by the depressed-cubic radicals.

    The construction pairs the two cube-root branches through v = -p/(3u), so
    the branch product u*v = -p/3 holds exactly and no spurious root mixing
    can occur.  When the radical term underflows (p ~ 0 with a cancelling
    square-root branch) the fallback u = (-q)**(1/3), v = 0 is used.  A short
    guarded Newton polish pushes each root to backward-error level.
    """
    l1, l2, l3 = complex(l1), complex(l2), complex(l3)
    if not all(cmath.isfinite(c) for c in (l1, l2, l3)):
        raise DegenerateInput("cubic coefficients must be finite")
    scale = _cubic_scale(l1, l2, l3)
    p = l2 - l1 * l1 / 3.0
    q = (2.0 * l1 * l1 * l1 - 9.0 * l1 * l2) / 27.0 + l3
    disc_root = cmath.sqrt(0.25 * q * q + p * p * p / 27.0)
    u_cubed = -0.5 * q + disc_root
    if abs(u_cubed) <= _EPS * max(abs(q), 1e-300):
        u = (-q) ** (1.0 / 3.0) if q != 0.0 else 0.0j
        v = 0.0j
    else:
        u = u_cubed ** (1.0 / 3.0)
        v = -p / (3.0 * u)
    zeta = complex(-0.5, 0.5 * math.sqrt(3.0))
    zbar = zeta.conjugate()
    shift = -l1 / 3.0
    raw = (u + v + shift, zeta * u + zbar * v + shift, zbar * u + zeta * v + shift)
    roots = tuple(_polish_cubic(l1, l2, l3, w) for w in raw)
    residuals = tuple(abs(_cubic_eval(l1, l2, l3, w)) / scale**3 for w in roots)
    return CubicRoots(roots, residuals)


def _poly_eval_pair(c: Sequence[complex], z: complex) -> tuple[complex, complex]:
    """Horner evaluation of p(z) and p'(z); coefficients descending."""
    f = c[0]
    df = 0.0j
    for ck in c[1:]:
        df = df * z + f
        f = f * z + ck
    return f, df


def _poly_noise_scale(c: Sequence[complex], z: complex) -> float:
    """sum_k |c_k| |z|^k, the natural scale for evaluation noise at z."""
    az = abs(z)
    s = abs(c[0])
    for ck in c[1:]:
        s = s * az + abs(ck)
    return s


def _derivative_coeffs(c: list[complex], times: int) -> list[complex]:
    d = list(c)
    for _ in range(times):
        deg = len(d) - 1
        d = [d[k] * (deg - k) for k in range(deg)]
    return d


def _snap_root_clusters(c: list[complex], z: list[complex]) -> list[complex]:
    """Snap numerically unresolvable root clusters onto their common center.

    An m-fold (or nearly m-fold) zero leaves Aberth stagnating on a ring of
    radius ~ (evaluation noise)**(1/m).  The ring center is recoverable to
    full precision as the nearby simple root of the (m-1)-th derivative.  The
    snap is accepted only when the polynomial itself cannot tell the members
    apart: the candidate center must reproduce |p| at noise level.  Genuinely
    separate close roots fail that check and are returned untouched.
    """
    n = len(z)
    noise_rel = 8.0 * n * _EPS
    pair_radius = 4.0 * noise_rel ** (1.0 / n)
    groups: list[list[int]] = []
    assigned = [False] * n
    for i in range(n):
        if assigned[i]:
            continue
        group = [i]
        assigned[i] = True
        queue = [i]
        while queue:
            a = queue.pop()
            for b in range(n):
                if not assigned[b] and abs(z[a] - z[b]) <= pair_radius * (1.0 + abs(z[a])):
                    assigned[b] = True
                    group.append(b)
                    queue.append(b)
        groups.append(group)
    out = list(z)
    for group in groups:
        m = len(group)
        if m < 2:
            continue
        center = sum(z[i] for i in group) / m
        dcoef = _derivative_coeffs(c, m - 1)
        for _ in range(60):
            f, df = _poly_eval_pair(dcoef, center)
            if df == 0.0:
                break
            step = f / df
            center -= step
            if abs(step) <= 4.0 * _EPS * (1.0 + abs(center)):
                break
        f_center, _ = _poly_eval_pair(c, center)
        noise_at = noise_rel * _poly_noise_scale(c, center) + 1e-300
        spread_ok = all(
            abs(z[i] - center) <= pair_radius * (1.0 + abs(center)) for i in group
        )
        if abs(f_center) <= 64.0 * noise_at and spread_ok:
            for i in group:
                out[i] = center
    return out


def solve_poly_aberth(coeffs: Sequence[complex], max_iter: int = 100) -> list[complex]:
    """All roots of a dense polynomial by simultaneous Aberth iteration.

    ``coeffs`` are descending, degree 1..12, with a nonzero leading
    coefficient.  Roots start on a circle bounded by the Cauchy radius and are
    iterated together; a guarded Newton polish and a cluster snap finish the
    job.  Close roots are always reported individually, never merged.  Raises
    NoConvergence (with the best residual) if the backward error never falls
    below 1e-10 of the coefficient scale.
    """
    c = [complex(x) for x in coeffs]
    if len(c) < 2:
        raise DegenerateInput("polynomial degree must be at least 1")
    if not all(cmath.isfinite(x) for x in c):
        raise DegenerateInput("polynomial coefficients must be finite")
    if c[0] == 0.0:
        raise DegenerateInput("leading coefficient must be nonzero")
    n = len(c) - 1
    if n > _MAX_DEGREE:
        raise DegenerateInput(f"degree {n} exceeds the supported maximum {_MAX_DEGREE}")
    c = [x / c[0] for x in c]
    if n == 1:
        return [-c[1]]
    # Fujiwara-type root bound: scales correctly with the coefficients, so
    # badly scaled physical polynomials do not overflow the first sweep.
    bounds = [abs(c[k]) ** (1.0 / k) for k in range(1, n + 1) if c[k] != 0.0]
    radius = 2.0 * max(bounds) if bounds else 1.0
    z = [
        radius * cmath.exp(2j * math.pi * (k + 0.35) / n)
        for k in range(n)
    ]
    for _ in range(max_iter):
        moved = 0.0
        for i in range(n):
            zi = z[i]
            f, df = _poly_eval_pair(c, zi)
            if f == 0.0:
                continue
            if df == 0.0:
                # Sitting on a critical point; nudge off it.
                z[i] = zi + (1e-6 + 1e-6j) * (1.0 + abs(zi))
                moved = 1.0
                continue
            w = f / df
            s = 0.0j
            for j in range(n):
                if j != i:
                    dz = zi - z[j]
                    if dz == 0.0:
                        dz = 1e-12 * (1.0 + abs(zi))
                    s += 1.0 / dz
            denom = 1.0 - w * s
            step = w if denom == 0.0 else w / denom
            z[i] = zi - step
            rel = abs(step) / (1.0 + abs(zi))
            if rel > moved:
                moved = rel
        if moved <= 30.0 * _EPS:
            break
    for i in range(n):
        z[i] = _polish_general(c, z[i])
    z = _snap_root_clusters(c, z)
    residuals = [
        abs(_poly_eval_pair(c, zi)[0]) / (_poly_noise_scale(c, zi) + 1e-300)
        for zi in z
    ]
    worst = max(residuals)
    if worst > 1e-10:
        raise NoConvergence("polynomial root iteration did not converge", worst)
    return z


def _polish_general(c: Sequence[complex], w: complex) -> complex:
    best = w
    best_f = abs(_poly_eval_pair(c, w)[0])
    for _ in range(3):
        if best_f == 0.0:
            break
        f, df = _poly_eval_pair(c, best)
        if df == 0.0:
            break
        cand = best - f / df
        fc = abs(_poly_eval_pair(c, cand)[0])
        if fc >= best_f:
            break
        best, best_f = cand, fc
    return best


def char_poly(a) -> np.ndarray:
    """Monic characteristic coefficients of det(w*I - A), descending.

    Uses the trace recursion (Faddeev-LeVerrier), so the coefficient of
    w**(n-1) equals -trace(A) exactly as computed.  Real input yields real
    coefficients.
    """
    m = np.asarray(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DegenerateInput("matrix must be square")
    n = m.shape[0]
    if n > _MAX_DEGREE:
        raise DegenerateInput(f"order {n} exceeds the supported maximum {_MAX_DEGREE}")
    if not np.all(np.isfinite(m.view(float) if m.dtype.kind == "c" else m)):
        raise DegenerateInput("matrix entries must be finite")
    dt = np.complex128 if m.dtype.kind == "c" else np.float64
    m = m.astype(dt)
    eye = np.eye(n, dtype=dt)
    coeffs = np.empty(n + 1, dtype=dt)
    coeffs[0] = 1.0
    work = eye.copy()
    for k in range(1, n + 1):
        am = m @ work
        ck = -np.trace(am) / k
        coeffs[k] = ck
        work = am + ck * eye
    return coeffs


def balance_matrix(a) -> np.ndarray:
    """Diagonal similarity scaling equalizing row/column norms (radix 2).

    Eigenvalues and the characteristic polynomial are unchanged; conditioning
    of downstream polynomial work improves for badly scaled physical
    matrices.
    """
    m = np.array(a, dtype=np.complex128 if np.asarray(a).dtype.kind == "c" else np.float64)
    n = m.shape[0]
    for _ in range(50):
        done = True
        for i in range(n):
            row = float(np.sum(np.abs(m[i, :]))) - abs(m[i, i])
            col = float(np.sum(np.abs(m[:, i]))) - abs(m[i, i])
            if row == 0.0 or col == 0.0:
                continue
            start = row + col
            f = 1.0
            while col < 0.5 * row:
                col *= 2.0
                row *= 0.5
                f *= 2.0
            while col >= 2.0 * row:
                col *= 0.5
                row *= 2.0
                f *= 0.5
            if f != 1.0 and (col + row) < 0.95 * start:
                done = False
                m[i, :] /= f
                m[:, i] *= f
        if done:
            break
    return m


def eigvals_small(a) -> list[complex]:
    """Eigenvalues of a small dense matrix via its characteristic polynomial.

    The matrix is balanced first; the polynomial is then solved with the
    Aberth iteration and Newton polish.  Intended for n <= 12.
    """
    coeffs = char_poly(balance_matrix(a))
    return solve_poly_aberth([complex(x) for x in coeffs])


def match_branches(prev: Sequence[complex], next_: Sequence[complex]) -> tuple[int, ...]:
    """Permutation sigma minimizing sum_i |next[sigma[i]] - prev[i]|.

    Exhaustive over permutations; restricted to k <= 6 where that is exact
    and cheap.  Use it to keep root branches continuous along a sweep.
    """
    if len(prev) != len(next_):
        raise DegenerateInput("branch lists must have equal length")
    k = len(prev)
    if k == 0:
        return ()
    if k > _MATCH_LIMIT:
        raise DegenerateInput(f"branch matching supports at most {_MATCH_LIMIT} branches")
    best_perm = None
    best_cost = math.inf
    for perm in permutations(range(k)):
        cost = 0.0
        for i in range(k):
            cost += abs(next_[perm[i]] - prev[i])
            if cost >= best_cost:
                break
        if cost < best_cost:
            best_cost = cost
            best_perm = perm
    return best_perm


def routh_hurwitz_stable(real_coeffs: Sequence[float]) -> bool:
    """True iff every root of the real polynomial has negative real part.

    Input is descending with a positive leading coefficient, degree <= 12.
    Zero pivots with a nonzero remainder row get the standard epsilon
    substitution; a row vanishing identically raises DegenerateArray so the
    caller can fall back to an eigenvalue test.
    """
    c = [float(x) for x in real_coeffs]
    if len(c) < 1 or not all(math.isfinite(x) for x in c):
        raise DegenerateInput("coefficients must be finite")
    if c[0] <= 0.0:
        raise DegenerateInput("leading coefficient must be positive")
    degree = len(c) - 1
    if degree > _MAX_DEGREE:
        raise DegenerateInput(f"degree {degree} exceeds the supported maximum {_MAX_DEGREE}")
    if degree == 0:
        return True
    # Any negative coefficient already rules out a Hurwitz polynomial.
    if any(x < 0.0 for x in c):
        return False
    # Zero constant term means a root at the origin: certainly not stable.
    if c[-1] == 0.0:
        return False
    table_scale = max(abs(x) for x in c)
    width = degree // 2 + 1
    rows = [c[0::2], c[1::2]]
    rows = [r + [0.0] * (width - len(r)) for r in rows]
    first_column = [rows[0][0], rows[1][0]]
    for _ in range(degree - 1):
        upper, lower = rows[-2], rows[-1]
        if all(abs(x) <= 1e-290 * table_scale for x in lower):
            raise DegenerateArray("stability table row vanished identically")
        pivot = lower[0]
        if pivot == 0.0:
            # Epsilon substitution: keep going with a tiny positive pivot.
            pivot = 1e-24 * table_scale
        new = [
            (pivot * upper[j + 1] - upper[0] * lower[j + 1]) / pivot
            for j in range(width - 1)
        ] + [0.0]
        rows.append(new)
        lead = new[0]
        if lead == 0.0 and any(abs(x) > 1e-290 * table_scale for x in new):
            lead = 1e-24 * table_scale
        first_column.append(lead)
    sign_changes = 0
    previous = first_column[0]
    for value in first_column[1:]:
        if value == 0.0:
            value = 1e-24 * table_scale
        if (value > 0.0) != (previous > 0.0):
            sign_changes += 1
        previous = value
    return sign_changes == 0
