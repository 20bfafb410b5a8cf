"""Phonon occupancy, single-cavity baseline, and cooling-enhancement factor.

The effective mechanical response (spring-shifted frequency and modified
damping) is converted into a steady-state phonon number

    n = (k_B T / hbar omega_m) * (Gamma_m / Gamma_eff) * (omega_m / Omega_eff)**3

and referenced against the same mechanics driven through a conventional
single lossy cavity (gain resonator deleted, tunneling off, red-detuned by
one mechanical frequency unless overridden).  The ratio beta = n / n0
measures how much the compound system improves on that baseline.

The cubic spring weighting above is the model's stated form; the
conventional linear weighting is available behind ``spring_exponent=1``
for sensitivity checks.

Near the gain-loss balance the full linearized dynamics is not stable even
though the net mechanical damping is positive and large.  Occupancies are
still evaluated there, and the linear-stability verdict travels alongside as
a separate flag so callers can filter on it; points with non-positive net
damping or a collapsed spring never get numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

from .model import CONSTANTS, SystemParams, update_params
from .numkernel import DegenerateInput, NoConvergence
from .response import (
    DivergentDenominator,
    StaticInstability,
    effective_response,
    stability,
    transfer_matrix,
)
from .steady_state import NoPhysicalRoot, SingularDenominator, solve_steady_state
from .util import parallel_map


class NotCooling(RuntimeError):
    """Phonon formula evaluated outside its domain (net damping or spring not positive)."""


class UndefinedCooling(RuntimeError):
    """No occupancy exists at this operating point; ``reason`` says why."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


@dataclass(frozen=True)
class OperatingPoint:
    """Dimensionless coordinates of an evaluated configuration."""

    kappa_ratio: float   # kappa / gamma
    Delta_ratio: float   # Delta / omega_m
    P_in: float          # input power (W)
    J_ratio: float       # J / gamma


@dataclass(frozen=True)
class CoolingResult:
    n: float
    n0: float
    beta: float
    T: float
    stable: bool
    params_snapshot: OperatingPoint


@dataclass(frozen=True)
class CoolingRow:
    """One sweep point; numeric fields are NaN when the status says undefined."""

    axis_values: tuple[float, ...]
    omega_eff: float
    gamma_eff: float
    n: float
    n0: float
    beta: float
    status: str
    stable: bool


_SWEEP_AXES = ("kappa_ratio", "Delta_ratio", "P_in", "T")


def phonon_number(
    params: SystemParams,
    omega_eff: float,
    gamma_eff: float,
    T: float,
    spring_exponent: int = 3,
) -> float:
    """Steady-state occupancy of the mechanical mode at bath temperature T.

    With gamma_eff = Gamma_m and omega_eff = omega_m this reduces to the
    bare thermal occupation k_B T / (hbar omega_m).
    """
    if spring_exponent not in (1, 3):
        raise ValueError(f"spring_exponent must be 1 or 3, got {spring_exponent!r}")
    if not (math.isfinite(T) and T >= 0.0):
        raise ValueError(f"temperature must be finite and nonnegative, got {T!r}")
    if not gamma_eff > 0.0:
        raise NotCooling(f"net damping gamma_eff = {gamma_eff!r} is not positive")
    if not omega_eff > 0.0:
        raise NotCooling(f"effective frequency omega_eff = {omega_eff!r} is not positive")
    thermal = CONSTANTS.k_B * T / (CONSTANTS.hbar * params.omega_m)
    return thermal * (params.Gamma_m / gamma_eff) * (params.omega_m / omega_eff) ** spring_exponent


def baseline_n0(
    params: SystemParams,
    T: float | None = None,
    detuning: float | None = None,
    P_in: float | None = None,
    spring_exponent: int = 3,
) -> float:
    """Occupancy for the same mechanics behind a single lossy cavity.

    The gain resonator is deleted (J = 0, kappa = 0) while the mechanical
    and optical-loss parameters are kept; the drive defaults to the same
    power, red-detuned by one mechanical frequency.  P_in = 0 returns the
    bare thermal occupation exactly.
    """
    T = params.T if T is None else T
    det = -params.omega_m if detuning is None else detuning
    power = params.P_in if P_in is None else P_in
    single = update_params(params, J=0.0, kappa=0.0, Delta=det, P_in=power)
    state = solve_steady_state(single)
    res = effective_response(single, state)
    return phonon_number(single, res.omega_eff, res.gamma_eff, T, spring_exponent)


def beta(
    params: SystemParams,
    T: float | None = None,
    baseline_detuning: float | None = None,
    baseline_P_in: float | None = None,
    spring_exponent: int = 3,
    branch_index: int = 0,
) -> CoolingResult:
    """Full cooling evaluation: compound occupancy, baseline, and their ratio.

    The baseline shares every rate with ``params`` and by default the same
    power; an unequal-power comparison passes ``baseline_P_in`` explicitly.
    Raises UndefinedCooling (with a reason) when the compound point is
    amplifying or its spring collapses.
    """
    T = params.T if T is None else T
    state = solve_steady_state(params, branch_index)
    report = stability(transfer_matrix(params, state))
    try:
        res = effective_response(params, state)
    except StaticInstability as exc:
        raise UndefinedCooling("static-instability", str(exc)) from exc
    if res.gamma_eff <= 0.0:
        raise UndefinedCooling(
            "amplifying", f"gamma_eff = {res.gamma_eff:.6e} at kappa/gamma = "
            f"{params.kappa / params.gamma:.6g}"
        )
    n = phonon_number(params, res.omega_eff, res.gamma_eff, T, spring_exponent)
    try:
        n0 = baseline_n0(params, T, baseline_detuning, baseline_P_in, spring_exponent)
    except NotCooling as exc:
        raise UndefinedCooling("baseline-amplifying", str(exc)) from exc
    snapshot = OperatingPoint(
        kappa_ratio=params.kappa / params.gamma,
        Delta_ratio=params.Delta / params.omega_m,
        P_in=params.P_in,
        J_ratio=params.J / params.gamma,
    )
    return CoolingResult(n=n, n0=n0, beta=n / n0, T=T, stable=report.stable,
                         params_snapshot=snapshot)


def cooling_sweep(
    params_template: SystemParams,
    axes: Sequence[str],
    grids: Sequence[Sequence[float]],
    spring_exponent: int = 3,
) -> list[CoolingRow]:
    """Evaluate cooling over one or two parameter grids, row-major order.

    Undefined points are flagged through ``status`` ("amplifying",
    "static-instability", "error:<kind>") rather than dropped; points that
    cool but sit on an unstable linearization report "unstable" and keep
    their numbers.
    """
    if not 1 <= len(axes) <= 2:
        raise ValueError(f"expected 1 or 2 sweep axes, got {len(axes)}")
    if len(set(axes)) != len(axes):
        raise ValueError(f"duplicate sweep axis in {tuple(axes)!r}")
    for name in axes:
        if name not in _SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {name!r}; choose from {_SWEEP_AXES}")
    if len(grids) != len(axes):
        raise ValueError(f"got {len(axes)} axes but {len(grids)} grids")
    checked = [_monotone_grid(name, g) for name, g in zip(axes, grids)]
    points = [tuple(vals) for vals in product(*checked)]
    snap = tuple(axes)

    def _one(values: tuple[float, ...]) -> CoolingRow:
        return _evaluate_point(params_template, snap, values, spring_exponent)

    return parallel_map(_one, points)


def _monotone_grid(name: str, grid: Sequence[float]) -> list[float]:
    vals = [float(v) for v in grid]
    if not vals:
        raise ValueError(f"grid for axis {name!r} is empty")
    steps = [b - a for a, b in zip(vals, vals[1:])]
    if steps and not (all(s > 0.0 for s in steps) or all(s < 0.0 for s in steps)):
        raise ValueError(f"grid for axis {name!r} must be strictly monotone")
    return vals


def _apply_axes(
    template: SystemParams, axes: tuple[str, ...], values: tuple[float, ...]
) -> SystemParams:
    changes: dict[str, float] = {}
    for name, v in zip(axes, values):
        if name == "kappa_ratio":
            changes["kappa"] = v * template.gamma
        elif name == "Delta_ratio":
            changes["Delta"] = v * template.omega_m
        else:
            changes[name] = v
    return update_params(template, **changes)


def _evaluate_point(
    template: SystemParams,
    axes: tuple[str, ...],
    values: tuple[float, ...],
    spring_exponent: int,
) -> CoolingRow:
    nan = math.nan
    try:
        p = _apply_axes(template, axes, values)
        state = solve_steady_state(p)
        stable = stability(transfer_matrix(p, state)).stable
    except (NoPhysicalRoot, SingularDenominator, NoConvergence, DegenerateInput) as exc:
        return CoolingRow(values, nan, nan, nan, nan, nan,
                          f"error:{type(exc).__name__}", False)
    try:
        res = effective_response(p, state)
    except StaticInstability:
        return CoolingRow(values, nan, nan, nan, nan, nan, "static-instability", stable)
    except DivergentDenominator as exc:
        return CoolingRow(values, nan, nan, nan, nan, nan,
                          f"error:{type(exc).__name__}", stable)
    if res.gamma_eff <= 0.0:
        return CoolingRow(values, res.omega_eff, res.gamma_eff, nan, nan, nan,
                          "amplifying", stable)
    try:
        n = phonon_number(p, res.omega_eff, res.gamma_eff, p.T, spring_exponent)
        n0 = baseline_n0(p, p.T, spring_exponent=spring_exponent)
    except NotCooling:
        return CoolingRow(values, res.omega_eff, res.gamma_eff, nan, nan, nan,
                          "baseline-amplifying", stable)
    status = "ok" if stable else "unstable"
    return CoolingRow(values, res.omega_eff, res.gamma_eff, n, n0, n / n0,
                      status, stable)
