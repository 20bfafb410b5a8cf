"""Configuration parsing, tabular export, figure presets, and the CLI.

Configuration is INI-style with a flat key namespace (section headers are
accepted and ignored); keys carry explicit units in their names
(``omega_m_rad_s``, ``P_in_W``).  The operating point defaults to the
balanced compound system, red-detuned by one mechanical frequency at 1 mW.
Rates can be given as ratios (``kappa_over_gamma``) or absolutely
(``kappa_rad_s``); an absolute value wins over its ratio.

Tables are written as RFC-4180-style CSV (header row, shortest round-trip
float formatting) or JSON arrays of objects.  Undefined cells must arrive
as status strings, never NaN; export refuses non-finite numbers so that
policy cannot erode silently.

Figure presets sweep the library over fixed parameter sets and emit one CSV
and one SVG per panel plus a run manifest.  Rendering is pinned to the Agg
backend with a fixed hash salt and no embedded dates, so reruns with the
same configuration reproduce output files byte for byte.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import math
import sys
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import matplotlib
import numpy as np

from .cooling import CoolingRow, baseline_n0, cooling_sweep
from .model import (
    DerivedRateOverride,
    NonPositiveInput,
    RawConfig,
    derive_params,
    update_params,
)
from .response import effective_response, stability, transfer_matrix
from .steady_state import solve_steady_state
from .supermodes import locate_ep, spectrum_exact, sweep_spectrum

matplotlib.use("Agg")

_log = logging.getLogger("ep3_optomech.config")

TABLE_FORMATS = ("csv", "json")
ALL_FORMATS = ("csv", "json", "svg")
FIGURE_PRESETS = ("fig2", "fig3", "fig4", "fig5")


class ParseError(ValueError):
    """Configuration input rejected; the message names the key or line."""


class UnknownKey(ParseError):
    """Configuration key is not recognized."""


class IoError(OSError):
    """Table or figure output could not be produced."""


@dataclass(frozen=True)
class SweepSpec:
    """Resolved output plan: what to sweep, where to write, in which formats."""

    preset: str | None
    axes: tuple[str, ...]
    grids: tuple[tuple[float, ...], ...]
    overrides: dict[str, float]
    output: Path
    formats: tuple[str, ...]


# CLI defaults are a live operating point; model-level RawConfig defaults are inert.
_DEFAULTS: dict[str, float] = {
    "wavelength_m": 1.55e-6,
    "radius_m": 20e-6,
    "Q_c": 1e6,
    "Q_m": 1e3,
    "mass_kg": 1e-14,
    "omega_m_rad_s": 2.0 * math.pi * 500e6,
    "P_in_W": 1e-3,
    "T_K": 300.0,
    "kappa_over_gamma": 1.0,
    "J_over_gamma": 1.0,
    "Delta_over_omega_m": -1.0,
}

# Optional keys without defaults: direct rate overrides and absolute inputs.
_OPTIONAL_KEYS = (
    "gamma_rad_s",
    "Gamma_m_rad_s",
    "xi_rad_s_m",
    "kappa_rad_s",
    "J_rad_s",
    "Delta_rad_s",
)

_KNOWN_KEYS = frozenset(_DEFAULTS) | frozenset(_OPTIONAL_KEYS)


def parse_config(
    path: str | Path | None = None,
    assignments: Sequence[str] = (),
    preset: str | None = None,
    axes: Sequence[str] = (),
    grids: Sequence[Sequence[float]] = (),
    output: str | Path = ".",
    formats: Sequence[str] = ("csv",),
) -> tuple[RawConfig, SweepSpec]:
    """Resolve file keys, then ``key=value`` assignments, onto the defaults.

    Every resolved parameter is echoed to the run log.  Raises ParseError
    (malformed value, bad sweep plan, invalid physics input) or UnknownKey.
    """
    values = dict(_DEFAULTS)
    extras: dict[str, float] = {}
    if path is not None:
        _merge(values, extras, _read_ini(Path(path)))
    _merge(values, extras, _read_assignments(assignments))

    base = RawConfig(
        wavelength=values["wavelength_m"],
        radius=values["radius_m"],
        Q_c=values["Q_c"],
        Q_m=values["Q_m"],
        mass=values["mass_kg"],
        omega_m=values["omega_m_rad_s"],
        P_in=values["P_in_W"],
        T=values["T_K"],
        gamma=extras.get("gamma_rad_s"),
        Gamma_m=extras.get("Gamma_m_rad_s"),
        xi=extras.get("xi_rad_s_m"),
    )
    try:
        # Provisional derivation just resolves gamma for the ratio keys; the
        # override notice is left to the first real derivation by the caller.
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DerivedRateOverride)
            derived = derive_params(base)
    except NonPositiveInput as exc:
        raise ParseError(str(exc)) from exc
    # An absolute rate wins over its ratio form.
    kappa = extras.get("kappa_rad_s", values["kappa_over_gamma"] * derived.gamma)
    J = extras.get("J_rad_s", values["J_over_gamma"] * derived.gamma)
    Delta = extras.get("Delta_rad_s", values["Delta_over_omega_m"] * derived.omega_m)
    raw = RawConfig(
        wavelength=base.wavelength, radius=base.radius, Q_c=base.Q_c, Q_m=base.Q_m,
        mass=base.mass, omega_m=base.omega_m, P_in=base.P_in, T=base.T,
        kappa=kappa, J=J, Delta=Delta,
        gamma=base.gamma, Gamma_m=base.Gamma_m, xi=base.xi,
    )
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DerivedRateOverride)
            final = derive_params(raw)
    except NonPositiveInput as exc:
        raise ParseError(str(exc)) from exc
    for name, value in asdict(raw).items():
        _log.info("resolved %s = %r", name, value)
    _log.info("resolved gamma = %r (kappa/gamma = %g, J/gamma = %g, Delta/omega_m = %g)",
              final.gamma, final.kappa / final.gamma, final.J / final.gamma,
              final.Delta / final.omega_m)

    spec = _make_sweep_spec(preset, axes, grids, dict(values, **extras), output, formats)
    return raw, spec


def _make_sweep_spec(preset, axes, grids, overrides, output, formats) -> SweepSpec:
    if preset is not None and preset not in FIGURE_PRESETS:
        raise ParseError(f"unknown figure preset {preset!r}; choose from {FIGURE_PRESETS}")
    fmts = tuple(dict.fromkeys(formats))
    for f in fmts:
        if f not in ALL_FORMATS:
            raise ParseError(f"unknown output format {f!r}; choose from {ALL_FORMATS}")
    if len(axes) != len(grids):
        raise ParseError(f"got {len(axes)} axes but {len(grids)} grids")
    checked = tuple(_monotone_grid(name, g) for name, g in zip(axes, grids))
    return SweepSpec(
        preset=preset,
        axes=tuple(axes),
        grids=checked,
        overrides=overrides,
        output=Path(output),
        formats=fmts,
    )


def _monotone_grid(name: str, grid: Sequence[float]) -> tuple[float, ...]:
    vals = tuple(float(v) for v in grid)
    if not vals:
        raise ParseError(f"grid for axis {name!r} is empty")
    steps = [b - a for a, b in zip(vals, vals[1:])]
    if steps and not (all(s > 0.0 for s in steps) or all(s < 0.0 for s in steps)):
        raise ParseError(f"grid for axis {name!r} must be strictly monotone")
    return vals


def _read_ini(path: Path) -> dict[str, str]:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read config file {path}: {exc}") from exc
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case-sensitive (P_in_W vs p_in_w)
    try:
        # A leading synthetic section makes bare key=value files legal.
        cp.read_string("[params]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ParseError(str(exc)) from exc
    out: dict[str, str] = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            out[key] = value
    return out


def _read_assignments(assignments: Sequence[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for item in assignments:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ParseError(f"assignment {item!r} is not of the form key=value")
        out[key.strip()] = value.strip()
    return out


def _merge(values: dict[str, float], extras: dict[str, float],
           incoming: Mapping[str, str]) -> None:
    for key, text in incoming.items():
        if key not in _KNOWN_KEYS:
            raise UnknownKey(f"unknown configuration key {key!r}")
        try:
            num = float(text)
        except ValueError as exc:
            raise ParseError(f"malformed numeric for key {key!r}: {text!r}") from exc
        if key in _DEFAULTS:
            values[key] = num
        else:
            extras[key] = num


# ---------------------------------------------------------------------------
# tabular export


def export_table(
    rows: Sequence[Mapping[str, object]],
    fmt: str,
    path: str | Path,
    fieldnames: Sequence[str] | None = None,
) -> Path:
    """Write homogeneous records as CSV or JSON; returns the path written.

    Floats are rendered with shortest round-trip formatting, so reading the
    table back recovers bit-identical values.  Non-finite numbers are
    refused: undefined cells must already be status strings.
    """
    rows = list(rows)
    if fieldnames is None:
        if not rows:
            raise IoError("an empty table needs explicit fieldnames for its header")
        fieldnames = list(rows[0].keys())
    fieldnames = list(fieldnames)
    for i, row in enumerate(rows):
        if list(row.keys()) != fieldnames:
            raise IoError(f"row {i} fields {list(row.keys())!r} differ from header")
        for key, v in row.items():
            if isinstance(v, (float, np.floating)) and not math.isfinite(float(v)):
                raise IoError(
                    f"non-finite number in row {i} column {key!r}; "
                    "serialize undefined cells as status strings"
                )
    path = Path(path)
    try:
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(fieldnames)
                for row in rows:
                    writer.writerow([_cell(row[k]) for k in fieldnames])
        elif fmt == "json":
            payload = [{k: _json_value(row[k]) for k in fieldnames} for row in rows]
            with open(path, "w") as fh:
                json.dump(payload, fh, allow_nan=False, separators=(",", ":"))
                fh.write("\n")
        else:
            raise IoError(f"unsupported table format {fmt!r}; choose from {TABLE_FORMATS}")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def _cell(v: object) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_value(v: object):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return str(v)


def cooling_records(rows: Sequence[CoolingRow], axes: Sequence[str]) -> list[dict]:
    """CoolingRow list to table records; undefined cells become the status."""
    out = []
    for row in rows:
        rec: dict[str, object] = dict(zip(axes, row.axis_values))
        for name in ("omega_eff", "gamma_eff", "n", "n0", "beta"):
            value = getattr(row, name)
            rec[name] = row.status if math.isnan(value) else value
        rec["status"] = row.status
        rec["stable"] = row.stable
        out.append(rec)
    return out


# ---------------------------------------------------------------------------
# figure presets


@dataclass(frozen=True)
class _Panel:
    name: str
    title: str
    xlabel: str
    ylabel: str
    logy: bool
    rows: list[dict]
    curves: list[tuple[str, str, str]]   # (legend label, x column, y column)


_FIG_RC = {
    "svg.hashsalt": "ep3-optomech",
    "svg.fonttype": "path",
    "figure.dpi": 100,
    "figure.figsize": (4.2, 3.0),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
}


def run_figure(
    preset: str,
    raw: RawConfig | None = None,
    out_dir: str | Path = ".",
    formats: Sequence[str] = ("csv", "svg"),
    grid_points: int = 400,
) -> Path:
    """Produce one preset's panels (CSV and/or SVG) plus a run manifest.

    Panel failures are recorded in the manifest and do not abort the run;
    files already written stay in place.  Returns the manifest path.
    """
    if preset not in FIGURE_PRESETS:
        raise ValueError(f"unknown figure preset {preset!r}; choose from {FIGURE_PRESETS}")
    if grid_points < 3:
        raise ValueError(f"grid_points must be at least 3, got {grid_points}")
    raw = raw if raw is not None else parse_config()[0]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    builder: Callable[[RawConfig, int], list[_Panel]] = _PRESET_BUILDERS[preset]

    files: list[str] = []
    errors: list[dict[str, str]] = []
    try:
        panels = builder(raw, grid_points)
    except Exception as exc:  # record, keep the manifest honest
        panels = []
        errors.append({"panel": preset, "error": type(exc).__name__, "message": str(exc)})
    for panel in panels:
        if "csv" in formats:
            try:
                files.append(export_table(panel.rows, "csv", out / f"{panel.name}.csv").name)
            except Exception as exc:
                errors.append({"panel": panel.name, "error": type(exc).__name__,
                               "message": str(exc)})
        if "json" in formats:
            try:
                files.append(export_table(panel.rows, "json", out / f"{panel.name}.json").name)
            except Exception as exc:
                errors.append({"panel": panel.name, "error": type(exc).__name__,
                               "message": str(exc)})
        if "svg" in formats:
            try:
                files.append(_render_panel(panel, out).name)
            except Exception as exc:
                errors.append({"panel": panel.name, "error": type(exc).__name__,
                               "message": str(exc)})
    manifest = {
        "preset": preset,
        "grid_points": grid_points,
        "config": asdict(raw),
        "files": sorted(files),
        "errors": errors,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def _render_panel(panel: _Panel, out: Path) -> Path:
    from matplotlib import pyplot as plt

    path = out / f"{panel.name}.svg"
    with plt.rc_context(_FIG_RC):
        fig, ax = plt.subplots()
        for label, xkey, ykey in panel.curves:
            xs = [r[xkey] for r in panel.rows if isinstance(r[ykey], (int, float))]
            ys = [r[ykey] for r in panel.rows if isinstance(r[ykey], (int, float))]
            ax.plot(xs, ys, label=label)
        if panel.logy:
            ax.set_yscale("log")
        ax.set_xlabel(panel.xlabel)
        ax.set_ylabel(panel.ylabel)
        ax.set_title(panel.title)
        if len(panel.curves) > 1:
            ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def _linspace(lo: float, hi: float, n: int) -> list[float]:
    return [float(v) for v in np.linspace(lo, hi, n)]


def _fig2_panels(raw: RawConfig, n: int) -> list[_Panel]:
    # Supermode spectra vs kappa/gamma at fixed 1 mW, J = gamma.
    params = derive_params(raw)
    tpl = update_params(params, J=params.gamma, P_in=1e-3)
    g, wm = params.gamma, params.omega_m
    panels: list[_Panel] = []
    jobs = [
        ("detuning_half", -0.5, 0.0, 2.0),
        ("detuning_unity", -1.0, 0.0, 2.0),
        ("zoom", -1.0, 0.9, 1.1),
    ]
    for tag, dratio, lo, hi in jobs:
        tpl_d = update_params(tpl, Delta=dratio * wm)
        ratios = _linspace(lo, hi, n)
        specs = sweep_spectrum(tpl_d, "kappa", [r * g for r in ratios])
        labels = specs[0].labels
        re_rows, im_rows = [], []
        for r, spec in zip(ratios, specs):
            by = dict(zip(spec.labels, spec.omegas))
            re_rows.append({"kappa_ratio": r, **{f"re_{l}": by[l].real / wm for l in labels}})
            im_rows.append({"kappa_ratio": r, **{f"im_{l}": by[l].imag / g for l in labels}})
        curves_re = [(l, "kappa_ratio", f"re_{l}") for l in labels]
        curves_im = [(l, "kappa_ratio", f"im_{l}") for l in labels]
        panels.append(_Panel(f"fig2_re_spectrum_{tag}", f"Re spectrum, Δ/ω_m = {dratio:g}",
                             "κ/γ", "Re ω / ω_m", False, re_rows, curves_re))
        panels.append(_Panel(f"fig2_im_spectrum_{tag}", f"Im spectrum, Δ/ω_m = {dratio:g}",
                             "κ/γ", "Im ω / γ", False, im_rows, curves_im))
    return panels


def _fig3_panels(raw: RawConfig, n: int) -> list[_Panel]:
    # Effective mechanical frequency and damping vs kappa/gamma at 0.1 mW.
    params = derive_params(raw)
    tpl = update_params(params, J=params.gamma, P_in=1e-4, Delta=-params.omega_m)
    panels: list[_Panel] = []
    for tag, lo, hi in (("gain_side", 0.0, 2.0), ("passive_side", -2.0, 0.0)):
        rows = cooling_sweep(tpl, ["kappa_ratio"], [_linspace(lo, hi, n)])
        recs = []
        for row in rows:
            w = row.omega_eff / params.omega_m if math.isfinite(row.omega_eff) else row.status
            d = row.gamma_eff / params.Gamma_m if math.isfinite(row.gamma_eff) else row.status
            recs.append({"kappa_ratio": row.axis_values[0], "omega_eff_ratio": w,
                         "gamma_eff_ratio": d, "status": row.status})
        panels.append(_Panel(f"fig3_omega_eff_{tag}", f"Effective frequency ({tag})",
                             "κ/γ", "Ω_eff / ω_m", False, recs,
                             [("Ω_eff", "kappa_ratio", "omega_eff_ratio")]))
        panels.append(_Panel(f"fig3_gamma_eff_{tag}", f"Effective damping ({tag})",
                             "κ/γ", "Γ_eff / Γ_m", False, recs,
                             [("Γ_eff", "kappa_ratio", "gamma_eff_ratio")]))
    return panels


def _fig4_panels(raw: RawConfig, n: int) -> list[_Panel]:
    # Cooling enhancement vs detuning; occupancy vs detuning per temperature.
    params = derive_params(raw)
    g, wm = params.gamma, params.omega_m
    dgrid = _linspace(-2.0, -0.1, n)
    panels: list[_Panel] = []

    tpl_pp = update_params(params, J=g, kappa=-g, P_in=1e-4)
    rows = cooling_sweep(tpl_pp, ["Delta_ratio"], [dgrid])
    recs = [{"Delta_ratio": r.axis_values[0],
             "beta": r.status if math.isnan(r.beta) else r.beta,
             "status": r.status} for r in rows]
    panels.append(_Panel("fig4_beta_passive_passive", "Passive-passive enhancement",
                         "Δ/ω_m", "β", True, recs, [("κ/γ = -1", "Delta_ratio", "beta")]))

    for tag, power in (("low_power", 1e-4), ("high_power", 1e-3)):
        merged = [{"Delta_ratio": d} for d in dgrid]
        curves = []
        for kr in (1.001, 1.05, 1.2):
            tpl = update_params(params, J=g, kappa=kr * g, P_in=power)
            rows = cooling_sweep(tpl, ["Delta_ratio"], [dgrid])
            col = f"beta_kappa_{kr:g}"
            for rec, row in zip(merged, rows):
                rec[col] = row.status if math.isnan(row.beta) else row.beta
            curves.append((f"κ/γ = {kr:g}", "Delta_ratio", col))
        panels.append(_Panel(f"fig4_beta_gain_loss_{tag}",
                             f"Enhancement near balance, P_in = {power * 1e3:g} mW",
                             "Δ/ω_m", "β", True, merged, curves))

    tpl_T = update_params(params, J=g, kappa=1.001 * g, P_in=0.12e-3)
    merged = [{"Delta_ratio": d} for d in dgrid]
    curves = []
    for T in (300.0, 20.0, 0.65):
        rows = cooling_sweep(update_params(tpl_T, T=T), ["Delta_ratio"], [dgrid])
        col = f"n_T_{T:g}K"
        for rec, row in zip(merged, rows):
            rec[col] = row.status if math.isnan(row.n) else row.n
        curves.append((f"T = {T:g} K", "Delta_ratio", col))
    panels.append(_Panel("fig4_phonon_vs_temperature",
                         "Occupancy near balance, P_in = 0.12 mW",
                         "Δ/ω_m", "n", True, merged, curves))
    return panels


def _fig5_panels(raw: RawConfig, n: int) -> list[_Panel]:
    # Baseline and compound occupancies vs detuning for several powers.
    params = derive_params(raw)
    g, wm = params.gamma, params.omega_m
    dgrid = _linspace(-2.0, -0.1, n)
    powers = (1e-4, 5e-4, 1e-3)

    base_rows = [{"Delta_ratio": d} for d in dgrid]
    base_curves = []
    for P in powers:
        col = f"n0_P_{P * 1e3:g}mW"
        for rec, d in zip(base_rows, dgrid):
            rec[col] = baseline_n0(params, params.T, detuning=d * wm, P_in=P)
        base_curves.append((f"P_in = {P * 1e3:g} mW", "Delta_ratio", col))

    comp_rows = [{"Delta_ratio": d} for d in dgrid]
    comp_curves = []
    for P in powers:
        tpl = update_params(params, J=g, kappa=1.001 * g, P_in=P)
        rows = cooling_sweep(tpl, ["Delta_ratio"], [dgrid])
        col = f"n_P_{P * 1e3:g}mW"
        for rec, row in zip(comp_rows, rows):
            rec[col] = row.status if math.isnan(row.n) else row.n
        comp_curves.append((f"P_in = {P * 1e3:g} mW", "Delta_ratio", col))

    return [
        _Panel("fig5_baseline_occupancy", "Single passive cavity",
               "Δ/ω_m", "n₀", True, base_rows, base_curves),
        _Panel("fig5_compound_occupancy", "Compound system, κ/γ = 1.001",
               "Δ/ω_m", "n", True, comp_rows, comp_curves),
    ]


_PRESET_BUILDERS: dict[str, Callable[[RawConfig, int], list[_Panel]]] = {
    "fig2": _fig2_panels,
    "fig3": _fig3_panels,
    "fig4": _fig4_panels,
    "fig5": _fig5_panels,
}


# ---------------------------------------------------------------------------
# command-line interface


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", default=None,
                        help="INI configuration file")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        dest="assignments", help="override one configuration key")
    common.add_argument("--out", metavar="DIR", default=".",
                        help="output directory (created if missing)")
    common.add_argument("--format", default=None,
                        help="comma-separated output formats (default csv; "
                             "figure default csv,svg)")
    common.add_argument("--branch", type=int, default=0,
                        help="steady-state branch index when multistable")
    common.add_argument("--grid-points", type=int, default=400,
                        help="points per sweep axis")
    common.add_argument("--quiet", action="store_true",
                        help="suppress the resolved-parameter echo")

    parser = argparse.ArgumentParser(
        prog="ep3-optomech",
        description="Supermode spectra, steady states, and phonon cooling for a "
                    "gain-loss coupled-cavity optomechanical system.",
        epilog="Worker count for sweeps honors the EP3_OPTOMECH_WORKERS "
               "environment variable.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common],
                   help="three supermode eigenfrequencies at the operating point")
    sub.add_parser("steady-state", parents=[common],
                   help="all steady-state branches at the operating point")
    sub.add_parser("response", parents=[common],
                   help="effective mechanical frequency, damping, and stability")
    sub.add_parser("cooling", parents=[common],
                   help="phonon number, baseline, and enhancement factor")

    sw = sub.add_parser("sweep", parents=[common], help="cooling sweep over 1 or 2 axes")
    sw.add_argument("--axis", action="append", required=True, dest="axes",
                    choices=["kappa_ratio", "Delta_ratio", "P_in", "T"])
    sw.add_argument("--start", action="append", required=True, type=float)
    sw.add_argument("--stop", action="append", required=True, type=float)
    sw.add_argument("--points", action="append", type=int, default=None)

    ep = sub.add_parser("ep-locate", parents=[common],
                        help="localize an eigenvalue coalescence along one axis")
    ep.add_argument("--axis", default="kappa", choices=["kappa", "Delta", "J"])
    ep.add_argument("--bracket", nargs=2, type=float, required=True,
                    metavar=("LO", "HI"),
                    help="search bracket in ratio units (kappa/gamma, "
                         "Delta/omega_m, or J/gamma)")
    ep.add_argument("--measure", default="min", choices=["min", "max"],
                    help="pairwise-separation statistic: min finds two-fold "
                         "coalescences, max three-fold")
    ep.add_argument("--policy", default="self_consistent",
                    choices=["self_consistent", "zero"],
                    help="optomechanical coupling policy during the scan")

    fig = sub.add_parser("figure", parents=[common], help="reproduce a figure preset")
    fig.add_argument("preset", choices=list(FIGURE_PRESETS))
    return parser


def _setup_logging(quiet: bool) -> None:
    logging.basicConfig(stream=sys.stderr, format="%(message)s",
                        level=logging.WARNING if quiet else logging.INFO)


def _resolve_formats(args, default: tuple[str, ...], allowed: tuple[str, ...]):
    if args.format is None:
        return default
    fmts = tuple(dict.fromkeys(f.strip() for f in args.format.split(",") if f.strip()))
    for f in fmts:
        if f not in allowed:
            raise ParseError(f"format {f!r} not supported by this subcommand; "
                             f"choose from {allowed}")
    return fmts


def _table_outputs(rows, fieldnames, stem, out_dir, fmts) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [export_table(rows, fmt, out / f"{stem}.{fmt}", fieldnames) for fmt in fmts]


def _write_manifest(out_dir: Path, command: str, raw: RawConfig,
                    files: list[Path]) -> Path:
    manifest = {
        "subcommand": command,
        "config": asdict(raw),
        "files": sorted(p.name for p in files),
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _cmd_spectrum(args) -> list[Path]:
    raw, spec = parse_config(args.config, args.assignments, output=args.out,
                             formats=_resolve_formats(args, ("csv",), TABLE_FORMATS))
    p = derive_params(raw)
    if args.branch == 0:
        sp = spectrum_exact(p)
    else:
        st = solve_steady_state(p, args.branch)
        sp = spectrum_exact(p, G=st.G, detuning=st.Delta_bar)
    rows = [
        {"branch": label, "re_omega_rad_s": w.real, "im_omega_rad_s": w.imag,
         "re_over_omega_m": w.real / p.omega_m, "im_over_gamma": w.imag / p.gamma}
        for label, w in zip(sp.labels, sp.omegas)
    ]
    files = _table_outputs(rows, None, "spectrum", spec.output, spec.formats)
    files.append(_write_manifest(spec.output, "spectrum", raw, files))
    return files


def _cmd_steady_state(args) -> list[Path]:
    raw, spec = parse_config(args.config, args.assignments, output=args.out,
                             formats=_resolve_formats(args, ("csv",), TABLE_FORMATS))
    p = derive_params(raw)
    from .steady_state import steady_residual

    first = solve_steady_state(p, 0)
    rows = []
    for i in range(first.branch_count):
        st = solve_steady_state(p, i)
        rows.append({
            "branch_index": i,
            "intensity": abs(st.a2s) ** 2,
            "x_s_m": st.x_s,
            "Delta_bar_over_omega_m": st.Delta_bar / p.omega_m,
            "re_a1s": st.a1s.real, "im_a1s": st.a1s.imag,
            "re_a2s": st.a2s.real, "im_a2s": st.a2s.imag,
            "G_abs_over_gamma": abs(st.G) / p.gamma,
            "residual": steady_residual(st, p),
            "selected": i == args.branch,
        })
    files = _table_outputs(rows, None, "steady_state", spec.output, spec.formats)
    files.append(_write_manifest(spec.output, "steady-state", raw, files))
    return files


def _cmd_response(args) -> list[Path]:
    raw, spec = parse_config(args.config, args.assignments, output=args.out,
                             formats=_resolve_formats(args, ("csv",), TABLE_FORMATS))
    p = derive_params(raw)
    st = solve_steady_state(p, args.branch)
    report = stability(transfer_matrix(p, st))
    res = effective_response(p, st)
    rows = [{
        "omega_eff_rad_s": res.omega_eff,
        "gamma_eff_rad_s": res.gamma_eff,
        "omega_eff_over_omega_m": res.omega_eff / p.omega_m,
        "gamma_eff_over_Gamma_m": res.gamma_eff / p.Gamma_m,
        "stable": report.stable,
        "max_real_part_over_gamma": report.max_real_part / p.gamma,
        "marginal": report.marginal,
    }]
    files = _table_outputs(rows, None, "response", spec.output, spec.formats)
    files.append(_write_manifest(spec.output, "response", raw, files))
    return files


def _cmd_cooling(args) -> list[Path]:
    raw, spec = parse_config(args.config, args.assignments, output=args.out,
                             formats=_resolve_formats(args, ("csv",), TABLE_FORMATS))
    p = derive_params(raw)
    rows = cooling_sweep(p, ["kappa_ratio"], [[p.kappa / p.gamma]])
    recs = cooling_records(rows, ["kappa_ratio"])
    files = _table_outputs(recs, None, "cooling", spec.output, spec.formats)
    files.append(_write_manifest(spec.output, "cooling", raw, files))
    return files


def _cmd_sweep(args) -> list[Path]:
    counts = args.points if args.points else [args.grid_points] * len(args.axes)
    if not (len(args.axes) == len(args.start) == len(args.stop) == len(counts)):
        raise ParseError("--axis, --start, --stop (and --points when given) "
                         "must repeat the same number of times")
    grids = [_linspace(lo, hi, max(2, k)) if k > 1 else [lo]
             for lo, hi, k in zip(args.start, args.stop, counts)]
    raw, spec = parse_config(args.config, args.assignments, axes=args.axes,
                             grids=grids, output=args.out,
                             formats=_resolve_formats(args, ("csv",), TABLE_FORMATS))
    p = derive_params(raw)
    rows = cooling_sweep(p, list(spec.axes), [list(g) for g in spec.grids])
    recs = cooling_records(rows, spec.axes)
    files = _table_outputs(recs, None, "sweep", spec.output, spec.formats)
    files.append(_write_manifest(spec.output, "sweep", raw, files))
    return files


def _cmd_ep_locate(args) -> list[Path]:
    raw, spec = parse_config(args.config, args.assignments, output=args.out,
                             formats=_resolve_formats(args, ("csv",), TABLE_FORMATS))
    p = derive_params(raw)
    scale = p.omega_m if args.axis == "Delta" else p.gamma
    lo, hi = sorted(v * scale for v in args.bracket)
    best, cls = locate_ep(p, args.axis, (lo, hi), G_policy=args.policy,
                          measure=args.measure)
    pair = "+".join(cls.coalescing_pair) if cls.coalescing_pair else "all"
    rows = [{
        "axis": args.axis,
        "best_ratio": best / scale,
        "best_rad_s": best,
        "order": cls.order,
        "coalescing": pair,
        "min_separation_over_gamma": cls.min_separation / p.gamma,
    }]
    files = _table_outputs(rows, None, "ep_locate", spec.output, spec.formats)
    files.append(_write_manifest(spec.output, "ep-locate", raw, files))
    print(f"{args.axis} ratio {best / scale:.8f} (order {cls.order}, "
          f"separation {cls.min_separation / p.gamma:.3e} gamma)")
    return files


def _cmd_figure(args) -> list[Path]:
    raw, spec = parse_config(args.config, args.assignments, preset=args.preset,
                             output=args.out,
                             formats=_resolve_formats(args, ("csv", "svg"), ALL_FORMATS))
    manifest = run_figure(args.preset, raw, spec.output, spec.formats,
                          args.grid_points)
    listed = json.loads(manifest.read_text())
    return [manifest.parent / name for name in listed["files"]] + [manifest]


_COMMANDS = {
    "spectrum": _cmd_spectrum,
    "steady-state": _cmd_steady_state,
    "response": _cmd_response,
    "cooling": _cmd_cooling,
    "sweep": _cmd_sweep,
    "ep-locate": _cmd_ep_locate,
    "figure": _cmd_figure,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    args = _build_parser().parse_args(argv)
    _setup_logging(args.quiet)
    try:
        files = _COMMANDS[args.command](args)
    except Exception as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc),
                   "subcommand": args.command}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    for path in files:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
