"""Physical constants, raw configuration, and derived system rates.

The modeled device is a pair of tunneling-coupled optical microresonators,
one carrying gain (``kappa`` > 0) and one carrying loss (``gamma``), where the
lossy resonator also hosts a mechanical radial mode driven by radiation
pressure.  Every frequency-like quantity is stored as an angular rate in
rad/s; lengths, masses, powers, and temperatures are plain SI.

All containers here are immutable after construction and safe to share
between concurrent workers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional


class NonPositiveInput(ValueError):
    """A field that must be positive (or nonnegative) is not; names the field."""


class DerivedRateOverride(UserWarning):
    """Emitted when a directly supplied rate wins over its quality-factor route."""


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 fixed constants; never user-settable."""

    hbar: float = 1.054571817e-34  # reduced Planck constant (J s)
    k_B: float = 1.380649e-23      # Boltzmann constant (J/K)
    c: float = 299792458.0         # speed of light (m/s)


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class RawConfig:
    """User-facing inputs.

    ``kappa`` < 0 encodes a lossy (passive) first resonator; there is no
    separate mode flag.  The optional ``gamma``, ``Gamma_m``, ``xi`` entries
    are direct-rate overrides that win over the quality-factor route when
    both are available.  ``xi = 0`` is allowed as an explicit override to
    decouple the optics from the mechanics.
    """

    wavelength: float = 1.55e-6              # pump wavelength (m)
    Q_c: float = 1e6                         # optical quality factor, lossy resonator
    radius: float = 20e-6                    # resonator radius (m)
    omega_m: float = 2.0 * math.pi * 500e6   # mechanical angular frequency (rad/s)
    mass: float = 1e-14                      # effective motional mass (kg)
    Q_m: float = 1e3                         # mechanical quality factor
    kappa: float = 0.0                       # gain rate of resonator 1 (rad/s)
    J: float = 0.0                           # inter-resonator tunneling rate (rad/s)
    Delta: float = 0.0                       # pump detuning omega_L - omega_c (rad/s)
    P_in: float = 0.0                        # input power (W)
    T: float = 300.0                         # bath temperature (K)
    gamma: Optional[float] = None            # direct loss-rate override (rad/s)
    Gamma_m: Optional[float] = None          # direct mechanical-damping override (rad/s)
    xi: Optional[float] = None               # direct frequency-pull override (rad/(s m))


@dataclass(frozen=True)
class SystemParams:
    """RawConfig fields plus the rates derived from them.

    Derived fields are pure functions of the raw ones, so rebuilding from the
    same inputs is idempotent.
    """

    wavelength: float
    Q_c: float
    radius: float
    omega_m: float
    mass: float
    Q_m: float
    kappa: float
    J: float
    Delta: float
    P_in: float
    T: float
    omega_c: float   # 2 pi c / wavelength (rad/s)
    gamma: float     # omega_c / Q_c unless overridden (rad/s)
    Gamma_m: float   # omega_m / Q_m unless overridden (rad/s)
    xi: float        # omega_c / radius unless overridden (rad/(s m))
    x0: float        # zero-point length sqrt(hbar / (2 m omega_m)) (m)
    eta_L: float     # pump rate sqrt(2 gamma P_in / (hbar omega_c))


_POSITIVE_FIELDS = ("wavelength", "Q_c", "radius", "omega_m", "mass", "Q_m")
_NONNEGATIVE_FIELDS = ("P_in", "T", "J")
_ANY_SIGN_FIELDS = ("kappa", "Delta")


def validate(raw: RawConfig) -> list[str]:
    """Return human-readable invariant violations; empty list means valid."""
    out: list[str] = []
    for name in _POSITIVE_FIELDS:
        v = getattr(raw, name)
        if not _finite(v) or v <= 0.0:
            out.append(f"{name} must be a finite positive number, got {v!r}")
    for name in _NONNEGATIVE_FIELDS:
        v = getattr(raw, name)
        if not _finite(v) or v < 0.0:
            out.append(f"{name} must be finite and nonnegative, got {v!r}")
    for name in _ANY_SIGN_FIELDS:
        v = getattr(raw, name)
        if not _finite(v):
            out.append(f"{name} must be finite, got {v!r}")
    for name in ("gamma", "Gamma_m"):
        v = getattr(raw, name)
        if v is not None and (not _finite(v) or v <= 0.0):
            out.append(f"{name} override must be finite and positive, got {v!r}")
    # xi = 0 is a legal decoupling override; negative pull is not.
    if raw.xi is not None and (not _finite(raw.xi) or raw.xi < 0.0):
        out.append(f"xi override must be finite and nonnegative, got {raw.xi!r}")
    return out


def _finite(v) -> bool:
    return isinstance(v, (int, float)) and math.isfinite(v)


def derive_params(raw: RawConfig) -> SystemParams:
    """Resolve all derived rates from a validated RawConfig.

    Raises NonPositiveInput (naming every offending field) when validation
    fails.  Direct-rate overrides win over the quality-factor route with a
    DerivedRateOverride warning.
    """
    violations = validate(raw)
    if violations:
        raise NonPositiveInput("; ".join(violations))
    k = CONSTANTS
    omega_c = 2.0 * math.pi * k.c / raw.wavelength
    gamma = omega_c / raw.Q_c
    Gamma_m = raw.omega_m / raw.Q_m
    xi = omega_c / raw.radius
    for name, derived, override in (
        ("gamma", gamma, raw.gamma),
        ("Gamma_m", Gamma_m, raw.Gamma_m),
        ("xi", xi, raw.xi),
    ):
        if override is not None and override != derived:
            warnings.warn(
                f"direct rate {name}={override!r} overrides the derived value "
                f"{derived!r}",
                DerivedRateOverride,
                stacklevel=2,
            )
    if raw.gamma is not None:
        gamma = raw.gamma
    if raw.Gamma_m is not None:
        Gamma_m = raw.Gamma_m
    if raw.xi is not None:
        xi = raw.xi
    x0 = math.sqrt(k.hbar / (2.0 * raw.mass * raw.omega_m))
    eta_L = math.sqrt(2.0 * gamma * raw.P_in / (k.hbar * omega_c))
    return SystemParams(
        wavelength=raw.wavelength,
        Q_c=raw.Q_c,
        radius=raw.radius,
        omega_m=raw.omega_m,
        mass=raw.mass,
        Q_m=raw.Q_m,
        kappa=raw.kappa,
        J=raw.J,
        Delta=raw.Delta,
        P_in=raw.P_in,
        T=raw.T,
        omega_c=omega_c,
        gamma=gamma,
        Gamma_m=Gamma_m,
        xi=xi,
        x0=x0,
        eta_L=eta_L,
    )


def update_params(params: SystemParams, **changes) -> SystemParams:
    """Rebuild a SystemParams with some raw fields changed.

    Accepts any RawConfig field name.  The current gamma/Gamma_m/xi values are
    preserved as overrides (without re-warning), so sweeps that vary e.g.
    ``P_in`` keep every other rate fixed while ``eta_L`` is refreshed.
    """
    raw = RawConfig(
        wavelength=params.wavelength,
        Q_c=params.Q_c,
        radius=params.radius,
        omega_m=params.omega_m,
        mass=params.mass,
        Q_m=params.Q_m,
        kappa=params.kappa,
        J=params.J,
        Delta=params.Delta,
        P_in=params.P_in,
        T=params.T,
        gamma=params.gamma,
        Gamma_m=params.Gamma_m,
        xi=params.xi,
    )
    raw = _replace_raw(raw, changes)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DerivedRateOverride)
        return derive_params(raw)


def _replace_raw(raw: RawConfig, changes: dict) -> RawConfig:
    fields = raw.__dataclass_fields__
    for name in changes:
        if name not in fields:
            raise TypeError(f"unknown parameter field {name!r}")
    merged = {name: getattr(raw, name) for name in fields}
    merged.update(changes)
    return RawConfig(**merged)
