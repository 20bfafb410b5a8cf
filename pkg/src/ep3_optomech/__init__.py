"""Gain/loss coupled-microresonator optomechanics toolkit.

Models a pair of tunneling-coupled whispering-gallery resonators, one with
optical gain and one with loss, where the lossy resonator drives a
mechanical radial mode through radiation pressure.  The package computes
non-Hermitian supermode spectra and their coalescences, optical steady
states (including bistability), the backaction-modified mechanical response,
and phonon cooling performance against a single-cavity baseline.

Command-line entry points, configuration parsing, and figure presets live
in :mod:`ep3_optomech.cli_io`, which is imported separately so library use
does not pay for the plotting stack.
"""

from .cooling import (
    CoolingResult,
    CoolingRow,
    NotCooling,
    OperatingPoint,
    UndefinedCooling,
    baseline_n0,
    beta,
    cooling_sweep,
    phonon_number,
)
from .model import (
    CONSTANTS,
    DerivedRateOverride,
    NonPositiveInput,
    PhysicalConstants,
    RawConfig,
    SystemParams,
    derive_params,
    update_params,
    validate,
)
from .numkernel import (
    CubicRoots,
    DegenerateArray,
    DegenerateInput,
    NoConvergence,
    char_poly,
    eigvals_small,
    match_branches,
    routh_hurwitz_stable,
    solve_cubic_cardano,
    solve_poly_aberth,
)
from .response import (
    DivergentDenominator,
    NoPeakInRange,
    ResponseResult,
    SingularResolvent,
    StabilityReport,
    StaticInstability,
    TransferMatrix,
    effective_response,
    extract_lorentzian,
    gamma_eff,
    measure_lorentzian,
    omega_eff,
    stability,
    susceptibility_analytic,
    susceptibility_numeric,
    thermal_spectrum,
    transfer_matrix,
)
from .steady_state import (
    NoPhysicalRoot,
    SingularDenominator,
    SteadyState,
    coupling_G,
    intensity_polynomial,
    solve_steady_state,
    steady_residual,
)
from .supermodes import (
    EpClassification,
    NoMinimumInBracket,
    RegimeViolation,
    SplittingResult,
    SupermodeSpectrum,
    classify_ep,
    cubic_coeffs,
    locate_ep,
    mode_matrix,
    spectrum_asymptotic,
    spectrum_exact,
    splitting,
    sweep_spectrum,
)
from .util import parallel_map, worker_count

__version__ = "0.1.0"

__all__ = [
    "CONSTANTS",
    "CoolingResult",
    "CoolingRow",
    "CubicRoots",
    "DegenerateArray",
    "DegenerateInput",
    "DerivedRateOverride",
    "DivergentDenominator",
    "EpClassification",
    "NoConvergence",
    "NoMinimumInBracket",
    "NoPeakInRange",
    "NoPhysicalRoot",
    "NonPositiveInput",
    "NotCooling",
    "OperatingPoint",
    "PhysicalConstants",
    "RawConfig",
    "RegimeViolation",
    "ResponseResult",
    "SingularDenominator",
    "SingularResolvent",
    "SplittingResult",
    "StabilityReport",
    "StaticInstability",
    "SteadyState",
    "SupermodeSpectrum",
    "SystemParams",
    "TransferMatrix",
    "UndefinedCooling",
    "baseline_n0",
    "beta",
    "char_poly",
    "classify_ep",
    "cooling_sweep",
    "coupling_G",
    "cubic_coeffs",
    "derive_params",
    "effective_response",
    "eigvals_small",
    "extract_lorentzian",
    "gamma_eff",
    "intensity_polynomial",
    "locate_ep",
    "match_branches",
    "measure_lorentzian",
    "mode_matrix",
    "omega_eff",
    "parallel_map",
    "phonon_number",
    "routh_hurwitz_stable",
    "solve_cubic_cardano",
    "solve_poly_aberth",
    "solve_steady_state",
    "spectrum_asymptotic",
    "spectrum_exact",
    "splitting",
    "stability",
    "steady_residual",
    "susceptibility_analytic",
    "susceptibility_numeric",
    "sweep_spectrum",
    "thermal_spectrum",
    "transfer_matrix",
    "update_params",
    "validate",
    "worker_count",
    "__version__",
]
