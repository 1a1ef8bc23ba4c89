"""Age-structured ratio-dependent predator-prey model: equilibria, Hopf analysis, simulation."""
from .errors import AgeHopfError, AssumptionViolation, ConfigError, NumericalError, ParameterError
from .hopf import HopfResult, Regime, StabilityVerdict, analyze, classify, omega0, tau_k
from .model import (
    AgeProfile,
    EquilibriumProfile,
    Form,
    ModelParams,
    check_assumptions,
    positive_equilibrium,
    trivial_equilibrium,
    validate,
)
from .spectral import CharCoeffs, SearchRegion, char_coeffs, count_unstable_roots, det_delta, find_roots, g_eval
from .sweep import InitialData, SimSettings, SweepSpec, run_simulation, run_sweep

__version__ = "0.1.0"

__all__ = [
    "AgeHopfError", "AgeProfile", "AssumptionViolation", "CharCoeffs", "ConfigError",
    "EquilibriumProfile", "Form", "HopfResult", "InitialData", "ModelParams", "NumericalError",
    "ParameterError", "Regime", "SearchRegion", "SimSettings", "StabilityVerdict", "SweepSpec",
    "analyze", "char_coeffs", "check_assumptions", "classify", "count_unstable_roots", "det_delta",
    "find_roots", "g_eval", "omega0", "positive_equilibrium", "run_simulation", "run_sweep", "tau_k",
    "trivial_equilibrium", "validate",
]
