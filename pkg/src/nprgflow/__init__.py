"""Dissipative quantum tunneling with the local-potential Wegner-Houghton flow.

A double well V0(q) = -q^2/2 + lam q^4 (units of hbar omega0 and the oscillator
length) coupled to an Ohmic bath of strength eta is integrated from a UV
cutoff to the infrared. The curvature of the resulting effective potential
gives the effective frequency and the localization susceptibility, whose
divergence in eta locates the quantum-classical transition.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

from .errors import (
    ConfigError, DegenerateFitError, InsufficientDataError, InvalidObservablesError,
    InvalidParameterError, NPRGError, OracleError, SpinodalReached,
)
from .model import (
    DimensionlessParams, ModelParams, PotentialGrid, bare_potential, expand,
    harmonic_potential, r_ratio, reduce, sample,
)
from .flow import FlowOutcome, FlowSettings, curvature_field, rhs, run_flow, shell_step, step
from .observables import Observables, effective_couplings, susceptibility
from .oracle import SpectralResult, SpectralSettings, diagonalize, exact_susceptibility
from .scan import (
    FitResult, ScanRecord, ScanTable, WindowPolicy, critical_surface, eta_sweep,
    fit_power_law, instanton_baseline, power_law_fit, refined_sweep,
)

__all__ = [
    "ConfigError", "DegenerateFitError", "DimensionlessParams", "FitResult", "FlowOutcome",
    "FlowSettings", "InsufficientDataError", "InvalidObservablesError", "InvalidParameterError",
    "ModelParams", "NPRGError", "Observables", "OracleError", "PotentialGrid", "ScanRecord",
    "ScanTable", "SpectralResult", "SpectralSettings", "SpinodalReached", "WindowPolicy",
    "bare_potential", "critical_surface", "curvature_field", "diagonalize", "effective_couplings",
    "eta_sweep", "exact_susceptibility", "expand", "fit_power_law", "harmonic_potential",
    "instanton_baseline", "power_law_fit", "r_ratio", "reduce", "refined_sweep", "rhs",
    "run_flow", "sample", "shell_step", "step", "susceptibility",
]
