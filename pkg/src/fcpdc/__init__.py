"""Ultrafast frequency conversion and type-II PDC in the high-gain regime.

Analytic (time-ordering-free) and rigorous (time-ordered) Bogoliubov
solutions of pulsed three-wave mixing on a common discretization, with
broadband-mode extraction and cross-model validation tools.
"""

from .analytic import (MetricsReport, ModeSpectrum, analytic_solve,
                       derived_metrics, schmidt_decompose)
from .modes import PairingAmbiguityError, SymmetryReport, bloch_messiah, symmetry_check
from .process import (FC_PRESET, PDC_PRESET, FrequencyGrid, Kernel, ProcessKind,
                      ProcessSpec, ZGrid, build_jsa, build_z_kernel, default_grid,
                      phase_mismatch, pump_amplitude, sinc)
from .rigorous import (NonConvergenceError, TransferMatrices, canonical_error,
                       picard_solve)
from .validation import (ComparisonReport, ConvergenceTable, TargetUnreachableError,
                         compare_models, find_coupling, grid_convergence)
from .cli import RunConfig, parse_config, preset, run, write_config

__all__ = [
    "FC_PRESET", "PDC_PRESET", "FrequencyGrid", "Kernel", "ProcessKind",
    "ProcessSpec", "ZGrid", "build_jsa", "build_z_kernel", "default_grid",
    "phase_mismatch", "pump_amplitude", "sinc",
    "MetricsReport", "ModeSpectrum", "analytic_solve", "derived_metrics",
    "schmidt_decompose",
    "NonConvergenceError", "TransferMatrices", "canonical_error", "picard_solve",
    "PairingAmbiguityError", "SymmetryReport", "bloch_messiah", "symmetry_check",
    "ComparisonReport", "ConvergenceTable", "TargetUnreachableError",
    "compare_models", "find_coupling", "grid_convergence",
    "RunConfig", "parse_config", "preset", "run", "write_config",
]

__version__ = "0.1.0"
