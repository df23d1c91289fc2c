"""Seeded Monte Carlo experiments: eigenvalue scatter, analytic error
surfaces, end-to-end estimation sweeps and VOA attenuation sweeps."""

from .analysis import error_crossing, error_matrix, first_crossing
from .config import (
    PRESETS,
    ConfigError,
    ExperimentConfig,
    GridSpec,
    VoaGrid,
    load_config,
    preset,
    read_config_file,
    validate_dict,
)
from .results import ResultTable, write_outputs
from .runners import (
    calibrate_sigma_g,
    derive_seed,
    run_endtoend_sweep,
    run_error_surface,
    run_experiment,
    run_scatter,
    run_voa_sweep,
)

__all__ = [
    "PRESETS",
    "ConfigError",
    "ExperimentConfig",
    "GridSpec",
    "ResultTable",
    "VoaGrid",
    "calibrate_sigma_g",
    "derive_seed",
    "error_crossing",
    "error_matrix",
    "first_crossing",
    "load_config",
    "preset",
    "read_config_file",
    "run_endtoend_sweep",
    "run_error_surface",
    "run_experiment",
    "run_scatter",
    "run_voa_sweep",
    "validate_dict",
    "write_outputs",
]
