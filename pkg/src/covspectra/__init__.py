"""Limiting spectra of general sample covariance matrices.

Core objects: discrete population measures, the companion Stieltjes
solver, support/gap geometry, ensemble generators, a self-contained
Hermitian eigensolver, and Monte Carlo verification campaigns.  The HTTP
surface lives in ``covspectra.service``; ``covspectra.cli`` is a thin
client over it.
"""

__version__ = "0.1.0"

from .eig import (
    EigenSpectrum,
    EmpiricalCDF,
    LimitCDF,
    count_in_interval,
    hermitian_eigenvalues,
    ks_distance,
    singular_values_scaled,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    NoGapError,
    PoleError,
    RootSearchError,
    SpectraError,
)
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    TrialRecord,
    density_profile,
    emit_density_profile,
    load_config,
    parse_config,
    run_edge_experiment,
    run_experiment,
    run_gap_experiment,
    run_lsd_experiment,
    run_qf_experiment,
)
from .measures import SpectralMeasure
from .models import (
    EntryDistribution,
    FilterSpec,
    ModelSpec,
    build_filter,
    filter_spectrum,
    form_sample_covariance,
    quadratic_form_deviation,
    sample_entries,
    simulate_spectrum,
)
from .stieltjes import (
    SolverOptions,
    StieltjesPair,
    companion_value_map,
    density_at,
    density_scan,
    esd_stieltjes,
    mp_closed_form,
    solve_companion,
)
from .support import (
    GapInterval,
    SupportSet,
    find_support,
    gap_interval,
    is_outside_support,
    largest_edge,
    value_map_derivative,
)

__all__ = [
    "__version__",
    "SpectralMeasure",
    "SolverOptions",
    "StieltjesPair",
    "companion_value_map",
    "solve_companion",
    "mp_closed_form",
    "density_at",
    "density_scan",
    "esd_stieltjes",
    "SupportSet",
    "GapInterval",
    "value_map_derivative",
    "find_support",
    "gap_interval",
    "is_outside_support",
    "largest_edge",
    "FilterSpec",
    "EntryDistribution",
    "ModelSpec",
    "build_filter",
    "filter_spectrum",
    "sample_entries",
    "form_sample_covariance",
    "simulate_spectrum",
    "quadratic_form_deviation",
    "EigenSpectrum",
    "EmpiricalCDF",
    "LimitCDF",
    "hermitian_eigenvalues",
    "singular_values_scaled",
    "count_in_interval",
    "ks_distance",
    "ExperimentConfig",
    "ExperimentReport",
    "TrialRecord",
    "load_config",
    "parse_config",
    "run_experiment",
    "run_lsd_experiment",
    "run_gap_experiment",
    "run_edge_experiment",
    "run_qf_experiment",
    "density_profile",
    "emit_density_profile",
    "SpectraError",
    "PoleError",
    "ConvergenceError",
    "RootSearchError",
    "NoGapError",
    "ConfigError",
]
