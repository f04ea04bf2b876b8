"""Nearly isotonic estimation for one-parameter exponential families.

The core solver computes the entire solution path, in the penalty
strength lambda, of sequence estimation with a one-sided hinge penalty
on adjacent differences — interpolating between the raw data (lambda=0)
and the isotonic fit (lambda large).  The same path serves every
one-parameter exponential family through the natural/mean parameter
duality, with AIC or Cp selection of lambda at the path's knots, and
drives three applications: monotone spectral density estimation,
discontinuity detection in count sequences, and discretization-error
quantification for ODE solvers.
"""

from .errors import (
    DomainError,
    EmptyInputError,
    InvalidBoundsError,
    IoError,
    NearisoError,
    NonConvergenceError,
    NonpositiveWeightError,
    ParseError,
    SchemaError,
    SupportError,
)
from .families import (
    BINOMIAL,
    GAMMA_SCALE,
    NORMAL,
    POISSON,
    Family,
    chi_square,
    family_by_name,
    log_density,
    log_likelihood,
    mean_map,
    mean_map_inv,
    mean_range,
    natural_domain,
    psi,
    sample,
    validate_support,
)
from .pava import (
    DECREASING,
    INCREASING,
    ClusterPartition,
    WeightedSeries,
    expand,
    isotonic_fit,
)
from .path import (
    Fit,
    KktCertificate,
    MergeEvent,
    PathFit,
    PathState,
    SolutionPath,
    clip_bounds,
    fit_at,
    fit_generalized,
    generalized_fit_at,
    kkt_check,
    solve_path,
    value_runs,
)
from .selection import (
    BiasStudyConfig,
    BiasStudyResult,
    CriterionEntry,
    CriterionTrace,
    aic,
    bias_study,
    cp_gaussian,
    replication_rng,
    select_lambda,
)
from .oracle import (
    CertificationRecord,
    ObjectiveSpec,
    OracleResult,
    certification_suite,
    objective_value,
    reformulation_minimize,
    subgradient_minimize,
)
from .spectrum import (
    Periodogram,
    SpectrumFit,
    dominant_plateau,
    periodogram,
    spectrum_fit,
)
from .discontinuity import Jump, RddResult, find_jumps, rdd_fit
from .ode_error import (
    BlockResiduals,
    FnExperimentConfig,
    FnExperimentResult,
    FnParams,
    FnSimulation,
    OdeErrorResult,
    block_residuals,
    fn_simulate,
    ode_error_quantify,
    run_fn_experiment,
)
from .dataio import (
    Dataset,
    KnotRecord,
    PathReport,
    format_float,
    read_dataset,
    read_report,
    report_to_string,
    write_dataset,
    write_report,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "NearisoError", "DomainError", "SupportError", "EmptyInputError",
    "NonpositiveWeightError", "InvalidBoundsError", "ParseError",
    "SchemaError", "IoError", "NonConvergenceError",
    # families
    "Family", "NORMAL", "BINOMIAL", "POISSON", "GAMMA_SCALE",
    "family_by_name", "chi_square", "natural_domain", "mean_range",
    "psi", "mean_map", "mean_map_inv", "log_density", "log_likelihood",
    "sample", "validate_support",
    # isotonic core
    "INCREASING", "DECREASING", "WeightedSeries", "ClusterPartition",
    "isotonic_fit", "expand",
    # path
    "SolutionPath", "PathState", "PathFit", "MergeEvent", "Fit",
    "KktCertificate", "solve_path", "fit_at", "generalized_fit_at",
    "fit_generalized", "clip_bounds", "kkt_check", "value_runs",
    # selection
    "CriterionEntry", "CriterionTrace", "aic", "cp_gaussian",
    "select_lambda", "BiasStudyConfig", "BiasStudyResult", "bias_study",
    "replication_rng",
    # oracle
    "ObjectiveSpec", "OracleResult", "CertificationRecord",
    "objective_value", "subgradient_minimize", "reformulation_minimize",
    "certification_suite",
    # applications
    "Periodogram", "SpectrumFit", "periodogram", "spectrum_fit",
    "dominant_plateau", "Jump", "RddResult", "rdd_fit", "find_jumps",
    "BlockResiduals", "OdeErrorResult", "block_residuals",
    "ode_error_quantify", "FnParams", "FnSimulation", "fn_simulate",
    "FnExperimentConfig", "FnExperimentResult", "run_fn_experiment",
    # data
    "Dataset", "PathReport", "KnotRecord", "read_dataset",
    "write_dataset", "read_report", "write_report", "report_to_string",
    "format_float",
]
