"""Misspecified Bayesian Cramer-Rao bounds for linear-Gaussian models.

The package pairs a true linear-Gaussian data model with a possibly
misspecified assumed model, computes the pseudotrue parameter and the
closed-form estimation bounds (matched-model, misspecified, and biased),
and validates them with reproducible Monte Carlo sweeps of the MAP/QMLE
estimators. A CLI (``mbcrb``) drives everything from JSON configs.
"""

from importlib import resources

from .bounds import (
    BfimDecomposition,
    BoundReport,
    bcrb,
    bfim,
    bias_vector,
    biased_bound,
    bound_report,
    map_error_covariance,
    mbcrb,
    pseudotrue,
    pseudotrue_affine,
    pseudotrue_jacobian,
)
from .config import ConfigError, config_hash, document_from_config, load_config, parse_config
from .estimators import (
    EstimatorSpec,
    MapSolver,
    estimate,
    ms_bias_diagnostic,
    score_diagnostic,
)
from .experiment import (
    AXIS_H,
    AXIS_N,
    AXIS_SIGMA_SQ,
    ExperimentConfig,
    SweepError,
    SweepResult,
    SweepSpec,
    run_sweep,
    run_trial,
)
from .linalg import NumericalError
from .models import (
    FlatPrior,
    GaussianDensity,
    LinearGaussianLikelihood,
    ModelPair,
    ObservationBatch,
    build_ar1_covariance,
    sample_observations,
    sample_parameter,
    validate_model_pair,
    with_n_samples,
)
from .pseudotrue_numeric import (
    KlObjectiveSpec,
    OptimizationResult,
    kl_objective,
    minimize_kl,
)

__version__ = "0.1.0"

__all__ = [
    "AXIS_H",
    "AXIS_N",
    "AXIS_SIGMA_SQ",
    "BfimDecomposition",
    "BoundReport",
    "ConfigError",
    "EstimatorSpec",
    "ExperimentConfig",
    "FlatPrior",
    "GaussianDensity",
    "KlObjectiveSpec",
    "LinearGaussianLikelihood",
    "MapSolver",
    "ModelPair",
    "NumericalError",
    "ObservationBatch",
    "OptimizationResult",
    "SweepError",
    "SweepResult",
    "SweepSpec",
    "bcrb",
    "bfim",
    "bias_vector",
    "biased_bound",
    "bound_report",
    "build_ar1_covariance",
    "bundled_config_path",
    "config_hash",
    "document_from_config",
    "estimate",
    "kl_objective",
    "load_config",
    "map_error_covariance",
    "mbcrb",
    "minimize_kl",
    "ms_bias_diagnostic",
    "parse_config",
    "pseudotrue",
    "pseudotrue_affine",
    "pseudotrue_jacobian",
    "run_sweep",
    "run_trial",
    "sample_observations",
    "sample_parameter",
    "score_diagnostic",
    "validate_model_pair",
    "with_n_samples",
]


def bundled_config_path(name: str):
    """Filesystem path of a bundled config, e.g. ``paper_fig1.json``."""
    path = resources.files("mbcrb") / "configs" / name
    if not path.is_file():
        raise FileNotFoundError(f"no bundled config named {name!r}")
    return path
