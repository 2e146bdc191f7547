"""Bayesian model-based clustering with overfitted mixtures of factor
analyzers: tempered Gibbs sampling over eight parsimonious covariance
parameterizations, alive-component inference for the number of clusters,
ECR relabeling and BIC model selection."""

__version__ = "0.1.0"

from .errors import MfaclustError
from .linalg import LowRankCov, RandomStream
from .types import (
    Dataset,
    FitReport,
    Parameterization,
    PARAMETERIZATIONS,
    PriorConfig,
    free_parameter_count,
    ledermann_bound,
)

__all__ = [
    "Dataset",
    "FitReport",
    "LowRankCov",
    "MfaclustError",
    "PARAMETERIZATIONS",
    "Parameterization",
    "PriorConfig",
    "RandomStream",
    "__version__",
    "free_parameter_count",
    "ledermann_bound",
]
