"""Robust mixture-of-linear-regressions with exponential power errors.

The error law is the exponential power distribution (Laplace at p=1,
Gaussian at p=2, heavy-tailed for p<2); fitting runs a penalized
generalized EM algorithm whose M-step takes one majorize-minimize step for
the coefficients, and a log penalty on the mixing weights prunes
components automatically.
"""

from .epd import EPParams, ep_density, ep_log_density, ep_sample, log_gamma, unit_variance_eta
from .gem import (
    AllComponentsPrunedError,
    DegenerateModelError,
    FitConfig,
    FitResult,
    InsufficientDataError,
    Responsibilities,
    SingularSystemError,
    bic,
    e_step,
    fit_lambda_grid,
    gem_fit,
    gem_iterate,
    initialize,
    m_step_beta,
    m_step_eta,
    m_step_pi,
    mm_weights,
)
from .metrics import ReplicateReport, aggregate, align_labels, coefficient_names
from .model import (
    Component,
    Dataset,
    DimensionMismatchError,
    MixtureModel,
    PenaltyConfig,
    observed_log_likelihood,
    penalized_log_likelihood,
    penalty,
)
from .simgen import CustomSpec, SimDraw, SimSpec, generate, replicate_seeds

__version__ = "0.1.0"

__all__ = [
    "EPParams", "ep_density", "ep_log_density", "ep_sample", "log_gamma",
    "unit_variance_eta",
    "Dataset", "Component", "MixtureModel", "PenaltyConfig",
    "observed_log_likelihood", "penalty", "penalized_log_likelihood",
    "DimensionMismatchError",
    "FitConfig", "FitResult", "Responsibilities",
    "e_step", "m_step_pi", "m_step_eta", "mm_weights", "m_step_beta",
    "gem_iterate", "initialize", "gem_fit", "bic", "fit_lambda_grid",
    "DegenerateModelError", "AllComponentsPrunedError", "SingularSystemError",
    "InsufficientDataError",
    "SimSpec", "SimDraw", "CustomSpec", "generate", "replicate_seeds",
    "ReplicateReport", "align_labels", "aggregate", "coefficient_names",
]
