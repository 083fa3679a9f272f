"""GARCH volatility modelling with an additive, smoothly time-varying intercept.

The public surface re-exports the main types and operations:

* model containers and pure functions (:mod:`atvgarch.model`)
* path simulation (:mod:`atvgarch.simulate`)
* the quasi log-likelihood and its derivatives (:mod:`atvgarch.likelihood`)
* estimation, inference and specification tests (:mod:`atvgarch.estimate`)
* the Monte Carlo harness (:mod:`atvgarch.montecarlo`)
* the empirical workflow (:mod:`atvgarch.empirical`)
"""

from ._backend import BACKEND
from .model import (
    ErrorDist,
    ModelSpec,
    ParamVector,
    RepresentationCoeffs,
    TransitionParams,
    eta_of_gamma,
    fourth_moment_check,
    gamma_of_eta,
    intercept_path,
    logistic_g,
    moment_region_grid,
    param_names,
    representation_coeffs,
    time_varying_intercept,
    transition_derivatives,
    variance_recursion,
)
from .simulate import (
    SeriesFrame,
    SimConfig,
    local_stationarity_probe,
    simulate,
    simulate_stationary_at,
)
from .likelihood import (
    LikelihoodConfig,
    LikelihoodEval,
    hessian,
    quasi_loglik,
    score,
    truncated_variance,
)
from .estimate import (
    FitOptions,
    FitResult,
    LmTestResult,
    ParamTransform,
    auto_start,
    fit,
    lm_constancy_test,
    sandwich_covariance,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ErrorDist",
    "FitOptions",
    "FitResult",
    "LikelihoodConfig",
    "LikelihoodEval",
    "LmTestResult",
    "ModelSpec",
    "ParamTransform",
    "ParamVector",
    "RepresentationCoeffs",
    "SeriesFrame",
    "SimConfig",
    "TransitionParams",
    "auto_start",
    "eta_of_gamma",
    "fit",
    "fourth_moment_check",
    "gamma_of_eta",
    "hessian",
    "intercept_path",
    "lm_constancy_test",
    "local_stationarity_probe",
    "logistic_g",
    "moment_region_grid",
    "param_names",
    "quasi_loglik",
    "representation_coeffs",
    "sandwich_covariance",
    "score",
    "simulate",
    "simulate_stationary_at",
    "time_varying_intercept",
    "transition_derivatives",
    "truncated_variance",
    "variance_recursion",
]
