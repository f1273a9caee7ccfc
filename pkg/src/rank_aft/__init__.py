"""Penalized rank-based estimation of semiparametric accelerated failure time models."""

from .cv import CvResult, cv_gehan_loss, cv_linear_predictor_score, make_folds, one_se_rule
from .data import (
    ComparablePairSet,
    SurvivalDataset,
    build_pairs,
    load_survival_csv,
    pair_diff,
    pair_diff_adjoint,
)
from .path import SolutionPath, fit_path
from .penalty import (
    PenaltySpec,
    elastic_net,
    lambda_grid,
    lambda_max,
    lambda_max_elastic_net,
    lambda_max_sparse_group,
    load_groups_csv,
    penalty_value,
    prox,
    sparse_group_lasso,
)
from .simulate import SimConfig, SimulatedData, TrueCoefSpec, concordance, generate, model_error
from .solver import (
    FitResult,
    SolverOptions,
    SolverState,
    estimate_curvature,
    fit,
    gehan_loss,
    gehan_objective,
)
from .wls import KmWeights, fit_wls, km_weights, wls_lambda_max

__version__ = "0.1.0"

__all__ = [
    "ComparablePairSet",
    "CvResult",
    "FitResult",
    "KmWeights",
    "PenaltySpec",
    "SimConfig",
    "SimulatedData",
    "SolutionPath",
    "SolverOptions",
    "SolverState",
    "SurvivalDataset",
    "TrueCoefSpec",
    "build_pairs",
    "concordance",
    "cv_gehan_loss",
    "cv_linear_predictor_score",
    "elastic_net",
    "estimate_curvature",
    "fit",
    "fit_path",
    "fit_wls",
    "gehan_loss",
    "gehan_objective",
    "generate",
    "km_weights",
    "lambda_grid",
    "lambda_max",
    "lambda_max_elastic_net",
    "lambda_max_sparse_group",
    "load_groups_csv",
    "load_survival_csv",
    "make_folds",
    "model_error",
    "one_se_rule",
    "pair_diff",
    "pair_diff_adjoint",
    "penalty_value",
    "prox",
    "sparse_group_lasso",
    "wls_lambda_max",
]
