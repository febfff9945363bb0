"""Nuisance learners: penalized linear/logistic regression and a forest."""

from .forest import ForestModel, fit_forest, permutation_importance
from .linear import (
    CvPlan,
    LinearLassoModel,
    LogisticLassoModel,
    default_lambda_grid,
    fit_linear_lasso,
    fit_logistic_lasso,
    lambda_max,
    select_lambda_cv,
)

__all__ = [
    "CvPlan",
    "ForestModel",
    "LinearLassoModel",
    "LogisticLassoModel",
    "default_lambda_grid",
    "fit_forest",
    "fit_linear_lasso",
    "fit_logistic_lasso",
    "lambda_max",
    "permutation_importance",
    "select_lambda_cv",
]
