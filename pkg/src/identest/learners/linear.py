"""Penalized linear and logistic regression with cross-validated penalties.

Both families solve the standardized-design lasso objective by cyclic
coordinate descent with soft thresholding; the logistic family wraps the
same update in a quadratic majorization (Hessian bound 1/4). Coefficients
are stored on the standardized scale together with the column means and
scales, so prediction de-standardizes transparently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateDesign, SingleClass
from ._kernels import linear_cd, logistic_cd

CD_TOL = 1e-7
CD_MAX_SWEEPS = 10_000
LOGISTIC_MAX_OUTER = 200


def _standardize(X):
    X = np.asarray(X, dtype=float)
    means = X.mean(axis=0)
    scales = X.std(axis=0)
    constant = scales < 1e-12
    scales = np.where(constant, 1.0, scales)
    Xs = (X - means) / scales
    if constant.any():
        Xs[:, constant] = 0.0
    return np.ascontiguousarray(Xs), means, scales


def _destandardize_eta(model, X):
    Xs = (np.asarray(X, dtype=float) - model.feature_means) / model.feature_scales
    return model.intercept + Xs @ model.coefficients


@dataclass(frozen=True)
class LinearLassoModel:
    intercept: float
    coefficients: np.ndarray  # standardized scale
    lam: float
    feature_means: np.ndarray
    feature_scales: np.ndarray

    def predict(self, X) -> np.ndarray:
        return _destandardize_eta(self, X)

    @property
    def raw_coefficients(self) -> np.ndarray:
        """Coefficients on the original (unstandardized) feature scale."""
        return self.coefficients / self.feature_scales

    @property
    def raw_intercept(self) -> float:
        return self.intercept - float(self.feature_means @ self.raw_coefficients)


@dataclass(frozen=True)
class LogisticLassoModel:
    intercept: float
    coefficients: np.ndarray
    lam: float
    feature_means: np.ndarray
    feature_scales: np.ndarray

    def predict_proba(self, X) -> np.ndarray:
        eta = np.clip(_destandardize_eta(self, X), -30.0, 30.0)
        return 1.0 / (1.0 + np.exp(-eta))


def lambda_max(X, y) -> float:
    """Smallest penalty at which all coefficients are zero."""
    Xs, _, _ = _standardize(X)
    yc = np.asarray(y, dtype=float) - np.mean(y)
    n = Xs.shape[0]
    return float(np.max(np.abs(Xs.T @ yc)) / n)


def fit_linear_lasso(X, y, lam: float) -> LinearLassoModel:
    """Lasso on standardized features, solved by coordinate descent."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] == 0:
        raise DegenerateDesign("cannot fit on zero rows")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    Xs, means, scales = _standardize(X)
    intercept = float(np.mean(y))
    beta = np.zeros(X.shape[1])
    r = (y - intercept).copy()
    linear_cd(Xs, r, beta, lam, CD_MAX_SWEEPS, CD_TOL)
    return LinearLassoModel(intercept, beta, lam, means, scales)


def fit_logistic_lasso(X, y01, lam: float) -> LogisticLassoModel:
    """L1-penalized logistic regression via majorized coordinate descent."""
    X = np.asarray(X, dtype=float)
    y01 = np.asarray(y01, dtype=float)
    if X.shape[0] == 0:
        raise DegenerateDesign("cannot fit on zero rows")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    ybar = float(np.mean(y01))
    if ybar == 0.0 or ybar == 1.0:
        raise SingleClass("binary response is constant")
    Xs, means, scales = _standardize(X)
    beta = np.zeros(X.shape[1])
    b0 = float(np.log(ybar / (1.0 - ybar)))
    b0, _ = logistic_cd(Xs, y01, lam, b0, beta, LOGISTIC_MAX_OUTER, CD_TOL)
    return LogisticLassoModel(float(b0), beta, lam, means, scales)


@dataclass(frozen=True)
class CvPlan:
    """K-fold penalty selection plan; grid=None derives it from the data."""

    folds: int = 5
    lambda_grid: np.ndarray | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.lambda_grid is not None:
            g = np.asarray(self.lambda_grid, dtype=float)
            if g.size == 0 or np.any(g <= 0) or np.any(np.diff(g) >= 0):
                raise ValueError("lambda_grid must be nonempty, positive, strictly decreasing")


def default_lambda_grid(X, y, size: int = 50, ratio: float = 1e-3) -> np.ndarray:
    lmax = lambda_max(X, y)
    if lmax <= 0:
        lmax = 1e-3
    return np.geomspace(lmax, lmax * ratio, size)


def _cv_fold_ids(n, k, seed):
    rng = np.random.default_rng(seed)
    ids = np.repeat(np.arange(k), np.diff(np.linspace(0, n, k + 1).astype(int)))
    return rng.permutation(ids)


def _linear_path_losses(Xtr, ytr, Xva, yva, grid):
    Xs, means, scales = _standardize(Xtr)
    ybar = float(np.mean(ytr))
    beta = np.zeros(Xtr.shape[1])
    r = (ytr - ybar).copy()
    Xvs = (Xva - means) / scales
    losses = np.empty(grid.size)
    for g, lam in enumerate(grid):
        linear_cd(Xs, r, beta, lam, CD_MAX_SWEEPS, CD_TOL)
        pred = ybar + Xvs @ beta
        losses[g] = float(np.mean((yva - pred) ** 2))
    return losses


def _logistic_path_losses(Xtr, ytr, Xva, yva, grid):
    ybar = float(np.mean(ytr))
    if ybar == 0.0 or ybar == 1.0:
        raise SingleClass("training fold has a constant binary response")
    Xs, means, scales = _standardize(Xtr)
    beta = np.zeros(Xtr.shape[1])
    b0 = float(np.log(ybar / (1.0 - ybar)))
    Xvs = (Xva - means) / scales
    losses = np.empty(grid.size)
    for g, lam in enumerate(grid):
        b0, _ = logistic_cd(Xs, ytr, lam, b0, beta, LOGISTIC_MAX_OUTER, CD_TOL)
        eta = np.clip(b0 + Xvs @ beta, -30.0, 30.0)
        prob = 1.0 / (1.0 + np.exp(-eta))
        losses[g] = float(-np.mean(yva * np.log(prob) + (1.0 - yva) * np.log1p(-prob)))
    return losses


def select_lambda_cv(X, y, family: str, plan: CvPlan | None = None) -> float:
    """Grid penalty minimizing K-fold out-of-fold loss.

    Loss is squared error for ``family="linear"`` and log-loss for
    ``family="logistic"``; ties break toward the larger penalty. For the
    logistic family a fold draw producing a single-class training split is
    re-drawn once before SingleClass is raised.
    """
    if family not in ("linear", "logistic"):
        raise ValueError(f"unknown family {family!r}")
    plan = plan or CvPlan()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n < plan.folds:
        raise DegenerateDesign(f"n={n} smaller than {plan.folds} folds")
    grid = plan.lambda_grid
    if grid is None:
        grid = default_lambda_grid(X, y)
    grid = np.asarray(grid, dtype=float)

    path = _linear_path_losses if family == "linear" else _logistic_path_losses
    for attempt in range(2):
        fold_ids = _cv_fold_ids(n, plan.folds, plan.rng_seed + attempt)
        losses = np.zeros(grid.size)
        try:
            for f in range(plan.folds):
                va = fold_ids == f
                losses += path(X[~va], y[~va], X[va], y[va], grid)
        except SingleClass:
            if attempt == 0:
                continue
            raise
        return float(grid[int(np.argmin(losses))])
    raise SingleClass("cross-validation folds degenerate")  # pragma: no cover
