import numpy as np
import pytest

from identest.errors import SingleClass
from identest.learners import CvPlan, default_lambda_grid, select_lambda_cv


def test_pure_noise_selects_heavy_penalty():
    # Monte Carlo oracle: with y independent of X the out-of-fold loss is
    # minimized by the intercept-only end of the path
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((80, 8))
        y = rng.standard_normal(80)
        grid = default_lambda_grid(X, y)
        lam = select_lambda_cv(X, y, "linear", CvPlan(folds=5, rng_seed=seed))
        rank = int(np.argmin(np.abs(grid - lam)))
        if rank < grid.size / 4:
            hits += 1
    assert hits >= 80


def test_strong_noiseless_signal_selects_light_penalty():
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(1000 + seed)
        X = rng.standard_normal((80, 8))
        y = 5.0 * X[:, 0]
        grid = default_lambda_grid(X, y)
        lam = select_lambda_cv(X, y, "linear", CvPlan(folds=5, rng_seed=seed))
        rank = int(np.argmin(np.abs(grid - lam)))
        if rank >= 3 * grid.size / 4:
            hits += 1
    assert hits >= 80


def test_leave_one_out_boundary():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((10, 2))
    y = rng.standard_normal(10)
    lam = select_lambda_cv(X, y, "linear", CvPlan(folds=10, rng_seed=0))
    assert lam > 0


def test_logistic_family_runs():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((100, 4))
    y = (X[:, 0] + 0.3 * rng.standard_normal(100) > 0).astype(float)
    lam = select_lambda_cv(X, y, "logistic", CvPlan(folds=5, rng_seed=0))
    assert lam > 0


def test_single_class_fold_redraw_then_raise():
    # one positive among ten rows: some fold draw isolates it; a nearly
    # constant response must eventually raise SingleClass
    X = np.arange(10, dtype=float).reshape(-1, 1)
    y = np.zeros(10)
    y[0] = 1.0
    raised = False
    for seed in range(20):
        try:
            select_lambda_cv(X, y, "logistic", CvPlan(folds=10, rng_seed=seed))
        except SingleClass:
            raised = True
            break
    assert raised


def test_invalid_plans_rejected():
    with pytest.raises(ValueError):
        CvPlan(folds=1)
    with pytest.raises(ValueError):
        CvPlan(lambda_grid=np.array([0.1, 0.2]))  # not descending
    with pytest.raises(ValueError):
        select_lambda_cv(np.ones((10, 1)), np.ones(10), "poisson")
