import numpy as np
import pytest

from identest.errors import DegenerateDesign
from identest.learners import fit_linear_lasso, lambda_max


def kkt_violation(model, X, y):
    """Max violation of the stationarity conditions on the training data."""
    Xs = (X - model.feature_means) / model.feature_scales
    Xs[:, X.std(axis=0) < 1e-12] = 0.0
    r = y - model.predict(X)
    n = X.shape[0]
    grad = Xs.T @ r / n
    worst = 0.0
    for j, b in enumerate(model.coefficients):
        if b == 0.0:
            worst = max(worst, abs(grad[j]) - model.lam)
        else:
            worst = max(worst, abs(grad[j] - model.lam * np.sign(b)))
    return worst


def test_huge_penalty_gives_intercept_only():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((30, 4))
    y = rng.standard_normal(30)
    model = fit_linear_lasso(X, y, 1e9)
    assert np.all(model.coefficients == 0.0)
    assert model.intercept == pytest.approx(np.mean(y))


def test_lambda_at_lambda_max_gives_intercept_only_exactly():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((40, 6))
    y = X[:, 0] + rng.standard_normal(40)
    model = fit_linear_lasso(X, y, lambda_max(X, y))
    assert np.all(model.coefficients == 0.0)


def test_unpenalized_matches_least_squares_oracle():
    # independent oracle: normal equations on the raw design
    X = np.array([[1.0], [2.0], [3.0]])
    y = np.array([2.0, 4.0, 6.0])
    model = fit_linear_lasso(X, y, 0.0)
    design = np.column_stack([np.ones(3), X])
    coef = np.linalg.solve(design.T @ design, design.T @ y)
    assert model.raw_intercept == pytest.approx(coef[0], abs=1e-6)
    assert model.raw_coefficients[0] == pytest.approx(coef[1], abs=1e-6)
    assert model.raw_intercept == pytest.approx(0.0, abs=1e-6)
    assert model.raw_coefficients[0] == pytest.approx(2.0, abs=1e-6)


def test_duplicated_column_splits_single_column_solution():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(60)
    y = 1.5 * x + 0.1 * rng.standard_normal(60)
    lam = 0.05
    single = fit_linear_lasso(x.reshape(-1, 1), y, lam)
    double = fit_linear_lasso(np.column_stack([x, x]), y, lam)
    assert kkt_violation(double, np.column_stack([x, x]), y) < 1e-6
    assert double.coefficients.sum() == pytest.approx(single.coefficients[0], abs=1e-5)


def test_kkt_conditions_hold():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n, p = 50, 8
        X = rng.standard_normal((n, p))
        y = X @ rng.standard_normal(p) + rng.standard_normal(n)
        lam = float(rng.uniform(0.01, 0.5))
        model = fit_linear_lasso(X, y, lam)
        assert kkt_violation(model, X, y) < 1e-6


def test_constant_column_gets_zero_coefficient():
    rng = np.random.default_rng(4)
    X = np.column_stack([np.full(30, 7.0), rng.standard_normal(30)])
    y = 2.0 * X[:, 1] + rng.standard_normal(30)
    model = fit_linear_lasso(X, y, 0.01)
    assert model.coefficients[0] == 0.0
    assert model.feature_scales[0] == 1.0


def test_rescaling_a_feature_leaves_fitted_values_unchanged():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((50, 3))
    y = X @ np.array([1.0, -2.0, 0.5]) + rng.standard_normal(50)
    base = fit_linear_lasso(X, y, 0.1).predict(X)
    X2 = X.copy()
    X2[:, 1] *= 37.5
    scaled = fit_linear_lasso(X2, y, 0.1).predict(X2)
    np.testing.assert_allclose(scaled, base, atol=1e-6)


def test_deterministic():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((40, 5))
    y = rng.standard_normal(40)
    a = fit_linear_lasso(X, y, 0.05)
    b = fit_linear_lasso(X, y, 0.05)
    np.testing.assert_array_equal(a.coefficients, b.coefficients)


def test_empty_design_rejected():
    with pytest.raises(DegenerateDesign):
        fit_linear_lasso(np.empty((0, 2)), np.empty(0), 0.1)
