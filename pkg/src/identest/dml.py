"""Cross-fitted doubly-robust estimation of the instrument contrast.

The estimand is the average difference in conditional mean outcomes
between the two instrument states given treatment and covariates; it is
zero when the instrument is conditionally mean-independent of the outcome.
Estimation follows the AIPW/double-machine-learning recipe: nuisance
models are fit on training folds, per-observation efficient scores are
evaluated on held-out folds, and the estimate is the trimmed score mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from .data_model import Arm, ObservationFrame, subset_arm
from .errors import DegenerateFold, IdentTestError, TooFewObservations
from .learners import (
    CvPlan,
    fit_forest,
    fit_linear_lasso,
    fit_logistic_lasso,
    select_lambda_cv,
)

FOREST_PROB_CLIP = 1e-6


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of: np.ndarray


@dataclass(frozen=True)
class NuisanceFit:
    """Cross-fitted held-out predictions with fold provenance."""

    mu1_hat: np.ndarray
    mu0_hat: np.ndarray
    p_hat: np.ndarray
    fold_of: np.ndarray
    learner_kind: str
    diagnostics: tuple = ()  # per-fold dicts: sizes and selected penalties


@dataclass(frozen=True)
class ScoreVector:
    phi: np.ndarray
    kept: np.ndarray
    trim_threshold: float


@dataclass(frozen=True)
class TestResult:
    delta_hat: float
    std_error: float
    t_stat: float
    p_value: float
    n_total: int
    n_used: int
    arm: Arm
    zero_variance: bool = False


@dataclass(frozen=True)
class DmlConfig:
    """Pipeline settings for one doubly-robust test."""

    folds: int = 3
    learner: str = "lasso"  # "lasso" or "forest"
    trim: float = 0.01
    seed: int = 0
    cv_folds: int = 5
    forest_trees: int = 200
    forest_min_leaf: int = 5

    def __post_init__(self):
        if self.learner not in ("lasso", "forest"):
            raise ValueError(f"unknown learner {self.learner!r}")
        if not 0.0 < self.trim < 0.5:
            raise ValueError("trim must lie in (0, 0.5)")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")


def assign_folds(frame: ObservationFrame, k: int, seed: int) -> FoldAssignment:
    """Stratified-by-(d, z) random fold assignment, deterministic in seed.

    Folds are dealt cyclically within each cell with the cursor carried
    across cells, so overall fold sizes and within-cell counts both differ
    by at most one, and any cell with >= 2 rows spans >= 2 folds.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(frame.n, dtype=np.int64)
    cursor = int(rng.integers(k))
    for d_val in (0, 1):
        for z_val in (0, 1):
            rows = np.flatnonzero((frame.d == d_val) & (frame.z == z_val))
            if rows.size == 0:
                continue
            if rows.size < 2:
                raise TooFewObservations(
                    f"cell (d={d_val}, z={z_val}) has {rows.size} row(s); "
                    "need >= 2 so every training split keeps the cell")
            for i in rng.permutation(rows):
                fold_of[i] = cursor % k
                cursor += 1
    return FoldAssignment(k, fold_of)


def _regressors(frame: ObservationFrame) -> np.ndarray:
    # within-arm frames have a constant treatment column; drop it there
    if frame.d.min() == frame.d.max():
        return frame.x
    return np.column_stack([frame.d.astype(float), frame.x])


def crossfit_nuisances(frame: ObservationFrame, folds: FoldAssignment,
                       learner_kind: str = "lasso",
                       cv_plan: CvPlan | None = None,
                       forest_trees: int = 200,
                       forest_min_leaf: int = 5,
                       seed: int = 0) -> NuisanceFit:
    """Held-out predictions of both outcome means and the instrument propensity.

    For every fold the outcome learner is fit twice on the training rows
    (once per instrument state) and the propensity learner once; all three
    are evaluated on the held-out fold only. Lasso penalties are re-selected
    per fold by cross-validation on the training split.
    """
    plan = cv_plan or CvPlan()
    R = _regressors(frame)
    n = frame.n
    mu1 = np.empty(n)
    mu0 = np.empty(n)
    p_hat = np.empty(n)
    diagnostics = []
    for f in range(folds.k):
        va = folds.fold_of == f
        tr = ~va
        z_tr = frame.z[tr]
        if z_tr.size == 0 or z_tr.min() == z_tr.max():
            raise DegenerateFold(f"training split for fold {f} has a constant instrument")
        tr1 = tr & (frame.z == 1)
        tr0 = tr & (frame.z == 0)
        diag = {"fold": f, "n_train": int(tr.sum()), "n_eval": int(va.sum())}
        if learner_kind == "lasso":
            base = plan.rng_seed + 101 * seed + 10 * f
            lam1 = select_lambda_cv(R[tr1], frame.y[tr1], "linear",
                                    replace(plan, rng_seed=base + 1))
            m1 = fit_linear_lasso(R[tr1], frame.y[tr1], lam1)
            lam0 = select_lambda_cv(R[tr0], frame.y[tr0], "linear",
                                    replace(plan, rng_seed=base + 2))
            m0 = fit_linear_lasso(R[tr0], frame.y[tr0], lam0)
            lam_p = select_lambda_cv(R[tr], frame.z[tr].astype(float), "logistic",
                                     replace(plan, rng_seed=base + 3))
            mp = fit_logistic_lasso(R[tr], frame.z[tr].astype(float), lam_p)
            mu1[va] = m1.predict(R[va])
            mu0[va] = m0.predict(R[va])
            p_hat[va] = mp.predict_proba(R[va])
            diag.update(lambda_mu1=lam1, lambda_mu0=lam0, lambda_p=lam_p)
        elif learner_kind == "forest":
            fseed = 1_000_003 * seed + f
            m1 = fit_forest(R[tr1], frame.y[tr1], num_trees=forest_trees,
                            min_leaf=forest_min_leaf, seed=fseed)
            m0 = fit_forest(R[tr0], frame.y[tr0], num_trees=forest_trees,
                            min_leaf=forest_min_leaf, seed=fseed + 1)
            mp = fit_forest(R[tr], frame.z[tr].astype(float), num_trees=forest_trees,
                            min_leaf=forest_min_leaf, seed=fseed + 2)
            mu1[va] = m1.predict(R[va])
            mu0[va] = m0.predict(R[va])
            p_hat[va] = np.clip(mp.predict(R[va]), FOREST_PROB_CLIP, 1.0 - FOREST_PROB_CLIP)
        else:
            raise ValueError(f"unknown learner {learner_kind!r}")
        diagnostics.append(diag)
    return NuisanceFit(mu1, mu0, p_hat, folds.fold_of.copy(), learner_kind,
                       tuple(diagnostics))


def compute_scores(frame: ObservationFrame, nuisance: NuisanceFit,
                   trim_threshold: float = 0.01) -> ScoreVector:
    """Per-observation efficient scores with the two-sided trim mask.

    phi_i = mu1_i - mu0_i + z_i (y_i - mu1_i)/p_i - (1 - z_i)(y_i - mu0_i)/(1 - p_i)
    """
    if not 0.0 < trim_threshold < 0.5:
        raise ValueError("trim threshold must lie in (0, 0.5)")
    if nuisance.mu1_hat.shape[0] != frame.n:
        raise ValueError("nuisance fit is not aligned with the frame")
    z = frame.z.astype(float)
    p = nuisance.p_hat
    phi = (nuisance.mu1_hat - nuisance.mu0_hat
           + z * (frame.y - nuisance.mu1_hat) / p
           - (1.0 - z) * (frame.y - nuisance.mu0_hat) / (1.0 - p))
    kept = (p >= trim_threshold) & (p <= 1.0 - trim_threshold)
    return ScoreVector(phi, kept, trim_threshold)


def estimate_delta(scores: ScoreVector, arm: Arm = Arm.ALL) -> TestResult:
    """Score mean, its standard error, and the two-sided normal p-value."""
    kept = scores.phi[scores.kept]
    n_used = kept.size
    if n_used < 2:
        raise TooFewObservations(f"only {n_used} untrimmed observations")
    delta = float(np.mean(kept))
    sd = float(np.std(kept, ddof=1))
    if sd == 0.0:
        return TestResult(delta, 0.0,
                          float(np.inf * np.sign(delta)) if delta != 0 else 0.0,
                          0.0 if delta != 0 else 1.0,
                          scores.phi.size, n_used, arm, zero_variance=True)
    se = sd / np.sqrt(n_used)
    t = delta / se
    p = float(2.0 * norm.sf(abs(t)))
    return TestResult(delta, se, t, p, scores.phi.size, n_used, arm)


def run_test_detailed(frame: ObservationFrame, arm: Arm, config: DmlConfig):
    """Full pipeline; returns (result, folds, nuisance, scores)."""
    try:
        sub = subset_arm(frame, arm)
        folds = assign_folds(sub, config.folds, config.seed)
        nuis = crossfit_nuisances(
            sub, folds, config.learner,
            CvPlan(folds=config.cv_folds, rng_seed=config.seed),
            forest_trees=config.forest_trees,
            forest_min_leaf=config.forest_min_leaf,
            seed=config.seed)
        scores = compute_scores(sub, nuis, config.trim)
        result = estimate_delta(scores, arm)
    except IdentTestError as exc:
        raise type(exc)(f"arm={arm.value}: {exc}") from exc
    return result, folds, nuis, scores


def run_test(frame: ObservationFrame, arm: Arm, config: DmlConfig) -> TestResult:
    """Subset, cross-fit, score, trim, and test one arm."""
    return run_test_detailed(frame, arm, config)[0]


def oracle_plugin_delta(frame: ObservationFrame, true_mu1, true_mu0, true_p,
                        trim_threshold: float = 0.01,
                        arm: Arm = Arm.ALL) -> TestResult:
    """Same score computation with caller-supplied nuisance functions.

    Each function is called as f(d, x) and must return one value per row.
    No cross-fitting is involved; this is the reference path for checking
    the double-robustness property.
    """
    mu1 = np.asarray(true_mu1(frame.d, frame.x), dtype=float)
    mu0 = np.asarray(true_mu0(frame.d, frame.x), dtype=float)
    p = np.asarray(true_p(frame.d, frame.x), dtype=float)
    nuis = NuisanceFit(mu1, mu0, p, np.zeros(frame.n, dtype=np.int64), "oracle")
    scores = compute_scores(frame, nuis, trim_threshold)
    return estimate_delta(scores, arm)
