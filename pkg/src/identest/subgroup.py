"""Sample-splitting heterogeneity search for localized violations.

Half of the sample is used to rank which variables predict the estimated
scores (via a regression forest and permutation importance) and to learn a
quantile partition of the top variable; the other half supplies fresh
scores that are tested within each leaf, with Benjamini-Hochberg FDR
adjustment and a joint chi-square Wald test across leaves.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import chi2, norm

from .data_model import ObservationFrame
from .dml import (
    DmlConfig,
    ScoreVector,
    assign_folds,
    compute_scores,
    crossfit_nuisances,
)
from .errors import (
    DegenerateVariable,
    EmptyLeaf,
    IdentTestError,
    TooFewObservations,
    ZeroVariance,
)
from .learners import CvPlan, fit_forest, permutation_importance

TREATMENT_LABEL = "treatment"


@dataclass(frozen=True)
class SplitAssignment:
    s: np.ndarray  # True marks the second (testing) subsample


@dataclass(frozen=True)
class SubgroupPartition:
    source_variable: str
    cut_points: np.ndarray  # ascending; leaves (-inf,c1], (c1,c2], ..., (c_{M-1},inf)
    num_leaves: int


@dataclass(frozen=True)
class LeafTestReport:
    n_m: np.ndarray
    delta_hat_m: np.ndarray
    se_m: np.ndarray
    p_m: np.ndarray
    p_adj_m: np.ndarray
    zero_variance_m: np.ndarray


@dataclass(frozen=True)
class JointTest:
    wald_stat: float
    df: int
    p_value: float


@dataclass(frozen=True)
class SubgroupReport:
    partition: SubgroupPartition
    leaves: LeafTestReport
    joint: JointTest
    importance_ranking: tuple  # (variable name, importance), descending


def split_half(n: int, seed: int) -> SplitAssignment:
    """Uniform random half split; second subsample gets the extra row."""
    if n < 4:
        raise TooFewObservations(f"n={n} too small to split in half")
    rng = np.random.default_rng(seed)
    s = np.zeros(n, dtype=bool)
    s[rng.permutation(n)[: n - n // 2]] = True
    return SplitAssignment(s)


def bh_adjust(p_values) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted p-values.

    Monotone over the sorted raw p-values, never below the raw value,
    never above 1, and invariant to input order.
    """
    p = np.asarray(p_values, dtype=float)
    m = p.size
    order = np.argsort(p, kind="mergesort")
    scaled = p[order] * m / np.arange(1, m + 1)
    adj = np.minimum(1.0, np.minimum.accumulate(scaled[::-1])[::-1])
    # p*m/k can round an ulp below p at k = m; the adjusted value is
    # never below the raw one mathematically, so enforce it exactly
    adj = np.maximum(adj, p[order])
    out = np.empty(m)
    out[order] = adj
    return out


def rank_predictors(frame1: ObservationFrame, scores1: ScoreVector,
                    num_trees: int = 200, min_leaf: int | None = None,
                    features_per_split: int | None = None,
                    seed: int = 0) -> tuple:
    """Permutation importances of (treatment, covariates) for the scores.

    Fits a regression forest of the kept first-subsample scores on the
    treatment and covariate columns; returns (name, importance) pairs
    sorted descending, ties broken by column order.

    The default forest is a bag of near-stumps: ``min_leaf`` is 45% of the
    kept rows (so each tree makes at most one split) and every column is
    searched at the split. Scores are dominated by idiosyncratic noise, and
    aggregating each bootstrap's single best split separates a weak but
    real predictor from the spurious gains of deep splits far better than
    fully grown trees do.
    """
    kept = scores1.kept
    R = np.column_stack([frame1.d[kept].astype(float), frame1.x[kept]])
    names = [TREATMENT_LABEL] + list(frame1.feature_names)
    if min_leaf is None:
        min_leaf = max(5, int(round(0.45 * R.shape[0])))
    if features_per_split is None:
        features_per_split = R.shape[1]
    model = fit_forest(R, scores1.phi[kept], num_trees=num_trees, min_leaf=min_leaf,
                       features_per_split=features_per_split, seed=seed)
    imp = permutation_importance(model, R, scores1.phi[kept], rng_seed=seed)
    order = sorted(range(len(names)), key=lambda j: (-imp[j], j))
    return tuple((names[j], float(imp[j])) for j in order)


def _resolve_variable(frame: ObservationFrame, variable: str) -> np.ndarray:
    if variable in frame.feature_names:
        return frame.x[:, frame.feature_names.index(variable)].astype(float)
    if variable == TREATMENT_LABEL:
        return frame.d.astype(float)
    raise KeyError(f"unknown variable {variable!r}")


def build_quantile_partition(frame1: ObservationFrame, variable: str,
                             num_bins: int) -> SubgroupPartition:
    """Leaves from first-subsample quantiles of one variable.

    Cut points are the type-7 (linearly interpolated) empirical quantiles
    at j/num_bins for j = 1..num_bins-1. A binary variable with two bins
    yields the natural {0} / {1} leaves.
    """
    if num_bins < 2:
        raise ValueError("num_bins must be >= 2")
    v = _resolve_variable(frame1, variable)
    distinct = np.unique(v)
    if distinct.size < num_bins:
        raise DegenerateVariable(
            f"{variable!r} has {distinct.size} distinct value(s), need {num_bins}")
    if distinct.size == 2 and set(distinct) == {0.0, 1.0} and num_bins == 2:
        cuts = np.array([0.5])
    else:
        qs = np.arange(1, num_bins) / num_bins
        cuts = np.quantile(v, qs)  # type-7 linear interpolation
        if np.unique(cuts).size < cuts.size:
            raise DegenerateVariable(f"quantile cut points of {variable!r} are not distinct")
    return SubgroupPartition(variable, cuts, num_bins)


def _leaf_ids(values: np.ndarray, partition: SubgroupPartition) -> np.ndarray:
    # leaf m holds v in (c_{m-1}, c_m]; searchsorted with side="left" maps
    # v == c_m into leaf m-1
    return np.searchsorted(partition.cut_points, values, side="left")


def leaf_tests(frame2: ObservationFrame, scores2: ScoreVector,
               partition: SubgroupPartition) -> LeafTestReport:
    """Per-leaf score means, standard errors, and BH-adjusted p-values.

    The leaf means are also recomputed as the coefficients of a
    no-intercept least-squares regression on the leaf indicators; the two
    computations must agree to 1e-10.
    """
    kept = scores2.kept
    phi = scores2.phi[kept]
    ids = _leaf_ids(_resolve_variable(frame2, partition.source_variable)[kept], partition)
    M = partition.num_leaves
    n_m = np.zeros(M, dtype=np.int64)
    delta = np.zeros(M)
    se = np.zeros(M)
    p = np.ones(M)
    zerovar = np.zeros(M, dtype=bool)
    for m in range(M):
        in_leaf = ids == m
        n_m[m] = int(in_leaf.sum())
        if n_m[m] < 2:
            raise EmptyLeaf(f"leaf {m} has {n_m[m]} kept observation(s)")
        leaf_phi = phi[in_leaf]
        delta[m] = float(np.mean(leaf_phi))
        sd = float(np.std(leaf_phi, ddof=1))
        if sd == 0.0:
            zerovar[m] = True
            se[m] = 0.0
            p[m] = 0.0 if delta[m] != 0 else 1.0
        else:
            se[m] = sd / np.sqrt(n_m[m])
            p[m] = float(2.0 * norm.sf(abs(delta[m] / se[m])))
    # identity check: no-intercept regression on disjoint indicators
    indicators = (ids[:, None] == np.arange(M)[None, :]).astype(float)
    coef, *_ = np.linalg.lstsq(indicators, phi, rcond=None)
    if np.max(np.abs(coef - delta)) > 1e-10:
        raise AssertionError("leaf means and indicator-regression coefficients disagree")
    return LeafTestReport(n_m, delta, se, p, bh_adjust(p), zerovar)


def joint_wald(report: LeafTestReport) -> JointTest:
    """Chi-square test that all leaf contrasts are simultaneously zero.

    Leaves are disjoint, so the leaf estimates are independent and the
    statistic is the sum of squared t-statistics with df = number of leaves.
    """
    if np.any(report.se_m == 0.0):
        raise ZeroVariance("a leaf has zero score variance")
    t = report.delta_hat_m / report.se_m
    stat = float(np.sum(t * t))
    df = report.delta_hat_m.size
    return JointTest(stat, df, float(chi2.sf(stat, df)))


@dataclass(frozen=True)
class SubgroupConfig:
    dml: DmlConfig = DmlConfig()
    num_bins: tuple = (2, 4)
    ranking_trees: int = 200
    ranking_min_leaf: int | None = None  # None: 45% of kept rows (near-stumps)
    seed: int = 0


def _scores_for(frame: ObservationFrame, config: SubgroupConfig, seed: int) -> ScoreVector:
    dml = replace(config.dml, seed=seed)
    folds = assign_folds(frame, dml.folds, dml.seed)
    nuis = crossfit_nuisances(frame, folds, dml.learner,
                              CvPlan(folds=dml.cv_folds, rng_seed=dml.seed),
                              forest_trees=dml.forest_trees,
                              forest_min_leaf=dml.forest_min_leaf,
                              seed=dml.seed)
    return compute_scores(frame, nuis, dml.trim)


def run_subgroup_analysis(frame: ObservationFrame,
                          config: SubgroupConfig | None = None) -> dict:
    """End-to-end heterogeneity search.

    Splits the sample, scores subsample 1, ranks predictors there, builds
    the quantile partition of the top-ranked variable on subsample 1, then
    scores subsample 2 and runs the leaf and joint tests on it. Returns a
    report per requested bin count, keyed by the bin count.
    """
    config = config or SubgroupConfig()
    stage = "sample split"
    try:
        half = split_half(frame.n, config.seed)
        first = frame.take(np.flatnonzero(~half.s))
        second = frame.take(np.flatnonzero(half.s))

        stage = "subsample-1 scoring"
        scores1 = _scores_for(first, config, config.seed * 2 + 1)

        stage = "predictor ranking"
        ranking = rank_predictors(first, scores1, num_trees=config.ranking_trees,
                                  min_leaf=config.ranking_min_leaf,
                                  seed=config.seed)
        top_variable = ranking[0][0]

        stage = "subsample-2 scoring"
        scores2 = _scores_for(second, config, config.seed * 2 + 2)

        reports = {}
        for bins in config.num_bins:
            stage = f"partition with {bins} bins"
            partition = build_quantile_partition(first, top_variable, bins)
            leaves = leaf_tests(second, scores2, partition)
            reports[bins] = SubgroupReport(partition, leaves, joint_wald(leaves), ranking)
    except IdentTestError as exc:
        raise type(exc)(f"subgroup stage '{stage}': {exc}") from exc
    return reports
