"""identest: testing identifiability of treatment effects in observational data.

Given an outcome, a binary treatment, a binary suspected instrument, and
covariates, the package estimates the doubly-robust contrast of conditional
mean outcomes across instrument states. A contrast significantly different
from zero indicates that instrument validity and unconfoundedness cannot
both hold, i.e. the treatment effect is not identified from the covariates
at hand. Subpackages add subgroup heterogeneity search and a Monte Carlo
harness for the test's size and power.
"""

__version__ = "0.1.0"

from .data_model import Arm, ColumnSpec, ObservationFrame, subset_arm, validate_frame
from .dml import (
    DmlConfig,
    FoldAssignment,
    NuisanceFit,
    ScoreVector,
    TestResult,
    assign_folds,
    compute_scores,
    crossfit_nuisances,
    estimate_delta,
    oracle_plugin_delta,
    run_test,
)
from .simulation import DgpConfig, McSummary, build_covariance, draw_sample, run_monte_carlo
from .subgroup import (
    JointTest,
    LeafTestReport,
    SubgroupConfig,
    SubgroupPartition,
    SubgroupReport,
    bh_adjust,
    build_quantile_partition,
    joint_wald,
    leaf_tests,
    rank_predictors,
    run_subgroup_analysis,
    split_half,
)

__all__ = [
    "Arm", "ColumnSpec", "ObservationFrame", "subset_arm", "validate_frame",
    "DmlConfig", "FoldAssignment", "NuisanceFit", "ScoreVector", "TestResult",
    "assign_folds", "compute_scores", "crossfit_nuisances", "estimate_delta",
    "oracle_plugin_delta", "run_test",
    "DgpConfig", "McSummary", "build_covariance", "draw_sample", "run_monte_carlo",
    "JointTest", "LeafTestReport", "SubgroupConfig", "SubgroupPartition",
    "SubgroupReport", "bh_adjust", "build_quantile_partition", "joint_wald",
    "leaf_tests", "rank_predictors", "run_subgroup_analysis", "split_half",
]
