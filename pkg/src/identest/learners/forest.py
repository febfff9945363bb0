"""Regression forest built from scratch, with permutation importance.

Each tree is grown on a bootstrap resample; at every node a random subset
of features is searched for the variance-minimizing axis-aligned split.
Predictions average over trees and are clipped to the per-row tree range,
so they never leave the training response range.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateDesign
from ._kernels import build_tree, tree_predict


@dataclass(frozen=True)
class _Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    num_trees: int
    min_leaf: int
    features_per_split: int
    bootstrap: bool
    seed: int
    n_features: int
    y_min: float
    y_max: float

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(np.asarray(X, dtype=float))
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} feature columns")
        n = X.shape[0]
        acc = np.zeros(n)
        lo = np.full(n, np.inf)
        hi = np.full(n, -np.inf)
        out = np.empty(n)
        for t in self.trees:
            tree_predict(X, t.feature, t.threshold, t.left, t.right, t.value, out)
            acc += out
            np.minimum(lo, out, out=lo)
            np.maximum(hi, out, out=hi)
        return np.clip(acc / self.num_trees, lo, hi)


def fit_forest(X, y, num_trees: int = 200, min_leaf: int = 5,
               features_per_split: int | None = None, bootstrap: bool = True,
               seed: int = 0) -> ForestModel:
    """Bootstrap-aggregated regression trees with random feature subsets."""
    X = np.ascontiguousarray(np.asarray(X, dtype=float))
    y = np.ascontiguousarray(np.asarray(y, dtype=float))
    n, p = X.shape if X.ndim == 2 else (X.shape[0], 1)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if n == 0:
        raise DegenerateDesign("cannot fit a forest on zero rows")
    if num_trees < 1 or min_leaf < 1:
        raise ValueError("num_trees and min_leaf must be >= 1")
    mtry = features_per_split if features_per_split is not None else max(1, p // 3)
    if not 1 <= mtry <= p:
        raise ValueError("features_per_split must be in [1, p]")

    # per-tree streams derived from (seed, tree index) so results do not
    # depend on how trees are scheduled
    trees = []
    max_nodes = 2 * n + 1
    for t in range(num_trees):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(t,)))
        if bootstrap:
            rows = rng.integers(0, n, size=n).astype(np.int64)
        else:
            rows = np.arange(n, dtype=np.int64)
        feature = np.empty(max_nodes, dtype=np.int64)
        threshold = np.zeros(max_nodes)
        left = np.zeros(max_nodes, dtype=np.int64)
        right = np.zeros(max_nodes, dtype=np.int64)
        value = np.zeros(max_nodes)
        node_seed = int(rng.integers(0, 2**31 - 1))
        used = build_tree(X, y, rows, min_leaf, mtry, node_seed,
                          feature, threshold, left, right, value)
        trees.append(_Tree(feature[:used].copy(), threshold[:used].copy(),
                           left[:used].copy(), right[:used].copy(), value[:used].copy()))
    return ForestModel(tuple(trees), num_trees, min_leaf, mtry, bootstrap, seed,
                       p, float(np.min(y)), float(np.max(y)))


def permutation_importance(model: ForestModel, X, y, rng_seed: int = 0,
                           repeats: int = 5) -> np.ndarray:
    """MSE increase when each column is permuted, averaged over permutations.

    The permutation stream is derived from (rng_seed, column, repeat), so a
    column's importance does not depend on which other columns are scored.
    """
    X = np.ascontiguousarray(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} feature columns")
    base_mse = float(np.mean((y - model.predict(X)) ** 2))
    importances = np.zeros(model.n_features)
    for j in range(model.n_features):
        total = 0.0
        for rep in range(repeats):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=rng_seed, spawn_key=(j, rep)))
            Xp = X.copy()
            Xp[:, j] = Xp[rng.permutation(X.shape[0]), j]
            total += float(np.mean((y - model.predict(Xp)) ** 2)) - base_mse
        importances[j] = total / repeats
    return importances
