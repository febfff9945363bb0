"""Synthetic data generator and Monte Carlo harness.

The generating process follows the simulation design the test is sized
against: covariates with Toeplitz correlation and linearly decaying
coefficients, a binary instrument entering the treatment index, and two
violation switches — ``delta`` routes the unobservable W into the
treatment (confounding) and ``gamma`` routes the instrument directly into
the outcome (exclusion violation).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from joblib import Parallel, delayed
from scipy.linalg import cholesky, toeplitz

from .data_model import Arm, ObservationFrame, _freeze
from .dml import DmlConfig, run_test
from .errors import IdentTestError


@dataclass(frozen=True)
class DgpConfig:
    n: int
    p: int = 50
    delta: float = 0.0   # strength of W in the treatment index
    gamma: float = 0.0   # direct effect of Z on Y
    rho: float = 0.5     # covariance base: cov(x_i, x_j) = rho^|i-j|
    beta_scale: float = 0.7   # i-th coefficient is beta_scale / i
    treatment_effect: float = 1.0
    instrument_strength: float = 1.0  # first-stage coefficient of Z
    gamma_het: float = 0.0   # adds gamma_het * 1{x1 > 0} * Z to the outcome
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be >= 1")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")

    @property
    def beta(self) -> np.ndarray:
        return self.beta_scale / np.arange(1, self.p + 1)


@dataclass(frozen=True)
class McSummary:
    replications: int
    mean_est: float
    std_est: float
    mean_se: float
    rejection_rate: float
    alpha: float
    failures: int
    estimates: np.ndarray
    std_errors: np.ndarray
    p_values: np.ndarray


def build_covariance(p: int, rho: float) -> np.ndarray:
    """Toeplitz covariance with entries rho^|i-j|."""
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    return toeplitz(rho ** np.arange(p))


@lru_cache(maxsize=8)
def _chol_factor(p: int, rho: float) -> np.ndarray:
    L = cholesky(build_covariance(p, rho), lower=True)
    L.setflags(write=False)
    return L


def draw_sample(config: DgpConfig, replication_index: int = 0) -> ObservationFrame:
    """One dataset; the RNG stream is derived from (seed, replication)."""
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=config.seed, spawn_key=(replication_index,)))
    L = _chol_factor(config.p, config.rho)
    x = rng.standard_normal((config.n, config.p)) @ L.T
    z = rng.integers(0, 2, size=config.n)
    w = rng.standard_normal(config.n)
    u = rng.standard_normal(config.n)
    v = rng.standard_normal(config.n)
    index = x @ config.beta
    d = (index + config.instrument_strength * z + config.delta * w + v > 0).astype(np.int64)
    y = (config.treatment_effect * d + index + config.gamma * z + w + u)
    if config.gamma_het != 0.0:
        y = y + config.gamma_het * (x[:, 0] > 0) * z
    return ObservationFrame(
        y=_freeze(y), d=_freeze(d), z=_freeze(z.astype(np.int64)), x=_freeze(x),
        feature_names=tuple(f"x{i}" for i in range(1, config.p + 1)),
    )


def _one_replication(config: DgpConfig, rep: int, estimator: DmlConfig):
    frame = draw_sample(config, rep)
    try:
        result = run_test(frame, Arm.ALL, replace(estimator, seed=estimator.seed + rep))
    except IdentTestError as exc:
        return ("fail", str(exc))
    return ("ok", (result.delta_hat, result.std_error, result.p_value))


def run_monte_carlo(config: DgpConfig, replications: int,
                    estimator: DmlConfig | None = None,
                    alpha: float = 0.05, n_jobs: int = 1) -> McSummary:
    """Size/power experiment: draw, test, and tally rejections.

    Replications run independently (optionally in parallel); aggregation is
    in replication order, so the summary does not depend on n_jobs.
    Replications failing with degenerate-data errors are excluded but
    counted in ``failures``.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    estimator = estimator or DmlConfig()
    if n_jobs == 1:
        raw = [_one_replication(config, r, estimator) for r in range(replications)]
    else:
        raw = Parallel(n_jobs=n_jobs)(
            delayed(_one_replication)(config, r, estimator) for r in range(replications))
    est, se, pv = [], [], []
    failures = 0
    for status, payload in raw:
        if status == "ok":
            e, s, p = payload
            est.append(e)
            se.append(s)
            pv.append(p)
        else:
            failures += 1
    est = np.asarray(est)
    se = np.asarray(se)
    pv = np.asarray(pv)
    return McSummary(
        replications=replications,
        mean_est=float(np.mean(est)),
        std_est=float(np.std(est, ddof=1)) if est.size > 1 else 0.0,
        mean_se=float(np.mean(se)),
        rejection_rate=float(np.mean(pv < alpha)),
        alpha=alpha,
        failures=failures,
        estimates=est, std_errors=se, p_values=pv,
    )
