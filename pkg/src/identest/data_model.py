"""Dataset representation, validation, and arm subsetting.

All downstream modules work on :class:`ObservationFrame`, a validated,
immutable rectangle holding the outcome ``y``, the binary treatment ``d``,
the binary suspected instrument ``z``, and the covariate matrix ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyArm, EmptyData, MissingColumn, NonBinary, NonFinite


class Arm(Enum):
    """Which treatment arm to analyze."""

    ALL = "all"
    TREATED = "treated"
    CONTROL = "control"


@dataclass(frozen=True)
class ColumnSpec:
    """Maps column names in a raw table to their roles."""

    outcome: str
    treatment: str
    instrument: str
    covariates: Sequence[str]


@dataclass(frozen=True)
class ObservationFrame:
    """Validated (y, d, z, x) dataset.

    Invariants (enforced by :func:`validate_frame`):
    y, d, z have length n and x has n rows; d and z are exactly 0/1;
    y and x are finite; n >= 1 and p >= 1. Arrays are read-only.
    """

    y: np.ndarray
    d: np.ndarray
    z: np.ndarray
    x: np.ndarray
    feature_names: tuple = field(default=())

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def take(self, rows: np.ndarray) -> "ObservationFrame":
        """Row subset sharing this frame's feature names."""
        return ObservationFrame(
            y=_freeze(self.y[rows]),
            d=_freeze(self.d[rows]),
            z=_freeze(self.z[rows]),
            x=_freeze(self.x[rows]),
            feature_names=self.feature_names,
        )


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _as_binary(values: np.ndarray, role: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    ok = (values == 0.0) | (values == 1.0)
    if not np.all(ok):
        bad = values[~ok][0]
        raise NonBinary(f"{role} column contains value {bad!r}, expected 0 or 1")
    return values.astype(np.int64)


def validate_frame(raw_columns: Mapping[str, Sequence[float]], spec: ColumnSpec) -> ObservationFrame:
    """Validate raw named columns against a role mapping.

    Raises MissingColumn, NonBinary, NonFinite, or EmptyData on bad input.
    Idempotent: re-validating an accepted frame's columns returns an equal
    frame.
    """
    if not spec.covariates:
        raise MissingColumn("at least one covariate column is required")
    for role, name in (
        ("outcome", spec.outcome),
        ("treatment", spec.treatment),
        ("instrument", spec.instrument),
        *(("covariate", c) for c in spec.covariates),
    ):
        if name not in raw_columns:
            raise MissingColumn(f"{role} column {name!r} not found in input")

    y = np.asarray(raw_columns[spec.outcome], dtype=float)
    if y.shape[0] == 0:
        raise EmptyData("input has zero rows")
    if not np.all(np.isfinite(y)):
        raise NonFinite(f"outcome column {spec.outcome!r} contains NaN or infinity")

    d = _as_binary(np.asarray(raw_columns[spec.treatment]), "treatment")
    z = _as_binary(np.asarray(raw_columns[spec.instrument]), "instrument")

    cols = []
    for name in spec.covariates:
        c = np.asarray(raw_columns[name], dtype=float)
        if not np.all(np.isfinite(c)):
            raise NonFinite(f"covariate column {name!r} contains NaN or infinity")
        cols.append(c)
    x = np.column_stack(cols)

    n = y.shape[0]
    for name, arr in (("treatment", d), ("instrument", z)):
        if arr.shape[0] != n:
            raise MissingColumn(f"{name} column length {arr.shape[0]} != {n}")
    if x.shape[0] != n:
        raise MissingColumn(f"covariate rows {x.shape[0]} != {n}")

    return ObservationFrame(
        y=_freeze(y), d=_freeze(d), z=_freeze(z), x=_freeze(x),
        feature_names=tuple(spec.covariates),
    )


def subset_arm(frame: ObservationFrame, arm: Arm) -> ObservationFrame:
    """Rows of the requested arm; raises EmptyArm if none match."""
    if arm is Arm.ALL:
        return frame
    want = 1 if arm is Arm.TREATED else 0
    rows = np.flatnonzero(frame.d == want)
    if rows.size == 0:
        raise EmptyArm(f"no observations with d={want}")
    return frame.take(rows)
