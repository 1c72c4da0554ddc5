"""Accuracy metrics for leave-one-out estimates, and trial aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .model import Dataset


def _check_rows(data: Dataset, rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape != (data.n, data.p):
        raise ShapeError(f"rows must have shape ({data.n}, {data.p}), got {rows.shape}")
    return rows


def cv_loss(loss, data: Dataset, rows) -> float:
    """Cross-validation loss: mean over i of loss(x_i, y_i; rows[i]).

    Row i must have been fit without point i for this to be an honest
    out-of-sample estimate; only the pointwise loss enters, no penalty.
    """
    rows = _check_rows(data, rows)
    margins = np.einsum("ij,ij->i", data.X, rows)
    return float(loss.values(margins, data.y).mean())


def err_approx(rows_a, rows_b) -> float:
    """Mean Euclidean row distance between two (n, p) estimate matrices."""
    a = np.asarray(rows_a, dtype=np.float64)
    b = np.asarray(rows_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise ShapeError(f"row matrices must share a 2-d shape, got {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b, axis=1).mean())


def err_cv(loss, data: Dataset, estimate_rows, target_rows):
    """Absolute and relative CV-loss error of an estimate vs the target.

    Returns (abs_err, rel_err); rel_err is NaN when the target CV loss is 0,
    since the ratio is undefined there.
    """
    cv_est = cv_loss(loss, data, estimate_rows)
    cv_tgt = cv_loss(loss, data, target_rows)
    abs_err = abs(cv_est - cv_tgt)
    rel_err = abs_err / abs(cv_tgt) if cv_tgt != 0.0 else float("nan")
    return abs_err, rel_err


@dataclass(frozen=True)
class MetricsRow:
    """One (trial, method, iteration) record of tracking quality."""

    trial: int
    method: str
    t: int
    err_approx: float
    err_cv: float
    rel_err_cv: float
    cum_seconds: float


@dataclass(frozen=True)
class AggregateRow:
    """Across-trial median and quartiles at one (method, iteration)."""

    method: str
    t: int
    median_err_approx: float
    q1_err_approx: float
    q3_err_approx: float
    median_err_cv: float
    q1_err_cv: float
    q3_err_cv: float
    median_rel_err_cv: float
    median_cum_seconds: float


def _quartiles(values):
    arr = np.asarray(values, dtype=np.float64)
    if np.isnan(arr).all():
        return float("nan"), float("nan"), float("nan")
    q1, med, q3 = np.nanpercentile(arr, [25.0, 50.0, 75.0])
    return float(med), float(q1), float(q3)


def aggregate(rows) -> list:
    """Median/quartile summary of MetricsRows across trials.

    Rows are grouped by (method, t); output is sorted by method then t.
    """
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.method, r.t), []).append(r)
    out = []
    for (method, t) in sorted(groups):
        g = groups[(method, t)]
        med_a, q1_a, q3_a = _quartiles([r.err_approx for r in g])
        med_c, q1_c, q3_c = _quartiles([r.err_cv for r in g])
        med_r, _, _ = _quartiles([r.rel_err_cv for r in g])
        med_s, _, _ = _quartiles([r.cum_seconds for r in g])
        out.append(AggregateRow(method, t, med_a, q1_a, q3_a,
                                med_c, q1_c, q3_c, med_r, med_s))
    return out
