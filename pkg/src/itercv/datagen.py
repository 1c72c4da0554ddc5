"""Synthetic sparse logistic data, plus a plain-text CSV round trip.

The generator is deterministic given the seed: one PCG64 stream drawn in a
fixed order (design matrix, support positions, support values, response
uniforms), so the same seed reproduces the same dataset on any platform.
"""

from __future__ import annotations

import csv
import io

import numpy as np
from scipy.special import expit

from .errors import ShapeError
from .model import Dataset

# 17 significant digits round-trips any float64 exactly
_FMT = "%.17g"


def gen_logistic(n: int, p: int, s: int, seed) -> tuple[Dataset, np.ndarray]:
    """Draw (Dataset, theta_star) with exactly s nonzero signal coordinates.

    X has i.i.d. standard normal entries; theta_star puts standard normal
    values on s uniformly drawn coordinates; y_i is Bernoulli with success
    probability sigmoid(x_i . theta_star).
    """
    if n < 1 or p < 1:
        raise ShapeError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    if not 0 <= s <= p:
        raise ShapeError(f"need 0 <= s <= p, got s={s}, p={p}")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    support = rng.choice(p, size=s, replace=False)
    theta_star = np.zeros(p)
    theta_star[support] = rng.standard_normal(s)
    probs = expit(X @ theta_star)
    y = (rng.random(n) < probs).astype(np.float64)
    return Dataset(X, y), theta_star


def write_csv(data: Dataset, path) -> None:
    """Write a dataset with header y,x_1,...,x_p at full float64 precision."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_csv_handle(data, fh)


def _write_csv_handle(data: Dataset, fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(["y"] + [f"x_{j}" for j in range(1, data.p + 1)])
    for i in range(data.n):
        writer.writerow([_FMT % data.y[i]] + [_FMT % v for v in data.X[i]])


def csv_text(data: Dataset) -> str:
    buf = io.StringIO()
    _write_csv_handle(data, buf)
    return buf.getvalue()


def read_csv(path) -> Dataset:
    """Read a dataset written by write_csv (header checked)."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "y":
            raise ShapeError(f"expected header starting with 'y', got {header}")
        p = len(header) - 1
        if header[1:] != [f"x_{j}" for j in range(1, p + 1)]:
            raise ShapeError("expected feature columns x_1..x_p")
        ys, xs = [], []
        for row in reader:
            if not row:
                continue
            if len(row) != p + 1:
                raise ShapeError(f"row has {len(row)} fields, expected {p + 1}")
            ys.append(float(row[0]))
            xs.append([float(v) for v in row[1:]])
    if not ys:
        raise ShapeError("no data rows in file")
    return Dataset(np.array(xs), np.array(ys))
