"""Error-bound machinery: recursions, limits, and constant estimation.

The approximation error of the trackers admits a pair of coupled scalar
recursions (zero initialization, per-iteration step alpha_t):

    b_t = (1 - alpha_t n lam0) b_{t-1} + alpha_t eta + alpha_t n gamma b_{t-1}^2
    c_t = (1 - alpha_t n lam0) c_{t-1} + alpha_t n gamma b_{t-1}^2

b_t bounds the distance between the full iterate and a true leave-one-out
iterate (the do-nothing baseline's error); c_t bounds the cheap tracker's
error.  Under the standing hypotheses

    gamma < 2 lam0,    n >= 4 eta / (2 lam0 - gamma),    alpha_t <= 1 / (n lam1)

both sequences rise monotonically from 0 and stabilize below

    b* = 2 eta / ((2 lam0 - gamma) n)
    c* = 4 gamma eta^2 / (lam0 (2 lam0 - gamma)^2 n^2).

Constants: lam0/lam1 are the extreme eigenvalues (scaled by 1/n) of the
leave-one-out Hessians along the trajectory, eta_i bounds the pointwise
gradient norms, gamma is the Hessian Lipschitz constant (scaled by 1/n), and
beta is the reverse-Jensen inflation used by the minibatch theory.  They are
estimated empirically and logged; violated hypotheses are flagged, never
silently ignored, and the sequences are computed regardless.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .schedules import StepSchedule
from .trajectory import SolverSpec


@dataclass(frozen=True)
class TheoryConstants:
    """Empirical curvature / smoothness constants for one problem."""

    lam0: float
    lam1: float
    gamma: float
    eta: np.ndarray            # per-point gradient norm bounds, shape (n,)
    n: int
    beta: float = float("nan")  # minibatch reverse-Jensen ratio, logged only

    @property
    def eta_inf(self) -> float:
        return float(np.max(self.eta))


def hypothesis_violations(consts: TheoryConstants, steps: StepSchedule, T: int) -> tuple:
    """Names of violated standing hypotheses (empty tuple when all hold)."""
    out = []
    if not consts.gamma < 2.0 * consts.lam0:
        out.append("curvature: gamma >= 2 * lam0")
    else:
        need = 4.0 * consts.eta_inf / (2.0 * consts.lam0 - consts.gamma)
        if consts.n < need:
            out.append(f"sample size: n < {need:.3g}")
    alphas = np.array([steps.step_at(t) for t in range(1, T + 1)])
    if consts.lam1 > 0 and alphas.max() > 1.0 / (consts.n * consts.lam1):
        out.append("step size: alpha_t > 1 / (n * lam1)")
    return tuple(out)


@dataclass(frozen=True)
class BoundSequences:
    """b (baseline error bound) and c (tracker error bound), indices 0..T."""

    b: np.ndarray
    c: np.ndarray
    b_limit: float
    c_limit: float
    violations: tuple


def bound_recursion(consts: TheoryConstants, steps: StepSchedule, T: int,
                    b0: float = 0.0, c0: float = 0.0) -> BoundSequences:
    """Run both recursions for T iterations with eta = ||eta||_inf.

    Initialization is b0 = c0 = 0 unless overridden (useful for studying the
    recursions' own stationary points).  Violated hypotheses are reported in
    ``violations`` and the sequences are still computed; the stationary
    limits are NaN when gamma >= 2 * lam0.
    """
    if T < 0:
        raise ShapeError(f"need T >= 0, got {T}")
    lam0, gamma, n = consts.lam0, consts.gamma, consts.n
    eta = consts.eta_inf
    b = np.zeros(T + 1)
    c = np.zeros(T + 1)
    b[0] = b0
    c[0] = c0
    for t in range(1, T + 1):
        alpha = steps.step_at(t)
        shrink = 1.0 - alpha * n * lam0
        grow = alpha * n * gamma * b[t - 1] ** 2
        b[t] = shrink * b[t - 1] + alpha * eta + grow
        c[t] = shrink * c[t - 1] + grow
    if gamma < 2.0 * lam0:
        b_limit = 2.0 * eta / ((2.0 * lam0 - gamma) * n)
        c_limit = 4.0 * gamma * eta**2 / (lam0 * (2.0 * lam0 - gamma) ** 2 * n**2)
    else:
        b_limit = c_limit = float("nan")
    return BoundSequences(b, c, b_limit, c_limit,
                          hypothesis_violations(consts, steps, T))


def _sample_indices(count: int, want: int = 11) -> np.ndarray:
    if count <= want:
        return np.arange(count)
    return np.unique(np.linspace(0, count - 1, want).round().astype(int))


def estimate_constants(spec: SolverSpec, thetas, pairs_per_iterate: int = 100,
                       fd_delta: float = 1e-3, seed: int = 0) -> TheoryConstants:
    """Empirical constants from a recorded trajectory.

    ``thetas`` is a sequence of iterates; roughly a decile grid of them is
    sampled.  lam0 and lam1 scan all leave-one-out Hessians of the smooth
    part, eta takes per-point gradient norm maxima, and gamma takes symmetric
    finite differences of the Hessian along random directions (exact zero up
    to rounding for quadratic losses).  beta is left NaN; see
    ``reverse_jensen_ratio``.
    """
    X, y = spec.data.X, spec.data.y
    n, p = spec.data.n, spec.data.p
    thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
    if thetas.shape[1] != p:
        raise ShapeError(f"iterates must have {p} columns, got {thetas.shape[1]}")
    rng = np.random.default_rng(seed)
    reg_h = spec.smooth_reg.hess_mult
    row_norms = np.linalg.norm(X, axis=1)

    lam0, lam1, gamma = np.inf, 0.0, 0.0
    eta = np.zeros(n)

    def smooth_hessian(theta):
        hc = spec.loss.hcoef(X @ theta, y)
        H = (X * hc[:, None]).T @ X
        H[np.diag_indices(p)] += reg_h
        return H, hc

    for idx in _sample_indices(len(thetas)):
        theta = thetas[idx]
        gc = spec.loss.gcoef(X @ theta, y)
        eta = np.maximum(eta, np.abs(gc) * row_norms)
        H, hc = smooth_hessian(theta)
        for i in range(n):
            evals = np.linalg.eigvalsh(H - hc[i] * np.outer(X[i], X[i]))
            lam0 = min(lam0, float(evals[0]) / n)
            lam1 = max(lam1, float(evals[-1]) / n)
        scale = fd_delta * (1.0 + float(np.linalg.norm(theta)))
        for _ in range(pairs_per_iterate):
            w = rng.standard_normal(p)
            w /= np.linalg.norm(w)
            Hp, _ = smooth_hessian(theta + scale * w)
            Hm, _ = smooth_hessian(theta - scale * w)
            diff = float(np.linalg.norm(Hp - Hm, 2)) / (2.0 * scale * n)
            gamma = max(gamma, diff)
    return TheoryConstants(lam0=float(lam0), lam1=float(lam1), gamma=float(gamma),
                           eta=eta, n=n)


def reverse_jensen_ratio(gap_norms, n: int, k: int) -> np.ndarray:
    """Per-point ratio E[g^2] / ((n/k) * E[g]^2) over repeated batch draws.

    ``gap_norms`` has shape (reps, n): for each replicate, the distance of
    every leave-one-out iterate from the full iterate.  The minibatch theory
    postulates an upper bound beta for this ratio; it is a logged diagnostic,
    never asserted.  Points whose mean gap is zero give NaN.
    """
    g = np.asarray(gap_norms, dtype=np.float64)
    if g.ndim != 2 or g.shape[1] != n:
        raise ShapeError(f"gap_norms must have shape (reps, {n})")
    if not 1 <= k <= n:
        raise ShapeError(f"need 1 <= k <= n, got k={k}")
    m1 = g.mean(axis=0)
    m2 = (g**2).mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = m2 / ((n / k) * m1**2)
    ratio[m1 == 0] = np.nan
    return ratio
