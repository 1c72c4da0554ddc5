"""One-shot leave-one-out approximations at a fixed parameter vector.

Two classical estimators, each with a smooth and a proximal variant:

* NS (one Newton step): solve with the leave-one-out Hessian,
  theta - inv(hess_{-i}) @ grad_{-i}.
* IJ (infinitesimal jackknife): same step but with the full-data Hessian,
  theta - inv(hess) @ grad_{-i}.

When the objective has an l1 part h, the smooth part g keeps the pointwise
losses plus any smooth penalty, the Newton step applies to g only, and the
result passes through the Hessian-scaled proximal map

    prox_h^H(x) = argmin_z 0.5 * (x - z)' H (x - z) + h(z),

with H the leave-one-out Hessian of g in both variants.

``ns_estimate`` and friends are per-point reference implementations using a
dense factorization per point.  ``along_path_estimates`` produces all n rows
at once: one factorization of the full Hessian plus rank-one downdates
(Sherman-Morrison), cross-checked against the dense route in the tests.
Every linear solve is verified by its residual.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import ConvergenceError, NotPositiveDefiniteError, NumericsError, ShapeError
from .model import EvalCounters, prox_l1, subset_grad_hess
from .trajectory import SolverSpec

_RESIDUAL_RTOL = 1e-8
_PROX_TOL = 1e-10
_PROX_MAX_ITER = 10**4


def _spd_solve(H, b, where):
    """Cholesky solve with residual verification."""
    try:
        cho = cho_factor(H, lower=True)
    except LinAlgError:
        min_eig = float(np.linalg.eigvalsh(H)[0])
        raise NotPositiveDefiniteError("Hessian is not positive definite",
                                       min_eig=min_eig, where=where)
    x = cho_solve(cho, b)
    resid = np.linalg.norm(H @ x - b)
    if resid > _RESIDUAL_RTOL * max(float(np.linalg.norm(b)), 1e-30):
        raise NumericsError(f"linear solve residual {resid:.3e} too large", where=where)
    return x


def _loo_grad_hess(spec: SolverSpec, theta, i):
    """Gradient and Hessian of the smooth part with point i left out."""
    n = spec.data.n
    if not 0 <= i < n:
        raise ShapeError(f"point index {i} out of range [0, {n})")
    subset = np.delete(np.arange(n, dtype=np.intp), i)
    return subset_grad_hess(spec.loss, spec.smooth_reg, spec.data, subset, theta,
                            include_reg=True)


def _full_grad_hess(spec: SolverSpec, theta):
    return subset_grad_hess(spec.loss, spec.smooth_reg, spec.data,
                            np.arange(spec.data.n, dtype=np.intp), theta,
                            include_reg=True)


def ns_estimate(spec: SolverSpec, theta_hat, i: int) -> np.ndarray:
    """One Newton step for point i with the leave-one-out Hessian."""
    if spec.prox_reg.kind != "none":
        raise ShapeError("objective has an l1 part; use prox_ns_estimate")
    g, H = _loo_grad_hess(spec, theta_hat, i)
    return np.asarray(theta_hat) - _spd_solve(H, g, where=f"ns i={i}")


def ij_estimate(spec: SolverSpec, theta_hat, i: int) -> np.ndarray:
    """Infinitesimal jackknife for point i (full-data Hessian)."""
    if spec.prox_reg.kind != "none":
        raise ShapeError("objective has an l1 part; use prox_ij_estimate")
    g, _ = _loo_grad_hess(spec, theta_hat, i)
    _, H = _full_grad_hess(spec, theta_hat)
    return np.asarray(theta_hat) - _spd_solve(H, g, where=f"ij i={i}")


def scaled_prox(H, x, lam: float, tol: float = _PROX_TOL,
                max_iter: int = _PROX_MAX_ITER) -> np.ndarray:
    """prox_h^H(x) for h = lam * ||.||_1, by proximal gradient on z.

    Steps use 1/eigmax(H); stops when the fixed-point displacement drops to
    ``tol`` and raises ConvergenceError after ``max_iter`` sweeps.
    """
    H = np.asarray(H, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    evals = np.linalg.eigvalsh(H)
    if evals[0] <= 0:
        raise NotPositiveDefiniteError("scaled prox needs H > 0",
                                       min_eig=float(evals[0]), where="scaled_prox")
    L = float(evals[-1])
    z = x.copy()
    resid = np.inf
    for _ in range(max_iter):
        z_new = prox_l1(z - (H @ (z - x)) / L, lam / L)
        resid = float(np.linalg.norm(z_new - z))
        z = z_new
        if resid <= tol:
            return z
    raise ConvergenceError("scaled prox did not converge", residual=resid,
                           where="scaled_prox")


def prox_ns_estimate(spec: SolverSpec, theta_hat, i: int) -> np.ndarray:
    """Proximal-Newton NS for point i (leave-one-out Hessian everywhere)."""
    if spec.prox_reg.kind != "l1":
        raise ShapeError("prox_ns_estimate needs an l1 part; use ns_estimate")
    g, H = _loo_grad_hess(spec, theta_hat, i)
    u = np.asarray(theta_hat) - _spd_solve(H, g, where=f"prox_ns i={i}")
    return scaled_prox(H, u, spec.prox_reg.lam)


def prox_ij_estimate(spec: SolverSpec, theta_hat, i: int) -> np.ndarray:
    """Proximal IJ: full-data Hessian in the step, leave-one-out in the prox."""
    if spec.prox_reg.kind != "l1":
        raise ShapeError("prox_ij_estimate needs an l1 part; use ij_estimate")
    g, H_loo = _loo_grad_hess(spec, theta_hat, i)
    _, H = _full_grad_hess(spec, theta_hat)
    u = np.asarray(theta_hat) - _spd_solve(H, g, where=f"prox_ij i={i}")
    return scaled_prox(H_loo, u, spec.prox_reg.lam)


def baseline_estimates(spec: SolverSpec, theta_hat) -> np.ndarray:
    """The do-nothing estimator: every row is the full-data iterate."""
    return np.tile(np.asarray(theta_hat, dtype=np.float64), (spec.data.n, 1))


def _pointwise_coefs(spec, theta):
    X, y = spec.data.X, spec.data.y
    m = X @ theta
    return spec.loss.gcoef(m, y), spec.loss.hcoef(m, y)


def _factor_full(spec, theta, gc, hc, where):
    X = spec.data.X
    p = spec.data.p
    G = X.T @ gc + spec.smooth_reg.grad(theta)
    H = (X * hc[:, None]).T @ X
    H[np.diag_indices(p)] += spec.smooth_reg.hess_mult
    try:
        cho = cho_factor(H, lower=True)
    except LinAlgError:
        min_eig = float(np.linalg.eigvalsh(H)[0])
        raise NotPositiveDefiniteError("full Hessian is not positive definite",
                                       min_eig=min_eig, where=where)
    return G, H, cho


def _verify_row_residuals(H, D, X, hc_corr, G, gc, where):
    # residual of H_{-i} d_i = g_{-i} for every row, in one pass
    R = D @ H
    if hc_corr is not None:
        R -= (hc_corr * np.einsum("ij,ij->i", X, D))[:, None] * X
    R -= G
    R += gc[:, None] * X
    rhs = np.linalg.norm(G[None, :] - gc[:, None] * X, axis=1)
    bad = np.linalg.norm(R, axis=1) > _RESIDUAL_RTOL * np.maximum(rhs, 1e-30)
    if bad.any():
        raise NumericsError(f"row solve residual too large for i={int(np.argmax(bad))}",
                            where=where)


def _ns_rows(spec, theta, counters=None):
    """All NS estimates via one factorization plus rank-one downdates."""
    X = spec.data.X
    gc, hc = _pointwise_coefs(spec, theta)
    G, H, cho = _factor_full(spec, theta, gc, hc, where="ns rows")
    A = cho_solve(cho, X.T)                  # columns inv(H) x_i
    w = cho_solve(cho, G)
    dii = np.einsum("ij,ji->i", X, A)
    denom = 1.0 - hc * dii                   # > 0 iff every downdate stays PD
    if denom.min() <= 1e-12:
        raise NotPositiveDefiniteError("leave-one-out Hessian lost definiteness",
                                       min_eig=float(denom.min()), where="ns rows")
    coef = hc * (X @ w - gc * dii) / denom
    D = w[None, :] - (gc - coef)[:, None] * A.T
    _verify_row_residuals(H, D, X, hc, G, gc, where="ns rows")
    if counters is not None:
        counters.point_grads += spec.data.n
        counters.point_hessians += spec.data.n
        counters.linear_solves += spec.data.n
    return theta[None, :] - D


def _ij_rows(spec, theta, counters=None):
    """All IJ estimates reusing a single full-Hessian factorization."""
    X = spec.data.X
    gc, hc = _pointwise_coefs(spec, theta)
    G, H, cho = _factor_full(spec, theta, gc, hc, where="ij rows")
    A = cho_solve(cho, X.T)
    w = cho_solve(cho, G)
    D = w[None, :] - gc[:, None] * A.T
    _verify_row_residuals(H, D, X, None, G, gc, where="ij rows")
    if counters is not None:
        counters.point_grads += spec.data.n
        counters.point_hessians += spec.data.n
        counters.linear_solves += spec.data.n
    return theta[None, :] - D


def _scaled_prox_rows(H, hc, X, U, lam, tol=_PROX_TOL, max_iter=_PROX_MAX_ITER):
    """Row i gets prox_h^{H - hc_i x_i x_i'}(u_i); all rows iterate together.

    The shared step 1/eigmax(H) is valid for every downdated Hessian because
    removing a PSD rank-one term can only shrink the top eigenvalue.
    """
    evals = np.linalg.eigvalsh(H)
    L = float(evals[-1])
    if L <= 0:
        raise NotPositiveDefiniteError("scaled prox needs H > 0",
                                       min_eig=float(evals[0]), where="scaled_prox rows")
    Z = U.copy()
    resid = np.inf
    for _ in range(max_iter):
        W = Z - U
        HW = W @ H
        HW -= (hc * np.einsum("ij,ij->i", X, W))[:, None] * X
        Z_new = prox_l1(Z - HW / L, lam / L)
        resid = float(np.abs(Z_new - Z).max())
        Z = Z_new
        if resid <= tol:
            return Z
    raise ConvergenceError("batched scaled prox did not converge", residual=resid,
                           where="scaled_prox rows")


def _prox_rows(spec, theta, full_hessian_step, counters=None):
    X = spec.data.X
    gc, hc = _pointwise_coefs(spec, theta)
    G, H, cho = _factor_full(spec, theta, gc, hc, where="prox rows")
    A = cho_solve(cho, X.T)
    w = cho_solve(cho, G)
    if full_hessian_step:
        # IJ: Newton step with the full Hessian of g
        D = w[None, :] - gc[:, None] * A.T
        _verify_row_residuals(H, D, X, None, G, gc, where="prox ij rows")
    else:
        dii = np.einsum("ij,ji->i", X, A)
        denom = 1.0 - hc * dii
        if denom.min() <= 1e-12:
            raise NotPositiveDefiniteError("leave-one-out Hessian lost definiteness",
                                           min_eig=float(denom.min()), where="prox ns rows")
        coef = hc * (X @ w - gc * dii) / denom
        D = w[None, :] - (gc - coef)[:, None] * A.T
        _verify_row_residuals(H, D, X, hc, G, gc, where="prox ns rows")
    U = theta[None, :] - D
    if counters is not None:
        counters.point_grads += spec.data.n
        counters.point_hessians += spec.data.n
        counters.linear_solves += spec.data.n
    return _scaled_prox_rows(H, hc, X, U, spec.prox_reg.lam)


def along_path_estimates(spec: SolverSpec, theta_hat, method: str,
                         counters: EvalCounters | None = None) -> np.ndarray:
    """All n leave-one-out estimates of ``method`` at one iterate.

    method is 'ns', 'ij', or 'baseline'; the proximal variants are selected
    automatically when the objective has an l1 part.
    """
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    if theta_hat.shape != (spec.data.p,):
        raise ShapeError(f"theta_hat must have shape ({spec.data.p},)")
    if method == "baseline":
        return baseline_estimates(spec, theta_hat)
    prox = spec.prox_reg.kind == "l1"
    if method == "ns":
        return _prox_rows(spec, theta_hat, False, counters) if prox \
            else _ns_rows(spec, theta_hat, counters)
    if method == "ij":
        return _prox_rows(spec, theta_hat, True, counters) if prox \
            else _ij_rows(spec, theta_hat, counters)
    raise ShapeError(f"unknown method {method!r}, expected ns, ij, or baseline")
