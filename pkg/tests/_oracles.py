"""Independent reference implementations used only by the tests.

Everything here trades speed for obviousness: per-point Python loops, dense
matrices, brute-force lattice searches.  The library must agree with these,
not the other way around.
"""

import math

import numpy as np


# ---------------------------------------------------------- derivatives ----

def fd_grad(f, theta, h=1e-5):
    """Central finite-difference gradient of a scalar function."""
    theta = np.asarray(theta, dtype=np.float64)
    g = np.zeros_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        g[j] = (f(theta + e) - f(theta - e)) / (2.0 * h)
    return g


def fd_jac(vec_f, theta, h=1e-4):
    """Central finite-difference Jacobian of a vector function."""
    theta = np.asarray(theta, dtype=np.float64)
    cols = []
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        cols.append((vec_f(theta + e) - vec_f(theta - e)) / (2.0 * h))
    return np.stack(cols, axis=1)


# ------------------------------------------------- scalar loss formulas ----

def logistic_loss_scalar(x, y, theta):
    m = float(np.dot(x, theta))
    # plain math formulation; fine for the moderate margins used in tests
    return -y * m + math.log(1.0 + math.exp(m))


def squared_loss_scalar(x, y, theta):
    return 0.5 * (float(np.dot(x, theta)) - y) ** 2


def point_grad(kind, x, y, theta):
    m = float(np.dot(x, theta))
    if kind == "logistic":
        coef = 1.0 / (1.0 + math.exp(-m)) - y
    else:
        coef = m - y
    return coef * np.asarray(x, dtype=np.float64)


def point_hess(kind, x, y, theta):
    m = float(np.dot(x, theta))
    if kind == "logistic":
        s = 1.0 / (1.0 + math.exp(-m))
        coef = s * (1.0 - s)
    else:
        coef = 1.0
    x = np.asarray(x, dtype=np.float64)
    return coef * np.outer(x, x)


def reg_grad(kind, lam, theta):
    if kind == "ridge":
        return 2.0 * lam * np.asarray(theta, dtype=np.float64)
    return np.zeros_like(np.asarray(theta, dtype=np.float64))


def reg_hess(kind, lam, p):
    if kind == "ridge":
        return 2.0 * lam * np.eye(p)
    return np.zeros((p, p))


def soft_threshold(v, thr):
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)


# --------------------------------------------------- naive LOO trackers ----

def naive_loo_run(spec, T):
    """Exact leave-one-out rows by a literal per-point loop."""
    X, y = spec.data.X, spec.data.y
    n, p = X.shape
    kind = spec.loss.kind
    sreg, slam = spec.smooth_reg.kind, spec.smooth_reg.lam
    plam = spec.prox_reg.lam if spec.prox_reg.kind == "l1" else None
    rows = np.tile(np.asarray(spec.theta0, dtype=np.float64), (n, 1))
    out = [rows.copy()]
    for t in range(1, T + 1):
        S = list(spec.batches.batch_at(t))
        alpha = spec.steps.step_at(t)
        new = np.empty_like(rows)
        for i in range(n):
            g = reg_grad(sreg, slam, rows[i])
            for j in S:
                if j == i:
                    continue
                g = g + point_grad(kind, X[j], y[j], rows[i])
            step = rows[i] - alpha * g
            new[i] = soft_threshold(step, alpha * plam) if plam is not None else step
        rows = new
        out.append(rows.copy())
    return out


def naive_iacv_run(spec, T):
    """Second-order tracked rows by a literal per-point loop.

    The full-data iterate is recomputed here as well, from its own loop, so
    this oracle shares nothing with the library's engines.
    """
    X, y = spec.data.X, spec.data.y
    n, p = X.shape
    kind = spec.loss.kind
    sreg, slam = spec.smooth_reg.kind, spec.smooth_reg.lam
    plam = spec.prox_reg.lam if spec.prox_reg.kind == "l1" else None
    theta_hat = np.asarray(spec.theta0, dtype=np.float64).copy()
    rows = np.tile(theta_hat, (n, 1))
    out = [rows.copy()]
    for t in range(1, T + 1):
        S = list(spec.batches.batch_at(t))
        alpha = spec.steps.step_at(t)
        new = np.empty_like(rows)
        for i in range(n):
            g = reg_grad(sreg, slam, theta_hat)
            H = reg_hess(sreg, slam, p)
            for j in S:
                if j == i:
                    continue
                g = g + point_grad(kind, X[j], y[j], theta_hat)
                H = H + point_hess(kind, X[j], y[j], theta_hat)
            step = rows[i] - alpha * (g + H @ (rows[i] - theta_hat))
            new[i] = soft_threshold(step, alpha * plam) if plam is not None else step
        # full iterate advances after the trackers consumed it
        g_full = reg_grad(sreg, slam, theta_hat)
        for j in S:
            g_full = g_full + point_grad(kind, X[j], y[j], theta_hat)
        theta_hat = theta_hat - alpha * g_full
        if plam is not None:
            theta_hat = soft_threshold(theta_hat, alpha * plam)
        rows = new
        out.append(rows.copy())
    return out


# ------------------------------------------------------ ridge closed form --

def ridge_loo_solution(X, y, lam, leave_out):
    """argmin of sum_{j != i} 0.5*(y_j - x_j.theta)^2 + lam*||theta||^2."""
    keep = [j for j in range(X.shape[0]) if j != leave_out]
    Xs, ys = X[keep], y[keep]
    H = Xs.T @ Xs + 2.0 * lam * np.eye(X.shape[1])
    return np.linalg.solve(H, Xs.T @ ys)


# ------------------------------------------------------- lattice search ----

def grid_prox(H, x, lam, final_res=1e-3):
    """argmin over a lattice of 0.5*(x-z)'H(x-z) + lam*||z||_1.

    Coarse-to-fine product lattices; each stage's box provably contains the
    next optimum because the objective is strongly convex (curvature between
    eigmin(H) and eigmax(H)).  The final lattice is aligned to exact
    multiples of ``final_res`` so zero is always a candidate coordinate.
    """
    H = np.asarray(H, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    p = x.size
    evals = np.linalg.eigvalsh(H)
    lmin, lmax = float(evals[0]), float(evals[-1])

    def objective(P):
        D = P - x
        return 0.5 * np.einsum("ij,jk,ik->i", D, H, D) + lam * np.abs(P).sum(axis=1)

    def argmin_on(center, half, res):
        offs = np.arange(-math.ceil(half / res), math.ceil(half / res) + 1) * res
        axes = [np.round(center[j] / res) * res + offs for j in range(p)]
        mesh = np.meshgrid(*axes, indexing="ij")
        P = np.stack([m.ravel() for m in mesh], axis=1)
        return P[int(np.argmin(objective(P)))]

    def localization(res):
        # some lattice point sits within res/2 of the optimum per coordinate,
        # so the lattice argmin's objective excess is at most the quadratic
        # spread plus the worst-case l1 excess; strong convexity turns that
        # into a distance
        gap = 0.5 * lmax * p * (res / 2.0) ** 2 + lam * p * res
        return math.sqrt(2.0 * gap / lmin) * 1.05 + res

    # any z beats z=x only inside this ball around x
    radius = math.sqrt(2.0 * lam * np.abs(x).sum() / lmin) + final_res
    res = max(radius / 10.0, final_res)
    best = argmin_on(x, radius + res, res)
    while res > final_res:
        next_res = max(res / 5.0, final_res)
        best = argmin_on(best, localization(res) + 2.0 * next_res, next_res)
        res = next_res
    return best
