"""Least squares over the unit simplex.

Solves ``min_w (1/M) ||X w - y||^2`` subject to ``w >= 0, sum(w) = 1`` with an
accelerated projected gradient method (monotone variant with restarts). Once
the iterate settles, an active-set phase solves the equality-constrained
problem on the current support exactly, which yields a sharp KKT certificate
instead of a slowly converging first-order tail.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 50_000


@dataclass
class SolveReport:
    weights: np.ndarray
    objective: float
    iterations: int
    kkt_residual: float
    converged: bool
    trace: list = field(default_factory=list, repr=False)


def project_to_simplex(v) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort and threshold)."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("cannot project an empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite entries")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    w = np.maximum(v - theta, 0.0)
    # renormalise away the rounding left by the threshold
    return w / w.sum()


def _validate(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise ValueError("X must be a 2-D array")
    if X.shape[0] != y.size:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.size} entries")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError("X must have at least one row and one column")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite entries in X or y")
    return X, y


def _gradient(X, y, w):
    r = X @ w - y
    return (2.0 / y.size) * (X.T @ r)


def _kkt(g, w):
    active = w > 0
    mu = g[active].min()
    res = float(g[active].max() - mu)
    if not active.all():
        res = max(res, float(mu - g[~active].min()))
    return max(res, 0.0)


def kkt_residual(X, y, w) -> float:
    """Violation of the simplex KKT conditions at ``w`` (0 iff optimal).

    With ``g`` the objective gradient and ``mu`` the smallest gradient entry on
    the support, optimality means ``g_j = mu`` on the support and
    ``g_j >= mu`` off it; the largest deviation is returned.
    """
    X, y = _validate(X, y)
    w = np.asarray(w, dtype=float).ravel()
    if w.size != X.shape[1]:
        raise ValueError(f"w has {w.size} entries, X has {X.shape[1]} columns")
    return _kkt(_gradient(X, y, w), w)


def objective(X, y, w) -> float:
    r = np.asarray(X, dtype=float) @ np.asarray(w, dtype=float) - np.asarray(y, dtype=float)
    return float(np.mean(r * r))


def _tolerance_scale(A):
    # gradient entries scale with the squared column magnitude
    return max(1.0, float(np.mean(np.diag(A))))


def _active_set(X, y, A, b, w0, tol, max_steps):
    """Primal active-set iterations warm-started at a feasible ``w0``."""
    J = w0.size
    w = w0.copy()
    S = w > 0
    for _ in range(max_steps):
        idx = np.flatnonzero(S)
        k = idx.size
        K = np.zeros((k + 1, k + 1))
        K[:k, :k] = 2.0 * A[np.ix_(idx, idx)]
        K[:k, k] = 1.0
        K[k, :k] = 1.0
        rhs = np.append(2.0 * b[idx], 1.0)
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        v = sol[:k]
        if np.all(v >= 0):
            w = np.zeros(J)
            w[idx] = v
            if not S.all():
                g = _gradient(X, y, w)
                mu = g[idx].min()
                gap = g - mu
                gap[idx] = np.inf
                j = int(np.argmin(gap))
                if gap[j] < -tol:
                    S[j] = True
                    continue
            return w
        p = v - w[idx]
        neg = p < 0
        ratios = w[idx][neg] / -p[neg]
        alpha = min(1.0, float(ratios.min()))
        w_new = w[idx] + alpha * p
        blocking = idx[neg][ratios <= alpha]
        w = np.zeros(J)
        w[idx] = np.maximum(w_new, 0.0)
        w[blocking] = 0.0
        S = w > 0
        if not S.any():
            return None
        w /= w.sum()
    return None


def solve_simplex_ls(X, y, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> SolveReport:
    """Minimise the mean squared residual ``(1/M)||Xw - y||^2`` over the simplex.

    Parameters
    ----------
    X : array, shape (M, J)
    y : array, shape (M,)
    tol : float
        KKT residual target. It is applied relative to the mean squared
        column magnitude of ``X`` when that exceeds one.
    max_iter : int
        Cap on projected-gradient iterations. If it is reached without a
        certificate the best iterate is returned with ``converged=False``.

    Returns
    -------
    SolveReport
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    X, y = _validate(X, y)
    M, J = X.shape
    if J == 1:
        w = np.ones(1)
        f = objective(X, y, w)
        return SolveReport(w, f, 0, 0.0, True, [f])

    A = X.T @ X / M
    b = X.T @ y / M
    c = float(y @ y) / M
    tol_eff = tol * _tolerance_scale(A)

    def f_of(w):
        return float(w @ A @ w - 2.0 * b @ w + c)

    L = 2.0 * float(np.linalg.eigvalsh(A)[-1])
    w = np.full(J, 1.0 / J)
    if L <= 0:
        # X is identically zero: every feasible point is optimal
        f = objective(X, y, w)
        return SolveReport(w, f, 0, 0.0, True, [f])
    step = 1.0 / (L * (1.0 + 1e-12))

    f = f_of(w)
    trace = [f]
    z = w
    t = 1.0
    next_polish = 10
    best_kkt = np.inf
    it = 0
    while it < max_iter:
        it += 1
        w_new = project_to_simplex(z - step * 2.0 * (A @ z - b))
        f_new = f_of(w_new)
        if f_new > f:
            # momentum overshoot: restart from the last accepted point
            t = 1.0
            w_new = project_to_simplex(w - step * 2.0 * (A @ w - b))
            f_new = f_of(w_new)
            if f_new > f:
                w_new, f_new = w, f
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = w_new + ((t - 1.0) / t_next) * (w_new - w)
        w, f, t = w_new, f_new, t_next
        trace.append(f)

        if it == next_polish or it == max_iter:
            next_polish *= 2
            res = _kkt(_gradient(X, y, w), w)
            best_kkt = min(best_kkt, res)
            if res <= tol_eff:
                break
            cand = _active_set(X, y, A, b, w, tol_eff, 4 * J + 20)
            if cand is not None:
                f_cand = f_of(cand)
                res_cand = _kkt(_gradient(X, y, cand), cand)
                if f_cand <= f + 1e-12 * max(abs(f), 1.0) and res_cand <= tol_eff:
                    w = cand
                    trace.append(min(f_cand, f))
                    break

    res = _kkt(_gradient(X, y, w), w)
    return SolveReport(
        weights=w,
        objective=objective(X, y, w),
        iterations=it,
        kkt_residual=res,
        converged=res <= tol_eff,
        trace=trace,
    )
