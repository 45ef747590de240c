"""Robust linear regression by iteratively reweighted least squares.

Tukey bisquare weights with a MAD scale estimate on leverage-adjusted
residuals, started from the ordinary least-squares solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegenerateSampleError

BISQUARE_C = 4.685
MAX_ITER = 50
TOL = 1e-8


@dataclass(frozen=True)
class RobustFit:
    coef: np.ndarray
    weights: np.ndarray
    scale: float
    n_iter: int


def bisquare(u: np.ndarray) -> np.ndarray:
    w = (1.0 - u**2) ** 2
    return np.where(np.abs(u) < 1.0, w, 0.0)


def _mad_sigma(r: np.ndarray, p: int) -> float:
    # skip the p-1 smallest |r|: with p parameters they can be fitted exactly
    rs = np.sort(np.abs(r))
    return float(np.median(rs[max(p - 1, 0):]) / 0.6745)


def robust_fit(
    X,
    y,
    c: float = BISQUARE_C,
    max_iter: int = MAX_ITER,
    tol: float = TOL,
    add_intercept: bool = True,
) -> RobustFit:
    """Bisquare IRLS fit of ``y ~ X``.

    Parameters
    ----------
    X : array_like, shape (n,) or (n, p)
        Regressors. An intercept column is prepended when ``add_intercept``.
    y : array_like, shape (n,)
    c : float
        Bisquare tuning constant.
    max_iter, tol : int, float
        Iteration stops once every coefficient changes by less than
        ``tol`` relative to its magnitude.

    Returns
    -------
    RobustFit
        ``coef[0]`` is the intercept when ``add_intercept`` is set.

    Raises
    ------
    ConvergenceError
        No convergence within ``max_iter``; ``last_iterate`` holds the
        final coefficients.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = y.size
    if X.shape[0] != n:
        raise ValueError("X and y lengths differ")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DegenerateSampleError("non-finite regression data")

    # center/scale regressors so Hz-valued columns do not wreck conditioning
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    Z = (X - mu) / sd
    if add_intercept:
        Z = np.column_stack([np.ones(n), Z])
    p = Z.shape[1]
    if n < p:
        raise DegenerateSampleError(f"need at least {p} samples, got {n}")
    if np.linalg.matrix_rank(Z) < p:
        raise DegenerateSampleError("rank-deficient regression design")

    def unscale(b):
        slope = b[-X.shape[1]:] / sd
        if add_intercept:
            return np.concatenate([[b[0] - slope @ mu], slope])
        return slope

    b = np.linalg.lstsq(Z, y, rcond=None)[0]
    Q, _ = np.linalg.qr(Z)
    h = np.minimum(np.sum(Q**2, axis=1), 0.9999)
    adj = 1.0 / np.sqrt(1.0 - h)
    w = np.ones(n)
    yscale = max(float(np.max(np.abs(y))), 1.0)

    for it in range(1, max_iter + 1):
        r = (y - Z @ b) * adj
        s = _mad_sigma(r, p)
        if s <= 1e-12 * yscale:
            # data (all but a few points) lie on the fitted model already
            return RobustFit(unscale(b), w, s, it - 1)
        w = bisquare(r / (c * s))
        sw = np.sqrt(w)
        b_new = np.linalg.lstsq(Z * sw[:, None], y * sw, rcond=None)[0]
        done = np.all(np.abs(b_new - b) <= tol * np.maximum(np.abs(b_new), np.abs(b)))
        b = b_new
        if done:
            return RobustFit(unscale(b), w, s, it)
    raise ConvergenceError(
        f"bisquare IRLS did not converge in {max_iter} iterations",
        last_iterate=unscale(b),
        iterations=max_iter,
    )
