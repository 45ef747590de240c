"""Compiled kernel for greedy backward path elimination.

The kernel works on the triangular factor ``R`` of the damped, augmented
least-squares system ``[[A, b], [lam*I, 0]]``. Deleting a path deletes a
column of ``R``; the resulting Hessenberg block is re-triangularized with
Givens rotations, which also carry the right-hand side along. Gains follow
from one back substitution per step and the residual from the norm of the
rotated right-hand side, so each step costs O(K^2) instead of a fresh
factorization.
"""

from __future__ import annotations

import numba as nb
import numpy as np

_FAST = {"reassoc", "contract", "nsz"}


@nb.njit(cache=True)
def _back_substitute(R, K, g):
    # rhs lives in column K of the compacted factor; np.dot goes to BLAS,
    # which is several times faster than a compiled loop here
    for k in range(K - 1, -1, -1):
        row = R[k]
        g[k] = (row[K] - np.dot(row[k + 1:K], g[k + 1:K])) / row[k]


@nb.njit(cache=True, fastmath=_FAST)
def _delete_column(R, K, p):
    # shift columns p+1..K (rhs included) one place left; rows below p are
    # shifted inside the Givens sweep so the trailing block is touched once
    for r in range(p + 1):
        row = R[r]
        for c in range(p, K):
            row[c] = row[c + 1]
    # row k is already shifted, row k+1 not yet
    buf = np.empty(K)
    for k in range(p, K - 1):
        rk = R[k]
        rk1 = R[k + 1]
        a = rk[k]
        b = rk1[k + 1]
        rr = np.hypot(a, b)
        if rr == 0.0:
            for c in range(k, K):
                rk1[c] = rk1[c + 1]
        else:
            cs = a / rr
            sn = b / rr
            # staging row k+1 lets the rotation loop vectorize
            n = K - k
            for c in range(n):
                buf[c] = rk1[k + 1 + c]
            for c in range(n):
                x = rk[k + c]
                y = buf[c]
                rk[k + c] = cs * x + sn * y
                rk1[k + c] = cs * y - sn * x
        rk1[k] = 0.0


@nb.njit(cache=True)
def _nrmse_db(R, K, g, bnorm2, lam2, M):
    z2 = 0.0
    gg = 0.0
    for k in range(K):
        z2 += R[k, K] * R[k, K]
        gg += g[k] * g[k]
    res2 = bnorm2 - z2 - lam2 * gg
    if res2 <= 0.0:
        return -np.inf
    return 10.0 * np.log10(res2 / M)


@nb.njit(cache=True)
def eliminate(R, lattice_idx, colsum, bnorm2, lam2, M, threshold_db, max_iter):
    """Remove paths while the NRMSE stays below ``threshold_db``.

    Parameters
    ----------
    R : (K+1, K+1) float64, C-contiguous, modified in place
        Upper-triangular factor with the rotated rhs in the last column.
    lattice_idx : (K,) int64
        Lattice index of each column of ``R``, in column order.
    colsum : (N,) float64
        ``sum_m exp(-(a0 + a1 f_m) d_i)`` per lattice index.

    Returns
    -------
    nrmse0_db, removal_order, trace_db, exit_scores, survivors, status
        ``status`` is 0 when the budget broke, 1 when every path was
        removed, 2 when ``max_iter`` was reached.
    """
    K = R.shape[0] - 1
    idx = lattice_idx.copy()
    order = np.empty(K, np.int64)
    trace = np.empty(K)
    exit_scores = np.empty(K)
    g = np.zeros(K)
    _back_substitute(R, K, g)
    nr = _nrmse_db(R, K, g, bnorm2, lam2, M)
    nr0 = nr
    it = 0
    status = 0
    while nr < threshold_db:
        if K == 0:
            status = 1
            break
        if it >= max_iter:
            status = 2
            break
        best = 0
        best_score = np.inf
        for c in range(K):
            s = abs(g[c]) * colsum[idx[c]]
            if s < best_score:
                best_score = s
                best = c
        order[it] = idx[best]
        exit_scores[it] = best_score
        _delete_column(R, K, best)
        for c in range(best, K - 1):
            idx[c] = idx[c + 1]
        K -= 1
        _back_substitute(R, K, g)
        nr = _nrmse_db(R, K, g, bnorm2, lam2, M)
        trace[it] = nr
        it += 1
    return nr0, order[:it].copy(), trace[:it].copy(), exit_scores[:it].copy(), idx[:K].copy(), status
