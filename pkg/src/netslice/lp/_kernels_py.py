"""Pure numpy twins of the compiled simplex kernels.

Same signatures and semantics as ``_speedups``; selected at import time by
:mod:`netslice.lp.kernels` when the extension is unavailable or disabled.
"""

from __future__ import annotations

import numpy as np

COMPILED = False


def reduced_costs(indptr, indices, data, col_ids, y, c, out):
    """out = c - A^T y for the full CSC matrix."""
    contrib = data * y[indices]
    sums = np.bincount(col_ids, weights=contrib, minlength=c.shape[0])
    np.subtract(c, sums, out=out)


def ftran(binv, col_indices, col_values, out):
    """out = Binv @ a_j for a sparse column (indices, values)."""
    if col_indices.shape[0] == 0:
        out[:] = 0.0
        return
    np.dot(binv[:, col_indices], col_values, out=out)


def eta_update(binv, w, r):
    """Rank-one basis-inverse update for a pivot in row r with FTRAN column w."""
    piv = w[r]
    binv[r, :] /= piv
    mult = w.copy()
    mult[r] = 0.0
    binv -= np.outer(mult, binv[r, :])


def ratio_test(w, x_b, lb_b, ub_b, direction, own_range, pivot_tol, bland, basis):
    """Bounded-variable ratio test.

    Returns ``(step, row)`` where ``row`` is the blocking basic row,
    ``-1`` for a bound flip of the entering variable, or ``-2`` when the
    step is unbounded.
    """
    coef = direction * w
    ratios = np.full(w.shape[0], np.inf)
    pos = coef > pivot_tol
    if pos.any():
        ratios[pos] = np.maximum(x_b[pos] - lb_b[pos], 0.0) / coef[pos]
    neg = coef < -pivot_tol
    if neg.any():
        ratios[neg] = np.maximum(ub_b[neg] - x_b[neg], 0.0) / (-coef[neg])
    row_min = ratios.min() if ratios.shape[0] else np.inf
    if own_range <= row_min:
        if np.isinf(own_range):
            return np.inf, -2
        return own_range, -1
    if np.isinf(row_min):
        return np.inf, -2
    tie = ratios <= row_min + 1e-10 * (1.0 + row_min)
    cand = np.flatnonzero(tie)
    if bland:
        r = cand[np.argmin(basis[cand])]
    else:
        r = cand[np.argmax(np.abs(coef[cand]))]
    return max(ratios[r], 0.0), int(r)
