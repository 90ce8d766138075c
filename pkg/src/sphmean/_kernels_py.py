"""Numpy fallback for the leapfrog kernel."""

import numpy as np


def leapfrog(g, lower, diag, upper, nm1):
    """Advance ``g`` in place from rows 0 and 1 to the last row.

    ``g[j + 1] = (2 g[j] - (1 - b_j) g[j - 1] + L g[j]) / (1 + b_j)`` with
    ``b_j = nm1 / (2 j)`` and ``L`` the tridiagonal operator (already scaled
    by ``dt**2``). The last column copies its neighbour. Returns the first
    row holding a non-finite value, or -1.
    """
    # blow-up is reported through the return value, not floating-point warnings
    with np.errstate(over="ignore", invalid="ignore"):
        return _advance(g, lower, diag, upper, nm1)


def _advance(g, lower, diag, upper, nm1):
    nt = g.shape[0]
    lo, di, up = lower[1:-1], diag[1:-1], upper[1:-1]
    for j in range(1, nt - 1):
        beta = nm1 / (2.0 * j)
        cur, prev, nxt = g[j], g[j - 1], g[j + 1]
        lap0 = diag[0] * cur[0] + upper[0] * cur[1]
        nxt[0] = (2.0 * cur[0] - (1.0 - beta) * prev[0] + lap0) / (1.0 + beta)
        lap = lo * cur[:-2] + di * cur[1:-1] + up * cur[2:]
        nxt[1:-1] = (2.0 * cur[1:-1] - (1.0 - beta) * prev[1:-1] + lap) / (1.0 + beta)
        nxt[-1] = nxt[-2]
        if not np.isfinite(nxt).all():
            return j + 1
    return -1
