"""Finite-difference helpers on uniform grids."""

import numpy as np

from .errors import InputError


def d1(u, h):
    """Second-order first derivative; one-sided second-order at the ends."""
    return np.gradient(u, h, edge_order=2)


def d2(u, h):
    """Second-order second derivative; one-sided four-point stencils at the ends."""
    u = np.asarray(u, dtype=float)
    if u.size < 4:
        raise InputError("second derivative needs at least 4 nodes")
    out = np.empty_like(u)
    out[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
    out[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h**2
    out[-1] = (2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) / h**2
    return out


def fornberg_weights(x0, x, order):
    """Weights ``w[k, j]`` so that ``sum_j w[k, j] u(x[j])`` approximates
    ``u^{(k)}(x0)`` for ``k = 0..order`` (Fornberg's recursion)."""
    x = np.asarray(x, dtype=float)
    npts = x.size
    if npts <= order:
        raise InputError(f"{npts} nodes cannot resolve derivative order {order}")
    c = np.zeros((order + 1, npts))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - x0
    for i in range(1, npts):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def trim(arr, k):
    if k <= 0:
        return arr
    return arr[k:-k]
