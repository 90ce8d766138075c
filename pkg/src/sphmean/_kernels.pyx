# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled leapfrog kernel for the EPD mode equation.

Same contract as ``sphmean._kernels_py.leapfrog``.
"""

from libc.math cimport isfinite


def leapfrog(double[:, ::1] g, const double[::1] lower, const double[::1] diag,
             const double[::1] upper, double nm1):
    cdef Py_ssize_t nt = g.shape[0]
    cdef Py_ssize_t nr = g.shape[1]
    cdef Py_ssize_t j, i
    cdef double beta, inv, damp, lap, v
    cdef bint bad
    for j in range(1, nt - 1):
        beta = nm1 / (2.0 * j)
        inv = 1.0 / (1.0 + beta)
        damp = 1.0 - beta
        bad = False
        lap = diag[0] * g[j, 0] + upper[0] * g[j, 1]
        v = (2.0 * g[j, 0] - damp * g[j - 1, 0] + lap) * inv
        g[j + 1, 0] = v
        if not isfinite(v):
            bad = True
        for i in range(1, nr - 1):
            lap = lower[i] * g[j, i - 1] + diag[i] * g[j, i] + upper[i] * g[j, i + 1]
            v = (2.0 * g[j, i] - damp * g[j - 1, i] + lap) * inv
            g[j + 1, i] = v
            if not isfinite(v):
                bad = True
        g[j + 1, nr - 1] = g[j + 1, nr - 2]
        if bad:
            return j + 1
    return -1
