"""Forward spherical mean transform by sphere quadrature.

``R(f)(x, t)`` is approximated by the weighted mean of ``f`` over the
angular nodes of :class:`~sphmean.harmonics.AngularSampleSet` mapped onto
``S(x, t)``. Everything here is vectorized over (center, radius) pairs.
"""

import numpy as np

from .data_model import SphericalMeanDataset
from .errors import GeometryError, InputError
from .harmonics import AngularSampleSet, angular_project

_CHUNK_POINTS = 1 << 21


def spherical_means(field, centers, radii, quad_order):
    """Vectorized ``R(f)`` for paired ``centers`` of shape ``(k, n)`` and ``radii`` ``(k,)``."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if centers.shape[0] != radii.size:
        raise InputError("centers and radii must pair up")
    if np.any(radii < 0):
        raise InputError("sphere radius must be nonnegative")
    if quad_order < 8:
        raise InputError(f"quad_order must be >= 8, got {quad_order}")
    n = centers.shape[1]
    ang = AngularSampleSet.build(n, quad_order)
    w = ang.weights / ang.weights.sum()
    out = np.empty(radii.size)
    step = max(1, _CHUNK_POINTS // len(ang))
    for s in range(0, radii.size, step):
        e = min(s + step, radii.size)
        pts = centers[s:e, None, :] + radii[s:e, None, None] * ang.nodes[None, :, :]
        vals = np.asarray(field(pts.reshape(-1, n)), dtype=float).reshape(e - s, -1)
        # row-wise reduction keeps each mean independent of the batch it sits in
        out[s:e] = np.sum(vals * w, axis=1)
    zero = radii == 0
    if np.any(zero):
        out[zero] = field(centers[zero])
    return out


def spherical_mean(field, center, radius, quad_order=256):
    """Mean of ``field`` over the sphere ``S(center, radius)``; ``radius = 0`` gives ``field(center)``."""
    if radius < 0:
        raise InputError(f"sphere radius must be nonnegative, got {radius}")
    return float(spherical_means(field, np.asarray(center, dtype=float)[None, :], [radius], quad_order)[0])


def region_A_contains(geometry, center, radius):
    """True iff ``S(x, t)`` lies in ``Ann(a, A)`` and encloses ``S(0, a)``."""
    res = geometry.contains(center, radius)
    return bool(res) if np.ndim(res) == 0 else res


# --------------------------------------------------------------- sampling


def pair_grid(center_grid, radius_grid):
    """Cartesian product of centers ``(kc, n)`` and radii ``(kt,)`` as paired arrays."""
    c = np.atleast_2d(np.asarray(center_grid, dtype=float))
    t = np.asarray(radius_grid, dtype=float).ravel()
    return np.repeat(c, t.size, axis=0), np.tile(t, c.shape[0])


def _random_directions(n, count, rng):
    d = rng.standard_normal((count, n))
    return d / np.linalg.norm(d, axis=1)[:, None]


def random_admissible(geometry, n, count, rng):
    """``count`` pairs drawn inside region A (center radius uniform on its range)."""
    a, A = geometry.a, geometry.A
    half = 0.5 * (A - a)
    rho = rng.uniform(0.0, 0.98 * half, count)
    lo, hi = a + rho, A - rho
    margin = 1e-3 * (hi - lo)
    t = rng.uniform(lo + margin, hi - margin)
    centers = rho[:, None] * _random_directions(n, count, rng)
    return centers, t


def random_nonenclosing(geometry, n, count, rng):
    """Spheres inside ``Ann(a, A)`` that do not enclose the origin."""
    a, A = geometry.a, geometry.A
    c = rng.uniform(a + 0.2 * (A - a), A - 0.2 * (A - a), count)
    cap = np.minimum(c - a, A - c)
    t = rng.uniform(0.1, 0.9, count) * cap
    centers = c[:, None] * _random_directions(n, count, rng)
    return centers, t


def trace_radii(geometry, s, extrap_radii, rho_max, fraction=0.9):
    """Center radii used at sphere radius ``s`` for trace extraction (empty if none fit)."""
    cap = float(geometry.center_cap(s))
    if cap <= 0:
        return np.empty(0)
    top = min(fraction * cap, rho_max)
    return top * np.arange(1, extrap_radii + 1) / extrap_radii


def trace_sampling(geometry, n, s_grid, extrap_radii, angular_points, rho_max, include_origin=True):
    """Sampling plan for :func:`sphmean.reconstruct.extract_g0`.

    For each admissible ``s``: the origin (if requested) and ``extrap_radii``
    rings of centers at radii ``rho_k = min(0.9 cap, rho_max) k / K`` where
    ``cap = min(s - a, A - s)``. Ring directions are the nodes of
    ``AngularSampleSet.build(n, angular_points)``.
    """
    ring = AngularSampleSet.build(n, angular_points).nodes
    centers, radii = [], []
    for s in np.asarray(s_grid, dtype=float):
        rhos = trace_radii(geometry, s, extrap_radii, rho_max)
        if rhos.size == 0:
            continue
        if include_origin:
            centers.append(np.zeros((1, n)))
            radii.append([s])
        for rho in rhos:
            centers.append(rho * ring)
            radii.append(np.full(len(ring), s))
    if not centers:
        return np.empty((0, n)), np.empty(0)
    return np.vstack(centers), np.concatenate([np.asarray(r, dtype=float) for r in radii])


# ---------------------------------------------------------------- datasets


def generate_dataset(field, geometry, centers, radii, quad_order=256):
    """Spherical means at every requested pair that passes the region-A test.

    Failing pairs are dropped and counted in ``dataset.dropped``.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.asarray(radii, dtype=float).ravel()
    n = field.n
    if centers.size and centers.shape[1] != n:
        raise InputError(f"centers are {centers.shape[1]}-dimensional, field is {n}-dimensional")
    keep = geometry.contains(centers, radii) if radii.size else np.zeros(0, bool)
    if not np.any(keep):
        raise GeometryError(
            f"no admissible (x, t) pairs: need |x| + {geometry.a} < t and |x| + t < {geometry.A}"
        )
    c, t = centers[keep], radii[keep]
    vals = spherical_means(field, c, t, quad_order)
    return SphericalMeanDataset(geometry, n, c, t, vals, dropped=int(radii.size - keep.sum()))


# ---------------------------------------------------------- verification


def epd_residual(field, centers, radii, h, quad_order=256):
    """Finite-difference residual of ``G_tt + (n-1)/t G_t - Lap_x G`` for ``G = R(f)``.

    Returns a dict with ``max``, ``mean`` and the per-probe ``values``.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if np.any(radii <= h):
        raise InputError("every probe needs t > h (the EPD equation is singular at t = 0)")
    k, n = centers.shape
    offsets = [(np.zeros(n), 0.0), (np.zeros(n), h), (np.zeros(n), -h)]
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        offsets += [(e, 0.0), (-e, 0.0)]
    cs = np.vstack([centers + dx for dx, _ in offsets])
    ts = np.concatenate([radii + dt for _, dt in offsets])
    G = spherical_means(field, cs, ts, quad_order).reshape(len(offsets), k)
    g0, gp, gm = G[0], G[1], G[2]
    g_tt = (gp - 2.0 * g0 + gm) / h**2
    g_t = (gp - gm) / (2.0 * h)
    lap = sum(G[3 + 2 * j] - 2.0 * g0 + G[4 + 2 * j] for j in range(n)) / h**2
    res = g_tt + (n - 1) / radii * g_t - lap
    absr = np.abs(res)
    return {"max": float(absr.max()), "mean": float(absr.mean()), "values": res}


def mean_mode_coefficient(field, mode, center_radius, t, angular_order, quad_order=256):
    """``g_ml(rho, t)``: harmonic coefficient of ``R(f)(rho theta, t)`` divided by ``rho^m``."""
    if center_radius <= 0:
        raise InputError("center radius must be positive")
    ang = AngularSampleSet.build(mode.n, angular_order)
    vals = spherical_means(field, center_radius * ang.nodes, np.full(len(ang), t), quad_order)
    return angular_project(vals, mode, ang) / center_radius**mode.m
