"""Real spherical harmonics on S^1 and S^2, angular quadrature, and the
solid-harmonic decomposition ``f(x) = sum f_ml(|x|) |x|^m Y^m_l(x/|x|)``.

Basis conventions (all orthonormal for the surface measure):

* ``n = 2``: ``Y^0_1 = 1/sqrt(2 pi)``; for ``m >= 1``, ``l = 1`` is
  ``cos(m phi)/sqrt(pi)`` and ``l = 2`` is ``sin(m phi)/sqrt(pi)``.
* ``n = 3``: real harmonics ordered by azimuthal index ``mu = -m..m``,
  ``l = mu + m + 1``; ``mu < 0`` uses the sine part, ``mu > 0`` the cosine
  part, each scaled by ``sqrt(2)`` with the Condon-Shortley sign removed,
  so ``r Y^1_{l}`` is proportional to ``(y, z, x)`` for ``l = 1, 2, 3``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import sph_harm_y

from .errors import InputError
from .profile import RadialProfile

SUPPORTED_DIMENSIONS = (2, 3)
_UNIT_TOL = 1e-10


def _check_dimension(n):
    if n not in SUPPORTED_DIMENSIONS:
        raise InputError(f"unsupported dimension n={n}; only 2 and 3 are implemented")


def mode_count(n, m):
    """Number ``l_m`` of independent degree-``m`` harmonics on S^{n-1}."""
    _check_dimension(n)
    if m < 0:
        raise InputError(f"degree must be nonnegative, got {m}")
    if m == 0:
        return 1
    return 2 if n == 2 else 2 * m + 1


@dataclass(frozen=True, order=True)
class ModeIndex:
    n: int
    m: int
    l: int

    def __post_init__(self):
        lm = mode_count(self.n, self.m)
        if not 1 <= self.l <= lm:
            raise InputError(f"l={self.l} outside 1..{lm} for n={self.n}, m={self.m}")

    def __str__(self):
        return f"n{self.n}_m{self.m}_l{self.l}"


def modes(n, M_max):
    """All mode indices with degree ``<= M_max``, degree-major."""
    return [ModeIndex(n, m, l) for m in range(M_max + 1) for l in range(1, mode_count(n, m) + 1)]


@dataclass(frozen=True, eq=False)
class AngularSampleSet:
    """Quadrature nodes on the unit sphere S^{n-1}.

    ``order`` is the node count for ``n = 2`` (equispaced trapezoid) and the
    number of Gauss-Legendre polar nodes for ``n = 3`` (with ``2 * order``
    equispaced azimuths).
    """

    n: int
    order: int
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def build(cls, n, order):
        return _build_angular(n, int(order))

    @property
    def max_degree(self):
        """Largest degree ``m`` that ``angular_project`` resolves."""
        if self.n == 2:
            return (self.order - 2) // 2
        return self.order - 1

    def __len__(self):
        return self.weights.size


@lru_cache(maxsize=64)
def _build_angular(n, order):
    _check_dimension(n)
    if order < 1:
        raise InputError("angular order must be positive")
    if n == 2:
        phi = 2.0 * np.pi * np.arange(order) / order
        nodes = np.column_stack([np.cos(phi), np.sin(phi)])
        weights = np.full(order, 2.0 * np.pi / order)
    else:
        z, wz = np.polynomial.legendre.leggauss(order)
        naz = 2 * order
        phi = 2.0 * np.pi * np.arange(naz) / naz
        s = np.sqrt(1.0 - z**2)
        nodes = np.column_stack(
            [np.outer(s, np.cos(phi)).ravel(), np.outer(s, np.sin(phi)).ravel(), np.repeat(z, naz)]
        )
        nodes /= np.linalg.norm(nodes, axis=1)[:, None]
        weights = np.repeat(wz, naz) * (2.0 * np.pi / naz)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return AngularSampleSet(n, order, nodes, weights)


def _angles(directions):
    d = np.asarray(directions, dtype=float)
    norms = np.linalg.norm(d, axis=-1)
    if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
        raise InputError("directions must be unit vectors")
    return d


def _harmonic_values(n, m, l, d):
    if n == 2:
        phi = np.arctan2(d[..., 1], d[..., 0])
        if m == 0:
            return np.full(d.shape[:-1], 1.0 / np.sqrt(2.0 * np.pi))
        trig = np.cos if l == 1 else np.sin
        return trig(m * phi) / np.sqrt(np.pi)
    theta = np.arccos(np.clip(d[..., 2], -1.0, 1.0))
    phi = np.arctan2(d[..., 1], d[..., 0])
    mu = l - m - 1
    if mu == 0:
        return np.real(sph_harm_y(m, 0, theta, phi))
    y = sph_harm_y(m, abs(mu), theta, phi)
    sign = (-1.0) ** abs(mu)
    part = np.imag(y) if mu < 0 else np.real(y)
    return np.sqrt(2.0) * sign * part


def eval_harmonic(mode, direction):
    """Value of the real orthonormal harmonic ``Y^m_l`` at unit direction(s).

    Accepts a single direction of shape ``(n,)`` or a stack ``(..., n)``.
    """
    d = _angles(direction)
    if d.shape[-1] != mode.n:
        raise InputError(f"direction has {d.shape[-1]} components, expected {mode.n}")
    out = _harmonic_values(mode.n, mode.m, mode.l, d)
    return float(out) if np.ndim(out) == 0 else out


def angular_project(values, mode, angular):
    """Weighted quadrature of ``h(theta) Y^m_l(theta)`` over the sample set."""
    if angular.n != mode.n:
        raise InputError("sample set dimension does not match mode")
    if mode.m > angular.max_degree:
        raise InputError(
            f"sample set of order {angular.order} cannot resolve degree {mode.m} "
            f"(max {angular.max_degree})"
        )
    values = np.asarray(values, dtype=float)
    y = _harmonic_values(mode.n, mode.m, mode.l, angular.nodes)
    return values @ (angular.weights * y)


def decompose(field, radii, M_max, angular):
    """Profiles ``f_ml`` on ``radii`` for every mode of degree ``<= M_max``.

    ``field`` is any callable mapping points of shape ``(k, n)`` to values.
    Returns a dict keyed by :class:`ModeIndex`.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise InputError("decompose needs strictly positive radii (r^m normalization)")
    if M_max < 0:
        raise InputError("M_max must be nonnegative")
    if M_max > angular.max_degree:
        raise InputError(f"angular order {angular.order} cannot resolve degree {M_max}")
    n = angular.n
    pts = radii[:, None, None] * angular.nodes[None, :, :]
    samples = np.asarray(field(pts.reshape(-1, n)), dtype=float).reshape(radii.size, -1)
    out = {}
    for mode in modes(n, M_max):
        y = _harmonic_values(n, mode.m, mode.l, angular.nodes)
        proj = samples @ (angular.weights * y)
        out[mode] = RadialProfile(mode, radii, proj / radii**mode.m)
    return out


class HarmonicExpansion:
    """Callable field ``sum f_ml(|x|) |x|^m Y^m_l(x/|x|)`` from profiles.

    Profiles are cubic-spline interpolated and must share a radial range.
    An empty expansion evaluates to zero everywhere.
    """

    def __init__(self, profiles, n=None):
        self.profiles = dict(profiles)
        ns = {mode.n for mode in self.profiles}
        if len(ns) > 1:
            raise InputError("profiles mix dimensions")
        self.n = ns.pop() if ns else n
        if self.profiles:
            los = {float(p.radii[0]) for p in self.profiles.values()}
            his = {float(p.radii[-1]) for p in self.profiles.values()}
            self.r_min, self.r_max = max(los), min(his)
        else:
            self.r_min, self.r_max = 0.0, np.inf

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        out = np.zeros(pts.shape[0])
        if not self.profiles:
            return float(out[0]) if single else out
        r = np.linalg.norm(pts, axis=1)
        slack = 1e-12 * max(1.0, self.r_max)
        if np.any(r < self.r_min - slack) or np.any(r > self.r_max + slack):
            raise InputError(f"point radius outside profile range [{self.r_min}, {self.r_max}]")
        d = np.zeros_like(pts)
        d[:, 0] = 1.0
        nz = r > 0
        d[nz] = pts[nz] / r[nz, None]
        for mode, prof in self.profiles.items():
            out += prof(r) * r**mode.m * _harmonic_values(mode.n, mode.m, mode.l, d)
        return float(out[0]) if single else out


def synthesize(profiles, point):
    """Evaluate the truncated expansion at ``point`` (or a stack of points)."""
    return HarmonicExpansion(profiles)(point)
