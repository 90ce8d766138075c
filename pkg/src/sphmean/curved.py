"""Radial operators on hyperbolic and spherical space.

Profiles here are plain angular coefficients ``f_ml(r)`` (no ``r^m``
factor). With ``(S, C, T)`` the space's sine-, cosine- and cotangent-like
functions:

* ``D_m = d^2/dr^2 + (n-1) T d/dr - m(m+n-2) / S^2``
* ``Gamma_k = d/dr + (n+k-2) T``
* ``Q_m = Gamma_1 o ... o Gamma_m`` (``Gamma_m`` acts first)

and ``Q_m D_m = D_0 Q_m``. The Euclidean entry uses ``S = r``, ``T = 1/r``.
"""

import enum

import numpy as np

from . import _fd
from .errors import InputError


class SpaceKind(enum.Enum):
    EUCLIDEAN = "euclidean"
    HYPERBOLIC = "hyperbolic"
    SPHERICAL = "spherical"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InputError(f"unknown space {value!r}") from None

    def sin(self, r):
        if self is SpaceKind.HYPERBOLIC:
            return np.sinh(r)
        if self is SpaceKind.SPHERICAL:
            return np.sin(r)
        return np.asarray(r, dtype=float)

    def cos(self, r):
        if self is SpaceKind.HYPERBOLIC:
            return np.cosh(r)
        if self is SpaceKind.SPHERICAL:
            return np.cos(r)
        return np.ones_like(np.asarray(r, dtype=float))

    def cot(self, r):
        return self.cos(r) / self.sin(r)

    def check_grid(self, radii, tol=1e-8):
        """Reject grids touching ``r = 0`` or, on the sphere, a zero of ``sin``."""
        radii = np.asarray(radii, dtype=float)
        if np.any(radii <= tol):
            raise InputError(f"{self.value} operators are singular at r = 0; grid must start above it")
        if self is SpaceKind.SPHERICAL and np.any(np.abs(np.sin(radii)) <= tol):
            raise InputError("spherical operators are singular where sin r = 0")


def _prepare(space, profile, min_nodes):
    space = SpaceKind.parse(space)
    space.check_grid(profile.radii)
    if profile.radii.size < min_nodes:
        raise InputError(f"need at least {min_nodes} nodes")
    return space


def apply_D(space, n, m, profile):
    """``D_m u`` by centered second-order differences (one-sided at the ends)."""
    space = _prepare(space, profile, 4)
    r, u, h = profile.radii, profile.values, profile.h
    out = _fd.d2(u, h) + (n - 1) * space.cot(r) * _fd.d1(u, h)
    if m:
        out = out - m * (m + n - 2) / space.sin(r) ** 2 * u
    return profile.with_values(out)


def apply_gamma(space, n, k, profile):
    space = _prepare(space, profile, 3)
    r, u, h = profile.radii, profile.values, profile.h
    return profile.with_values(_fd.d1(u, h) + (n + k - 2) * space.cot(r) * u)


def apply_curved_Q(space, n, m, profile):
    """``Q_m u`` with ``Gamma_m`` applied first and ``Gamma_1`` last."""
    if m < 0:
        raise InputError("m must be nonnegative")
    space = _prepare(space, profile, 3 if m else 1)
    for k in range(m, 0, -1):
        profile = apply_gamma(space, n, k, profile)
    return profile


def curved_intertwine_residual(space, n, m, test, trim=None):
    """Max of ``|Q_m D_m u - D_0 Q_m u|`` after dropping ``trim`` nodes per end (default ``2m+2``)."""
    trim = 2 * m + 2 if trim is None else trim
    if test.radii.size - 2 * trim < 3:
        raise InputError("too few interior nodes after trimming")
    if m == 0:
        return 0.0
    lhs = apply_curved_Q(space, n, m, apply_D(space, n, m, test)).values
    rhs = apply_D(space, n, 0, apply_curved_Q(space, n, m, test)).values
    return float(np.max(np.abs(_fd.trim(lhs - rhs, trim))))
