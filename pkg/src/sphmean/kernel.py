"""Null space of the spherical mean transform on region A of an annulus.

Per mode ``(m, l)`` with ``m >= 1`` the kernel is spanned by the radial
coefficients ``r^{-n-2i}``, ``i = 0..m-1`` (total radial factor
``r^{m-n-2i}`` once the solid-harmonic ``r^m`` is included). Degree 0 has no
kernel.
"""

from dataclasses import dataclass

import numpy as np

from .data_model import phantom
from .errors import InputError
from .harmonics import ModeIndex
from .profile import RadialProfile
from .transform import generate_dataset

MEMBERSHIP_TOL = 1e-6


@dataclass(frozen=True)
class KernelElement:
    mode: ModeIndex
    i: int
    coeff: float = 1.0

    def __post_init__(self):
        if self.mode.m < 1:
            raise InputError("no kernel at degree 0")
        if not 0 <= self.i < self.mode.m:
            raise InputError(f"power index i={self.i} outside 0..{self.mode.m - 1}")

    @property
    def exponent(self):
        return -self.mode.n - 2 * self.i

    def field(self):
        m = self.mode
        return phantom("kernel-element", {"m": m.m, "l": m.l, "i": self.i, "c": self.coeff}, n=m.n)


def kernel_basis_profile(n, mode, i, radii):
    """Samples of ``r^{-n-2i}`` for the given mode."""
    if mode.m < 1:
        raise InputError("the kernel is trivial at degree 0")
    if not 0 <= i < mode.m:
        raise InputError(f"need 0 <= i < m, got i={i}, m={mode.m}")
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise InputError("kernel profiles are singular at r = 0")
    return RadialProfile(mode, radii, radii ** (-n - 2 * i))


def annihilation_check(element, geometry, centers, radii, quad_order=512):
    """Largest ``|R(f)|`` over the admissible part of the sampling for the element's field."""
    ds = generate_dataset(element.field(), geometry, centers, radii, quad_order)
    return float(np.max(np.abs(ds.values)))


@dataclass(frozen=True)
class KernelFit:
    coefficients: np.ndarray
    residual: float
    tol: float = MEMBERSHIP_TOL

    @property
    def member(self):
        return self.residual < self.tol


def kernel_fit(profile, n, m, tol=MEMBERSHIP_TOL):
    """Least-squares fit of ``sum_i c_i r^{-n-2i}`` to a profile on ``(a, A)``.

    Columns are scaled to ``(a/r)^{n+2i}`` with ``a = profile.radii[0]``;
    ``residual`` is ``||y - X c|| / ||y||`` (0 for a zero profile).
    """
    if m < 1:
        raise InputError("kernel_fit needs m >= 1")
    r, y = profile.radii, profile.values
    if r.size < m:
        raise InputError(f"profile has {r.size} nodes, need at least {m}")
    if r[0] <= 0:
        raise InputError("profile must live on r > 0")
    a = r[0]
    expo = n + 2 * np.arange(m)
    X = (a / r[:, None]) ** expo[None, :]
    sv = np.linalg.svd(X, compute_uv=False)
    if sv[-1] <= 1e-13 * sv[0]:
        raise InputError(f"rank-deficient kernel design (condition {sv[0] / max(sv[-1], 1e-300):.3g}); grid too short")
    d, *_ = np.linalg.lstsq(X, y, rcond=None)
    ynorm = np.linalg.norm(y)
    res = 0.0 if ynorm == 0 else float(np.linalg.norm(y - X @ d) / ynorm)
    return KernelFit(d * a**expo, res, tol)
