"""Radial profiles: sampled coefficients ``f_ml(r)`` on uniform grids."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InputError, ParseError

_UNIFORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Values of one radial coefficient on an ascending uniform grid.

    ``mode`` is the :class:`~sphmean.harmonics.ModeIndex` the profile belongs
    to, or ``None`` for profiles that are not tied to a harmonic.
    """

    mode: object
    radii: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float).copy()
        v = np.asarray(self.values, dtype=float).copy()
        if r.ndim != 1 or v.ndim != 1 or r.size != v.size:
            raise InputError(f"radii/values length mismatch ({r.size} vs {v.size})")
        if r.size == 0:
            raise InputError("empty profile")
        if r.size >= 2:
            steps = np.diff(r)
            if np.any(steps <= 0):
                raise InputError("profile radii must be strictly ascending")
            if r.size >= 3:
                scale = max(1.0, float(np.max(np.abs(r))))
                if np.ptp(steps) > _UNIFORM_TOL * scale:
                    raise InputError("profile grid is not uniform")
        r.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", v)

    @property
    def h(self):
        if self.radii.size < 2:
            return 0.0
        return (self.radii[-1] - self.radii[0]) / (self.radii.size - 1)

    def __len__(self):
        return self.radii.size

    @cached_property
    def spline(self):
        return CubicSpline(self.radii, self.values)

    def __call__(self, r):
        """Cubic interpolation; raises for radii outside the grid."""
        r = np.asarray(r, dtype=float)
        lo, hi = self.radii[0], self.radii[-1]
        slack = 1e-12 * max(1.0, abs(hi))
        if np.any(r < lo - slack) or np.any(r > hi + slack):
            raise InputError(f"radius outside profile grid [{lo}, {hi}]")
        if self.radii.size == 1:
            return np.full(r.shape, self.values[0])
        return self.spline(np.clip(r, lo, hi))

    def with_values(self, values, mode=None):
        return RadialProfile(self.mode if mode is None else mode, self.radii, values)

    def restrict(self, lo, hi):
        keep = (self.radii >= lo - 1e-12) & (self.radii <= hi + 1e-12)
        return RadialProfile(self.mode, self.radii[keep], self.values[keep])


def uniform_grid(lo, hi, points):
    if points < 2:
        raise InputError("a grid needs at least 2 points")
    return np.linspace(lo, hi, int(points))


def write_profile_csv(profile, path):
    with open(path, "w", newline="") as fh:
        fh.write("r,value\n")
        for r, v in zip(profile.radii, profile.values):
            fh.write(f"{r:.17g},{v:.17g}\n")


def read_profile_csv(path, mode=None):
    radii, values = [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "r,value":
            raise ParseError(f"expected header 'r,value', got {header!r}", 1, path)
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError(f"expected 2 columns, got {len(parts)}", lineno, path)
            try:
                r, v = float(parts[0]), float(parts[1])
            except ValueError as exc:
                raise ParseError(str(exc), lineno, path) from None
            if not (np.isfinite(r) and np.isfinite(v)):
                raise ParseError("non-finite value", lineno, path)
            radii.append(r)
            values.append(v)
    return RadialProfile(mode, np.array(radii), np.array(values))
