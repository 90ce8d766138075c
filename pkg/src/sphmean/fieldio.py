"""Fields sampled on polar product grids: CSV ``r,theta[,phi],value``.

For ``n = 2`` ``theta`` is the polar angle of the direction. For ``n = 3``
``theta`` is the colatitude and ``phi`` the azimuth. Directions follow the
nodes of :class:`~sphmean.harmonics.AngularSampleSet`, so each ring of
constant ``r`` carries its own quadrature.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .harmonics import AngularSampleSet, _harmonic_values, modes
from .profile import RadialProfile


def directions_to_angles(d):
    d = np.atleast_2d(d)
    if d.shape[1] == 2:
        return np.arctan2(d[:, 1], d[:, 0])[:, None]
    theta = np.arccos(np.clip(d[:, 2], -1.0, 1.0))
    phi = np.arctan2(d[:, 1], d[:, 0])
    return np.column_stack([theta, phi])


def angles_to_directions(ang):
    ang = np.atleast_2d(ang)
    if ang.shape[1] == 1:
        return np.column_stack([np.cos(ang[:, 0]), np.sin(ang[:, 0])])
    th, ph = ang[:, 0], ang[:, 1]
    return np.column_stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])


@dataclass(frozen=True, eq=False)
class PolarField:
    """Values ``values[i, k]`` at radius ``radii[i]`` and direction ``angular.nodes[k]``."""

    radii: np.ndarray
    angular: AngularSampleSet
    values: np.ndarray

    @property
    def n(self):
        return self.angular.n

    @classmethod
    def sample(cls, field, radii, angular):
        radii = np.asarray(radii, dtype=float)
        pts = (radii[:, None, None] * angular.nodes[None]).reshape(-1, angular.n)
        return cls(radii, angular, np.asarray(field(pts), dtype=float).reshape(radii.size, -1))

    def profiles(self, M_max):
        """Per-mode radial profiles ``f_ml(r)`` (projection divided by ``r^m``)."""
        out = {}
        w = self.angular.weights
        for mode in modes(self.n, M_max):
            y = _harmonic_values(self.n, mode.m, mode.l, self.angular.nodes)
            proj = self.values @ (w * y)
            out[mode] = RadialProfile(mode, self.radii, proj / self.radii**mode.m)
        return out


def write_polar_field(pf, path):
    ang = directions_to_angles(pf.angular.nodes)
    cols = ["r", "theta"] + (["phi"] if pf.n == 3 else []) + ["value"]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for i, r in enumerate(pf.radii):
            for k in range(ang.shape[0]):
                row = [r, *ang[k], pf.values[i, k]]
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def read_polar_field(path, n):
    """Parse a polar field CSV; the angular set is recovered from the ring size."""
    want = ["r", "theta"] + (["phi"] if n == 3 else []) + ["value"]
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != want:
            raise ParseError(f"expected header {','.join(want)}", line=1, path=path)
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(want):
                raise ParseError(f"expected {len(want)} columns, got {len(rec)}", line=lineno, path=path)
            try:
                vals = [float(x) for x in rec]
            except ValueError:
                raise ParseError("non-numeric entry", line=lineno, path=path) from None
            if not all(np.isfinite(vals)):
                raise ParseError("non-finite entry", line=lineno, path=path)
            rows.append(vals)
    if not rows:
        raise ParseError("no data rows", path=path)
    data = np.array(rows)
    radii = np.unique(data[:, 0])
    per_ring = data.shape[0] // radii.size
    if per_ring * radii.size != data.shape[0]:
        raise ParseError("rings have unequal sizes; not a product grid", path=path)
    order = per_ring if n == 2 else int(round(np.sqrt(per_ring / 2)))
    angular = AngularSampleSet.build(n, order)
    if len(angular) != per_ring:
        raise ParseError(f"ring size {per_ring} matches no angular sample set", path=path)
    values = np.empty((radii.size, per_ring))
    for i, r in enumerate(radii):
        block = data[data[:, 0] == r]
        if block.shape[0] != per_ring:
            raise ParseError(f"ring r={r:g} has {block.shape[0]} samples, expected {per_ring}", path=path)
        d = angles_to_directions(block[:, 1:-1])
        idx = np.argmax(d @ angular.nodes.T, axis=1)
        if np.unique(idx).size != per_ring or np.min(np.sum(d * angular.nodes[idx], axis=1)) < 1 - 1e-9:
            raise ParseError(f"ring r={r:g} directions do not match the angular nodes", path=path)
        values[i, idx] = block[:, -1]
    return PolarField(radii, angular, values)
