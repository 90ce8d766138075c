"""Radial operators of the mode equations and the 1+1-D EPD solver.

``B_{r,m} = d^2/dr^2 + (n - 1 + 2m)/r d/dr`` acts on the radial coefficient
``g_ml`` of the solid-harmonic expansion; ``Q_m = L_0 L_1 ... L_{m-1}`` with
``L_i = (r/(n + 2i)) d/dr + 1`` intertwines it with ``B_{r,0}``.
"""

import contextlib
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.special import betainc, gamma

from . import _fd
from ._leapfrog import leapfrog
from .errors import InputError, InstabilityError
from .harmonics import ModeIndex
from .profile import RadialProfile

# Test hook: shifts every Q_m factor constant n + 2i by this amount.
_Q_SHIFT = 0.0


@contextlib.contextmanager
def corrupted_q(shift):
    """Temporarily perturb the Q_m factor constants (negative-control hook)."""
    global _Q_SHIFT
    old, _Q_SHIFT = _Q_SHIFT, float(shift)
    try:
        yield
    finally:
        _Q_SHIFT = old


def _factor_const(n, i):
    # stays an int when unperturbed so the power path remains exact
    return n + 2 * i + _Q_SHIFT if _Q_SHIFT else n + 2 * i


# ------------------------------------------------------------- operators


def apply_B(n, m, profile):
    """``B_{r,m}`` by second-order centered differences.

    A node at ``r = 0`` uses the even-extension limit ``(n + 2m) u''(0)``.
    """
    r, u, h = profile.radii, profile.values, profile.h
    if r.size < 5:
        raise InputError("apply_B needs at least 5 nodes")
    if r[0] < 0:
        raise InputError("radii must be nonnegative")
    c = n - 1 + 2 * m
    du = _fd.d1(u, h)
    out = _fd.d2(u, h)
    pos = r > 0
    out[pos] += c / r[pos] * du[pos]
    if not pos[0]:
        out[0] = (n + 2 * m) * 2.0 * (u[1] - u[0]) / h**2
    return profile.with_values(out)


def _check_positive_grid(profile):
    if profile.radii[0] <= 0:
        raise InputError("grid must exclude r = 0")


def apply_Q(n, m, profile, order="inner-first"):
    """``Q_m u``: first-order factors applied one at a time.

    The default ``order="inner-first"`` applies ``L_{m-1}`` first and ``L_0``
    last, i.e. the composition as written; ``"outer-first"`` reverses it.
    Every factor is ``(r/c) D + 1`` with the same discrete ``r D``, so the two
    orders agree up to roundoff.
    """
    _check_positive_grid(profile)
    if m < 0:
        raise InputError("m must be nonnegative")
    if m > 0 and profile.radii.size < 3:
        raise InputError("apply_Q needs at least 3 nodes")
    r, u, h = profile.radii, profile.values.copy(), profile.h
    idx = range(m - 1, -1, -1) if order == "inner-first" else range(m)
    for i in idx:
        u = r / _factor_const(n, i) * _fd.d1(u, h) + u
    return profile.with_values(u)


def apply_Q_power(n, m, p):
    """Multiplier ``prod_i (p/(n + 2i) + 1)`` with ``Q_m r^p = multiplier * r^p``.

    Exact (a :class:`~fractions.Fraction`) for integer or rational ``p``.
    """
    exact = isinstance(p, (int, Fraction)) and _Q_SHIFT == 0.0
    out = Fraction(1) if exact else 1.0
    for i in range(m):
        c = _factor_const(n, i)
        out *= (Fraction(p) / c + 1) if exact else (p / c + 1.0)
    return out


def _B_power(n, m, p):
    """``B_{r,m} r^p = coeff * r^{p-2}``."""
    return p * (p + n + 2 * m - 2)


def intertwine_residual_power(n, m, p):
    """Exact ``Q_m B_{r,m} r^p - B_{r,0} Q_m r^p`` coefficient of ``r^{p-2}``."""
    lhs = _B_power(n, m, p) * apply_Q_power(n, m, p - 2)
    rhs = _B_power(n, 0, p) * apply_Q_power(n, m, p)
    return lhs - rhs


def intertwine_residual(n, m, test, trim=None):
    """Max of ``|Q_m B_{r,m} u - B_{r,0} Q_m u|`` on the trimmed interior.

    ``trim`` defaults to ``2m + 2`` nodes per end, which discards the
    one-sided stencils' pollution.
    """
    _check_positive_grid(test)
    k = 2 * m + 2 if trim is None else trim
    if test.radii.size - 2 * k < 3:
        raise InputError("too few interior nodes after trimming")
    lhs = apply_Q(n, m, apply_B(n, m, test)).values
    rhs = apply_B(n, 0, apply_Q(n, m, test)).values
    return float(np.max(np.abs(_fd.trim(lhs - rhs, k))))


# ----------------------------------------------------------------- solver


@dataclass(frozen=True, eq=False)
class EPDGrid:
    """``g_ml(r_i, t_j)`` on the lattice ``r_i = i dr``, ``t_j = j dt``; ``values[j, i]``."""

    mode: ModeIndex
    dr: float
    dt: float
    values: np.ndarray

    @property
    def r(self):
        return self.dr * np.arange(self.values.shape[1])

    @property
    def t(self):
        return self.dt * np.arange(self.values.shape[0])

    @property
    def center_trace(self):
        """``g_ml(0, t_j)``."""
        return self.values[:, 0]

    def write_csv(self, path):
        r, t = self.r, self.t
        with open(path, "w", newline="") as fh:
            fh.write("r,t,value\n")
            for j in range(t.size):
                for i in range(r.size):
                    fh.write(f"{r[i]:.17g},{t[j]:.17g},{self.values[j, i]:.17g}\n")


def _fv_coefficients(n, m, nr, dr):
    """Conservative tridiagonal form of ``B_{r,m}`` on ``r_i = i dr``.

    Cell ``i`` spans ``[r_{i-1/2}, r_{i+1/2}]`` with weight ``r^c``; node 0
    reduces to ``2(c + 1)(u_1 - u_0)/dr^2``, the even-extension limit.
    """
    c = n - 1 + 2 * m
    i = np.arange(nr, dtype=float)
    upper = np.empty(nr)
    lower = np.zeros(nr)
    upper[0] = 2.0 * (c + 1)
    ip, im = i[1:] + 0.5, i[1:] - 0.5
    logq = np.log(im / ip)
    denom = -np.expm1((c + 1) * logq) * ip
    upper[1:] = (c + 1) / denom
    lower[1:] = (c + 1) * np.exp(c * logq) / denom
    upper /= dr**2
    lower /= dr**2
    diag = -(upper + lower)
    return lower, diag, upper


def _apply_tridiag(lower, diag, upper, u):
    out = diag * u
    out[:-1] += upper[:-1] * u[1:]
    out[1:] += lower[1:] * u[:-1]
    return out


def stable_time_step(n, m, nr, dr):
    """Largest leapfrog step for the discrete ``B_{r,m}`` with a copied outer node."""
    lower, diag, upper = _fv_coefficients(n, m, nr, dr)
    d = diag[:-1].copy()
    d[-1] += upper[-2]
    e = np.sqrt(upper[:-2] * lower[1:-1])
    lam = eigvalsh_tridiagonal(d, e, select="i", select_range=(0, 0))[0]
    return 2.0 / math.sqrt(-lam)


def epd_solve(n, m, initial, T_max, cfl=0.9, l=1):
    """Solve ``B_{t,0} g = B_{r,m} g`` with ``g(r, 0) = f``, ``g_t(r, 0) = 0``.

    Explicit leapfrog on ``r_i = i dr`` (``initial`` must start at ``r = 0``),
    ``dt = cfl * min(dr, dt_stable)`` shrunk so that ``T_max`` is a lattice
    time. The first step is the Taylor start ``f + dt^2/(2n) B f``. The outer
    node copies its neighbour, so entries with ``t > R_max - r`` may carry
    reflections.
    """
    if not 0 < cfl <= 1:
        raise InputError(f"cfl must lie in (0, 1], got {cfl}")
    r = initial.radii
    if abs(r[0]) > 1e-14 or r.size < 5:
        raise InputError("initial profile must start at r = 0 and have >= 5 nodes")
    if T_max <= 0:
        raise InputError("T_max must be positive")
    if T_max > r[-1] + 1e-12:
        raise InputError(f"T_max={T_max} exceeds the radial extent {r[-1]}")
    mode = initial.mode if initial.mode is not None else ModeIndex(n, m, l)
    dr, nr = initial.h, r.size
    lower, diag, upper = _fv_coefficients(n, m, nr, dr)
    dt_max = cfl * min(dr, stable_time_step(n, m, nr, dr))
    nt = max(2, math.ceil(T_max / dt_max - 1e-9))
    dt = T_max / nt
    g = np.zeros((nt + 1, nr))
    f = initial.values
    g[0] = f
    Bf = _apply_tridiag(lower, diag, upper, np.append(f[:-1], f[-2]))
    g[1] = f + dt**2 / (2.0 * n) * Bf
    g[1, -1] = g[1, -2]
    scale = dt**2
    bad = leapfrog(g, lower * scale, diag * scale, upper * scale, float(n - 1))
    if bad >= 0:
        raise InstabilityError(f"non-finite values at time step {bad}", step=bad)
    return EPDGrid(mode, dr, dt, g)


def epd_step_back(n, grid):
    """Run the leapfrog recurrence backwards from the last two rows.

    Returns an array of the same shape as ``grid.values``. Row 0 is left as
    NaN when the recurrence cannot reach it (``n = 3``, where the first step
    does not involve row 0).
    """
    m = grid.mode.m
    g = grid.values
    nt, nr = g.shape
    lower, diag, upper = _fv_coefficients(n, m, nr, grid.dr)
    s = grid.dt**2
    out = np.full_like(g, np.nan)
    out[-1], out[-2] = g[-1], g[-2]
    for j in range(nt - 2, 0, -1):
        beta = (n - 1) / (2.0 * j)
        if abs(1.0 - beta) < 1e-14:
            break
        lap = s * _apply_tridiag(lower, diag, upper, out[j])
        out[j - 1] = (2.0 * out[j] - (1.0 + beta) * out[j + 1] + lap) / (1.0 - beta)
        out[j - 1, -1] = out[j - 1, -2]
    return out


def trace_symmetry_check(n, m, f_ml, grid, trim=None):
    """``|[Q_m f_ml](s) - g_ml(0, s)|`` at the lattice times ``s``.

    ``Q_m f_ml`` is computed on the ``r > 0`` part of ``f_ml`` and cubic
    interpolated onto ``t_j`` (so ``dt`` need not equal ``dr``). Times within
    ``trim`` (default ``2m + 2``) radial nodes of either end of ``f_ml``'s
    range, or beyond it, are skipped. Returns ``(s, discrepancy)``.
    """
    sub = f_ml.restrict(f_ml.h * 0.5, np.inf) if f_ml.radii[0] <= 0 else f_ml
    qf = apply_Q(n, m, sub)
    k = 2 * m + 2 if trim is None else trim
    lo = sub.radii[min(k, sub.radii.size - 1)]
    hi = sub.radii[max(sub.radii.size - 1 - k, 0)]
    t = grid.t
    keep = (t >= lo) & (t <= hi)
    s = t[keep]
    if s.size == 0:
        raise InputError("no lattice times inside the trimmed profile range")
    return s, np.abs(qf(s) - grid.center_trace[keep])


# ----------------------------------------------------------------- energy


def _sphere_area(N):
    return 2.0 * math.pi ** (N / 2) / gamma(N / 2)


def shell_ball_measure(N, rho, center_dist, R):
    """Measure of ``S^{N-1}(0, rho) ∩ B(y0, R)`` with ``|y0| = center_dist``."""
    rho = np.asarray(rho, dtype=float)
    full = _sphere_area(N) * rho ** (N - 1)
    if R <= 0:
        return np.zeros_like(rho)
    if center_dist == 0:
        return np.where(rho < R, full, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = (rho**2 + center_dist**2 - R**2) / (2.0 * rho * center_dist)
    kappa = np.where(rho > 0, kappa, np.where(center_dist < R, -np.inf, np.inf))
    phi = np.arccos(np.clip(kappa, -1.0, 1.0))
    x = np.sin(phi) ** 2
    half = 0.5 * betainc((N - 1) / 2.0, 0.5, x)
    frac = np.where(phi <= math.pi / 2, half, 1.0 - half)
    frac = np.where(kappa <= -1, 1.0, np.where(kappa >= 1, 0.0, frac))
    return full * frac


def energy_profile(n, m, grid, center_dist, r0, eps=0.0):
    """Energy ``E(t) = int_{B(y0, r0 + eps - t)} (u_t^2 + |grad u|^2) dy``.

    The mode solution is viewed as ``u(t, y) = g_ml(|y|, t)`` for ``y`` in
    ``R^{n+2m}``, which solves ``u_tt + (n-1)/t u_t = Lap_y u``. ``|y0|`` is
    ``center_dist``. Returns ``(t, E)`` for lattice times in ``[eps, r0 + eps]``.
    """
    N = n + 2 * m
    r, t = grid.r, grid.t
    if center_dist + r0 > r[-1] + 1e-12 or r0 + eps > t[-1] + 1e-12 or r0 <= 0:
        raise InputError("ball or time window exceeds the lattice")
    g = grid.values
    g_t = np.empty_like(g)
    g_t[1:-1] = (g[2:] - g[:-2]) / (2.0 * grid.dt)
    g_t[0] = 0.0
    g_t[-1] = (3.0 * g[-1] - 4.0 * g[-2] + g[-3]) / (2.0 * grid.dt)
    g_r = np.gradient(g, grid.dr, axis=1, edge_order=2)
    g_r[:, 0] = 0.0
    dens = g_t**2 + g_r**2
    sel = np.nonzero((t >= eps - 1e-12) & (t <= r0 + eps + 1e-12))[0]
    E = np.empty(sel.size)
    for k, j in enumerate(sel):
        w = shell_ball_measure(N, r, center_dist, r0 + eps - t[j])
        E[k] = np.trapezoid(dens[j] * w, r)
    return t[sel], E


@dataclass(frozen=True)
class BoundaryJet:
    """``(u(anchor), u'(anchor), ..., u^{(k-1)}(anchor))``."""

    anchor: float
    values: tuple

    @property
    def order(self):
        return len(self.values)
