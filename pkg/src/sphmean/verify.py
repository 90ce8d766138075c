"""Self-check suites: each returns rows of (check, measured, tolerance, passed)."""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .curved import SpaceKind, curved_intertwine_residual
from .darboux import (
    apply_Q_power,
    energy_profile,
    epd_solve,
    intertwine_residual,
    intertwine_residual_power,
    trace_symmetry_check,
)
from .data_model import AnnulusGeometry, phantom
from .errors import InputError
from .harmonics import ModeIndex
from .kernel import KernelElement, annihilation_check, kernel_basis_profile, kernel_fit
from .profile import RadialProfile
from .transform import mean_mode_coefficient, random_admissible, random_nonenclosing, spherical_means

RATIO_BAND = (3.0, 5.0)


@dataclass(frozen=True)
class CheckRow:
    check: str
    measured: float
    tolerance: str
    passed: bool

    def format(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{self.check},{self.measured:.6e},{self.tolerance},{status}"


def _below(name, value, tol):
    value = float(value)
    return CheckRow(name, value, f"< {tol:g}", bool(np.isfinite(value) and value < tol))


def _above(name, value, tol):
    value = float(value)
    return CheckRow(name, value, f"> {tol:g}", bool(value > tol))


def _ratio(name, coarse, fine, band=RATIO_BAND):
    value = float(coarse / fine) if fine > 0 else float("inf")
    return CheckRow(name, value, f"in [{band[0]:g}, {band[1]:g}]", bool(band[0] <= value <= band[1]))


# ----------------------------------------------------------------- suites


def suite_intertwine():
    rows = []
    for n in (2, 3):
        worst = max(abs(float(intertwine_residual_power(n, m, p))) for m in range(9) for p in range(-10, 7))
        rows.append(CheckRow(f"power-path n={n} m<=8 p=-10..6", worst, "== 0", worst == 0.0))
        zeros_ok = all(
            (apply_Q_power(n, m, p) == 0) == (p in {-n - 2 * i for i in range(m)})
            for m in range(9)
            for p in range(-30, 7)
        )
        rows.append(CheckRow(f"Q multiplier zeros n={n}", float(not zeros_ok), "== 0", zeros_ok))
    for n in (2, 3):
        for m in range(1, 7):
            res = []
            for N in (281, 561):
                r = np.linspace(0.5, 4.0, N)
                res.append(intertwine_residual(n, m, RadialProfile(None, r, np.exp(-(r**2)))))
            rows.append(_ratio(f"fd-path ratio n={n} m={m}", *res))
    return rows


def trace_discrepancy(n, m, points, rc=1.5, w=0.5, R=3.0, T=2.5, cfl=0.9):
    """Max trace-identity discrepancy for a mode-bump profile on ``[0, R]``."""
    mode = ModeIndex(n, m, 1)
    r = np.linspace(0.0, R, points)
    f = RadialProfile(mode, r, np.exp(-(((r - rc) / w) ** 2)))
    grid = epd_solve(n, m, f, T, cfl)
    _, disc = trace_symmetry_check(n, m, f, grid)
    return float(np.max(disc))


def suite_trace():
    rows = []
    for m in range(4):
        fine = trace_discrepancy(2, m, 1024)
        coarse = trace_discrepancy(2, m, 512)
        rows.append(_below(f"trace n=2 m={m} N=1024", fine, 1e-3))
        rows.append(_ratio(f"trace ratio n=2 m={m}", coarse, fine))
    return rows


def kernel_elements(n, m_max):
    return [KernelElement(ModeIndex(n, m, 1), i) for m in range(1, m_max + 1) for i in range(m)]


def suite_kernel(samples=200, quad_order=512, seed=0):
    rng = np.random.default_rng(seed)
    geom = AnnulusGeometry(1.0, 3.0)
    c_in, t_in = random_admissible(geom, 2, samples, rng)
    c_out, t_out = random_nonenclosing(geom, 2, samples, rng)
    rows = []
    for el in kernel_elements(2, 4):
        tag = f"m={el.mode.m} i={el.i}"
        rows.append(_below(f"annihilation {tag}", annihilation_check(el, geom, c_in, t_in, quad_order), 1e-8))
        ctrl = np.max(np.abs(spherical_means(el.field(), c_out, t_out, quad_order)))
        rows.append(_above(f"non-enclosing control {tag}", ctrl, 1e-3))
    r = np.linspace(1.0, 3.0, 201)
    for m in range(1, 5):
        mode = ModeIndex(2, m, 1)
        for i in range(m):
            fit = kernel_fit(kernel_basis_profile(2, mode, i, r), 2, m)
            rows.append(_below(f"kernel_fit member m={m} i={i}", fit.residual, fit.tol))
        outside = RadialProfile(mode, r, r ** (-2.0 - 2 * m))
        fit = kernel_fit(outside, 2, m)
        rows.append(_above(f"kernel_fit non-member m={m}", fit.residual, fit.tol))
    return rows


def _bump(r, rc, w):
    x = (r - rc) / w
    return np.where(np.abs(x) < 1, (1 - x**2) ** 4, 0.0)


def energy_constants(n, m, points, R=4.0, T=3.0):
    """``(C_cone, C_mono)`` for one resolution.

    ``C_cone`` is the largest energy inside the backward cone of a ball where
    the data vanish, and ``C_mono`` the largest step increase of the energy of
    data supported in the ball; both are divided by ``h`` times a reference
    initial energy.
    """
    r = np.linspace(0.0, R, points)
    h = r[1]
    outer = epd_solve(n, m, RadialProfile(None, r, _bump(r, 2.0, 0.6)), T)
    _, e_cone = energy_profile(n, m, outer, 0.0, 1.2)
    _, e_ref = energy_profile(n, m, outer, 0.0, 3.0)
    inner = epd_solve(n, m, RadialProfile(None, r, _bump(r, 1.0, 0.6)), T)
    _, e_in = energy_profile(n, m, inner, 0.0, 2.0)
    _, e_off = energy_profile(n, m, inner, 1.0, 1.5)
    c_cone = np.max(e_cone) / (h * e_ref[0])
    inc = max(np.max(np.diff(e_in)) / e_in[0], np.max(np.diff(e_off)) / e_off[0], 0.0)
    return float(c_cone), float(inc / h)


ENERGY_BOUND = 0.1


def suite_energy():
    rows = []
    for n, m in ((2, 0), (2, 2), (3, 1)):
        for points in (401, 801):
            c_cone, c_mono = energy_constants(n, m, points)
            rows.append(_below(f"cone energy/h n={n} m={m} N={points}", c_cone, ENERGY_BOUND))
            rows.append(_below(f"energy increase/h n={n} m={m} N={points}", c_mono, ENERGY_BOUND))
    return rows


def suite_curved():
    rows = []
    for space in (SpaceKind.HYPERBOLIC, SpaceKind.SPHERICAL):
        for n in (2, 3):
            for m in range(1, 7):
                res = []
                for N in (81, 161, 321):
                    r = np.linspace(0.5, 2.5, N)
                    res.append(curved_intertwine_residual(space, n, m, RadialProfile(None, r, np.exp(-(((r - 1.5) / 0.3) ** 2)))))
                row1 = _ratio("", res[0], res[1])
                row2 = _ratio("", res[1], res[2])
                worst = row1 if abs(row1.measured - 4) >= abs(row2.measured - 4) else row2
                rows.append(CheckRow(f"{space.value} ratio n={n} m={m}", worst.measured, worst.tolerance, row1.passed and row2.passed))
    return rows


def epd_oracle_errors(n, m, levels=(201, 401, 801), R=4.0, T=2.0):
    """Max error of ``epd_solve`` against quadrature means at a few (r, t) points."""
    mode = ModeIndex(n, m, 1)
    field = phantom("mode-bump", {"m": m, "l": 1, "rc": 1.5, "w": 0.5}, n=n)
    pts = [(0.5, 1.0), (1.0, 0.7), (0.2, 1.6)]
    order, quad = (64, 512) if n == 2 else (16, 32)
    oracle = [mean_mode_coefficient(field, mode, rr, tt, order, quad) for rr, tt in pts]
    errs = []
    for N in levels:
        r = np.linspace(0.0, R, N)
        grid = epd_solve(n, m, RadialProfile(mode, r, field.exact_profiles[mode](r)), T)
        err = 0.0
        for (rr, tt), o in zip(pts, oracle):
            i = int(round(rr / grid.dr))
            if abs(i * grid.dr - rr) > 1e-9:
                raise InputError(f"oracle radius {rr} is not a grid node")
            err = max(err, abs(CubicSpline(grid.t, grid.values[:, i])(tt) - o))
        errs.append(err)
    return errs


def suite_epd_convergence():
    rows = []
    r = np.linspace(0.0, 3.0, 301)
    const = epd_solve(2, 0, RadialProfile(None, r, np.full_like(r, 2.5)), 2.5)
    rows.append(_below("constant preserved n=2 m=0", np.max(np.abs(const.values - 2.5)), 1e-10))
    for n in (2, 3):
        for m in range(4):
            errs = epd_oracle_errors(n, m)
            rows.append(_ratio(f"epd ratio n={n} m={m}", errs[-2], errs[-1]))
    return rows


SUITES = {
    "intertwine": suite_intertwine,
    "trace": suite_trace,
    "kernel": suite_kernel,
    "energy": suite_energy,
    "curved": suite_curved,
    "epd-convergence": suite_epd_convergence,
}


def run_suite(name):
    try:
        fn = SUITES[name]
    except KeyError:
        raise InputError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
    return fn()
