"""Recovery of ``f`` on ``Ann(a, A)`` from region-A data plus a prior.

Pipeline per mode: the central trace ``g_ml(0, s)`` is extracted from the
data, the prior fixes a boundary jet of ``f_ml`` at ``a`` (interior prior) or
``A`` (exterior prior), and ``Q_m f_ml = g_ml(0, .)`` is integrated factor
by factor from that anchor.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson

from . import _fd
from .darboux import BoundaryJet
from .data_model import ScalarField
from .errors import InputError, ReconstructionError
from .harmonics import AngularSampleSet, HarmonicExpansion, ModeIndex, _harmonic_values, decompose, modes
from .kernel import kernel_fit
from .profile import RadialProfile, uniform_grid

# --------------------------------------------------------- trace extraction


def _match_ring(directions, n):
    """Quadrature weights for a ring of center directions, or ``None``."""
    size = directions.shape[0]
    if n == 2:
        order = size
    else:
        order = int(round(math.sqrt(size / 2)))
        if 2 * order * order != size:
            return None
    ang = AngularSampleSet.build(n, order)
    dots = directions @ ang.nodes.T
    idx = np.argmax(dots, axis=1)
    if np.min(dots[np.arange(size), idx]) < 1 - 1e-9 or np.unique(idx).size != size:
        return None
    return ang, ang.weights[idx]


def _richardson_zero(rho, g):
    """Value at ``rho = 0`` of the polynomial in ``rho^2`` through ``(rho_k, g_k)``."""
    x = np.asarray(rho, dtype=float) ** 2
    out = 0.0
    for k in range(x.size):
        others = np.delete(x, k)
        out += g[k] * np.prod(others / (others - x[k]))
    return out


def _fill_failed(s, vals, failed):
    good = np.nonzero(~failed)[0]
    if good.size == 0:
        raise ReconstructionError("trace extraction failed at every node")
    out = vals.copy()
    for j in np.nonzero(failed)[0]:
        near = good[np.argsort(np.abs(good - j), kind="stable")[:4]]
        deg = min(3, near.size - 1)
        coef = np.polyfit(s[near] - s[j], vals[near], deg)
        out[j] = coef[-1]
    return out


def extract_g0(dataset, mode, s_grid, extrap_radii=6, return_failures=False):
    """Central trace ``g_ml(0, s)`` on ``s_grid`` from region-A samples.

    At each ``s`` the samples with sphere radius ``s`` are grouped into rings
    of centers at common ``|x| = rho``; each ring is projected onto
    ``Y^m_l`` and divided by ``rho^m``, and the smallest ``extrap_radii``
    rings are extrapolated to ``rho = 0`` as a polynomial in ``rho^2``. For
    ``m = 0`` a center at the origin gives the trace directly. Nodes lacking
    data are filled from good neighbours by a local cubic.
    """
    if extrap_radii < 2:
        raise InputError("extrap_radii must be >= 2")
    s_grid = np.asarray(s_grid, dtype=float)
    n = dataset.n
    order = np.argsort(dataset.radii, kind="stable")
    t_sorted = dataset.radii[order]
    y00 = _harmonic_values(n, 0, 1, np.eye(n)[:1])[0]
    vals = np.zeros(s_grid.size)
    failed = np.zeros(s_grid.size, bool)
    for j, s in enumerate(s_grid):
        tol = 1e-9 * max(1.0, abs(s))
        lo, hi = np.searchsorted(t_sorted, [s - tol, s + tol])
        sel = order[lo:hi]
        if sel.size == 0:
            failed[j] = True
            continue
        c = dataset.centers[sel]
        G = dataset.values[sel]
        rho = np.linalg.norm(c, axis=1)
        origin = rho < 1e-14
        if mode.m == 0 and np.any(origin):
            vals[j] = np.mean(G[origin]) / y00
            continue
        key = np.round(rho[~origin], 12)
        rings = []
        for rk in np.unique(key):
            members = np.nonzero(~origin)[0][key == rk]
            dirs = c[members] / rho[members, None]
            matched = _match_ring(dirs, n)
            if matched is None:
                continue
            ang, w = matched
            if ang.max_degree < mode.m:
                continue
            proj = np.sum(w * G[members] * _harmonic_values(n, mode.m, mode.l, dirs))
            rings.append((float(np.mean(rho[members])), proj / np.mean(rho[members]) ** mode.m))
        if len(rings) < 2:
            failed[j] = True
            continue
        rings = rings[:extrap_radii]
        vals[j] = _richardson_zero([r for r, _ in rings], np.array([g for _, g in rings]))
    vals = _fill_failed(s_grid, vals, failed) if failed.any() else vals
    prof = RadialProfile(mode, s_grid, vals)
    return (prof, failed) if return_failures else prof


# ------------------------------------------------------------- k integral


def k_constant(n, m):
    """``n (n+2) ... (n+2(m-1)) / (2^{m-1} (m-1)!)``."""
    num = math.prod(n + 2 * i for i in range(m))
    return num / (2 ** (m - 1) * math.factorial(m - 1))


def k_integral(n, m, g0, r):
    """``k_ml(r) = C_m r^{-(n+2(m-1))} int_a^r g0(tau) tau^{n-1} (r^2 - tau^2)^{m-1} dtau``.

    ``a`` is the first node of ``g0``. The integral is cumulative Simpson on
    the profile grid, cubic-interpolated at the cut ``r``. ``m = 0`` returns
    ``g0(r)``.
    """
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    a, end = g0.radii[0], g0.radii[-1]
    slack = 1e-12 * max(1.0, end)
    if np.any(r_arr < a - slack):
        raise InputError(f"k_integral is anchored at a={a}; got r below it")
    if np.any(r_arr > end + slack):
        raise InputError(f"r beyond the g0 grid end {end}")
    if m == 0:
        out = g0(r_arr)
    else:
        tau, g = g0.radii, g0.values
        out = np.empty(r_arr.size)
        idx = _node_indices(tau, r_arr)
        if idx is not None:
            # at nodes only one column of each cumulative integral is needed
            W = _cumulative_weights(tau)
            for s in range(0, r_arr.size, 256):
                j = idx[s : s + 256]
                rr = tau[j]
                kern = _ipow((rr[:, None] - tau) * (rr[:, None] + tau), m - 1)
                out[s : s + 256] = np.sum(W[j] * kern * (g * tau ** (n - 1)), axis=1)
        else:
            for s in range(0, r_arr.size, 256):
                rr = r_arr[s : s + 256]
                phi = g * tau ** (n - 1) * _ipow((rr[:, None] - tau) * (rr[:, None] + tau), m - 1)
                cum = cumulative_simpson(phi, x=tau, axis=1, initial=0.0)
                out[s : s + 256] = [_cut(tau, cum[k], rk) for k, rk in enumerate(rr)]
        out *= k_constant(n, m) * r_arr ** (-(n + 2 * (m - 1)))
    return out if np.ndim(r) else float(out[0])


def _ipow(b, k):
    # repeated products are much faster than a float power on large arrays
    out = np.ones_like(b)
    for _ in range(k):
        out *= b
    return out


def _node_indices(x, r):
    j = np.clip(np.searchsorted(x, r), 0, x.size - 1)
    jm = np.clip(j - 1, 0, x.size - 1)
    j = np.where(np.abs(x[jm] - r) < np.abs(x[j] - r), jm, j)
    if np.all(np.abs(x[j] - r) <= 1e-12 * np.maximum(1.0, np.abs(r))):
        return j
    return None


@functools.lru_cache(maxsize=8)
def _cumulative_weights_cached(key, size):
    x = np.frombuffer(key, dtype=float)
    # row j holds the weights of every sample in the cumulative integral up to x[j]
    return np.ascontiguousarray(cumulative_simpson(np.eye(size), x=x, axis=1, initial=0.0).T)


def _cumulative_weights(x):
    x = np.ascontiguousarray(x, dtype=float)
    return _cumulative_weights_cached(x.tobytes(), x.size)


def _cut(x, cum, r):
    j = int(np.searchsorted(x, r))
    if j < x.size and abs(x[j] - r) <= 1e-12 * max(1.0, abs(r)):
        return cum[j]
    lo = max(0, min(j - 2, x.size - 4))
    sl = slice(lo, lo + 4)
    coef = np.polyfit(x[sl] - r, cum[sl], min(3, x[sl].size - 1))
    return coef[-1]


def k_profile(n, m, g0):
    return g0.with_values(k_integral(n, m, g0, g0.radii))


# ------------------------------------------------------------ jets, cascade


def boundary_jet(prior, anchor, order, fd_order=4):
    """One-sided finite-difference jet ``(u, u', ..., u^{(order-1)})`` at ``anchor``.

    ``anchor`` must be the first or last node of ``prior``; only nodes on the
    prior side are used (``fd_order + order`` of them).
    """
    r, u = prior.radii, prior.values
    if order == 0:
        return BoundaryJet(float(anchor), ())
    need = fd_order + order
    if r.size < need:
        raise InputError(f"prior has {r.size} nodes, jet of order {order} needs {need}")
    tol = 1e-9 * max(1.0, abs(anchor))
    if abs(r[-1] - anchor) <= tol:
        xs, us = r[-need:], u[-need:]
    elif abs(r[0] - anchor) <= tol:
        xs, us = r[:need], u[:need]
    else:
        raise InputError(f"anchor {anchor} is not an end of the prior grid [{r[0]}, {r[-1]}]")
    w = _fd.fornberg_weights(anchor, xs, order - 1)
    return BoundaryJet(float(anchor), tuple(float(v) for v in w @ us))


def _falling(p, j):
    out = 1.0
    for k in range(j):
        out *= p - k
    return out


def extract_kernel_coeffs(q_jet, n, m):
    """Coefficients ``c_i`` with ``q^{(j)}(a) = sum_i c_i D^j[r^{-n-2i}](a)``, ``j < m``.

    Rows are scaled by ``a^j`` and columns by ``a^{n+2i}``, which leaves the
    integer falling-factorial matrix ``F[j, i] = (p_i)_j``.
    """
    if m < 1:
        raise InputError("extract_kernel_coeffs needs m >= 1")
    if q_jet.order != m:
        raise InputError(f"jet has {q_jet.order} entries, need {m}")
    a = q_jet.anchor
    p = [-n - 2 * i for i in range(m)]
    F = np.array([[_falling(p[i], j) for i in range(m)] for j in range(m)])
    rhs = np.array([q_jet.values[j] * a**j for j in range(m)])
    cond = np.linalg.cond(F)
    if not np.isfinite(cond) or cond > 1e13:
        raise InputError(f"kernel jet system is numerically singular (condition {cond:.3g})")
    d = np.linalg.solve(F, rhs)
    return np.array([d[i] * a ** (n + 2 * i) for i in range(m)])


def _apply_L_to_jet(jet, anchor, c):
    """Jet of ``(r/c) u' + u`` from the jet of ``u`` (one entry shorter)."""
    return [(anchor * jet[k + 1] + k * jet[k]) / c + jet[k] for k in range(len(jet) - 1)]


def kernel_span_profile(coeffs, n, radii, mode=None):
    radii = np.asarray(radii, dtype=float)
    vals = sum(c * radii ** (-n - 2 * i) for i, c in enumerate(coeffs))
    return RadialProfile(mode, radii, vals + np.zeros_like(radii))


def cascade_solve(n, m, g0, jet=None, direction="forward"):
    """Solve ``Q_m f = g0`` on ``g0``'s grid from a boundary jet of ``f``.

    With ``h_m = f`` and ``h_j = L_j h_{j+1}``, each step uses the exact
    integrating factor ``h_{j+1}(r) = r^{-c} [r_*^c h_{j+1}(r_*) +
    c int_{r_*}^r tau^{c-1} h_j dtau]``, ``c = n + 2j``, from the anchor
    ``r_*`` (first node for ``"forward"``, last for ``"backward"``). Anchor
    values of the intermediate ``h`` come from pushing the jet through the
    operator tails.
    """
    if m == 0:
        return g0
    if direction not in ("forward", "backward"):
        raise InputError(f"unknown direction {direction!r}")
    if jet is None:
        raise InputError(f"direction {direction} needs a boundary jet")
    if jet.order < m:
        raise InputError(f"jet has {jet.order} entries, need {m}")
    r = g0.radii
    anchor_idx = 0 if direction == "forward" else -1
    anchor = r[anchor_idx]
    if abs(jet.anchor - anchor) > 1e-9 * max(1.0, abs(anchor)):
        raise InputError(f"jet anchor {jet.anchor} does not match grid end {anchor}")
    # anchor values h_{j+1}(r_*) for j = 0..m-1
    anchors = [0.0] * (m + 1)
    cur = list(jet.values[:m])
    anchors[m] = cur[0]
    for i in range(m - 1, 0, -1):
        cur = _apply_L_to_jet(cur, anchor, n + 2 * i)
        anchors[i] = cur[0]
    x = r if direction == "forward" else r[::-1]
    h = g0.values if direction == "forward" else g0.values[::-1]
    for j in range(m):
        c = n + 2 * j
        phi = x ** (c - 1) * h
        if direction == "forward":
            integral = cumulative_simpson(phi, x=x, initial=0.0)
        else:  # int_A^r = -int over the mirrored, increasing variable
            integral = -cumulative_simpson(phi, x=-x, initial=0.0)
        h = x ** (-c) * (anchor**c * anchors[j + 1] + c * integral)
    vals = h if direction == "forward" else h[::-1]
    return g0.with_values(vals)


# ----------------------------------------------------------- full pipeline


@dataclass
class ModeDiagnostics:
    mode: ModeIndex
    ok: bool
    failed_nodes: int = 0
    kernel_residual: float = float("nan")
    message: str = ""


@dataclass
class Reconstruction:
    profiles: dict
    field: HarmonicExpansion
    diagnostics: list = field(default_factory=list)
    s_grid: np.ndarray = None
    traces: dict = field(default_factory=dict)

    @property
    def failed_modes(self):
        return [d.mode for d in self.diagnostics if not d.ok]


def prior_grid(config):
    """Radial grid for the prior region: ``(r0, a]`` or ``[A, R_ext)``."""
    if config.prior == "interior":
        g = uniform_grid(config.r0, config.a, config.radial_points)
        return g[1:] if g[0] <= 0 else g
    g = uniform_grid(config.A, config.R_ext, config.radial_points)
    return g[:-1]


def prior_profiles(prior, config):
    """Per-mode prior profiles from a field or pass a profile mapping through."""
    if prior is None:
        raise ReconstructionError("no prior supplied")
    if isinstance(prior, ScalarField):
        ang = AngularSampleSet.build(config.n, config.angular_points)
        return decompose(prior, prior_grid(config), config.M_max, ang)
    return dict(prior)


def reconstruct_field(dataset, prior, config):
    """Per-mode profiles on ``[a, A]`` and the synthesized field.

    ``prior`` is a :class:`ScalarField` known on the prior region, or a dict
    of prior profiles keyed by mode. Mode failures are reported in the
    diagnostics rather than raised; the field then omits those modes.
    """
    geom = config.geometry
    if dataset.n != config.n:
        raise ReconstructionError("dataset dimension does not match config")
    priors = prior_profiles(prior, config)
    s_grid = uniform_grid(geom.a, geom.A, config.s_points)
    direction = "forward" if config.prior == "interior" else "backward"
    anchor = geom.a if direction == "forward" else geom.A
    profiles, diags, traces = {}, [], {}
    for mode in modes(config.n, config.M_max):
        try:
            g0, failed = extract_g0(dataset, mode, s_grid, config.extrap_radii, return_failures=True)
            traces[mode] = g0
            if mode not in priors and mode.m > 0:
                raise ReconstructionError(f"prior lacks mode {mode}")
            jet = boundary_jet(priors[mode], anchor, mode.m, config.fd_order) if mode.m else None
            f = cascade_solve(config.n, mode.m, g0, jet, direction)
            if not np.all(np.isfinite(f.values)):
                raise ReconstructionError("non-finite reconstruction")
            res = float("nan")
            if mode.m > 0 and direction == "forward":
                q = f.values - k_integral(config.n, mode.m, g0, s_grid)
                res = kernel_fit(f.with_values(q), config.n, mode.m).residual
            profiles[mode] = f
            diags.append(ModeDiagnostics(mode, True, int(failed.sum()), res))
        except (ReconstructionError, InputError) as exc:
            diags.append(ModeDiagnostics(mode, False, message=str(exc)))
    if not profiles:
        raise ReconstructionError("every mode failed")
    return Reconstruction(profiles, HarmonicExpansion(profiles, config.n), diags, s_grid, traces)


def relative_l2_error(approx, truth, r_lo, r_hi, n, radial_points=241, angular_order=64):
    """``||approx - truth|| / ||truth||`` in L^2 over the shell ``r_lo <= |x| <= r_hi``."""
    ang = AngularSampleSet.build(n, angular_order if n == 2 else max(8, angular_order // 4))
    r = np.linspace(r_lo, r_hi, radial_points)
    pts = (r[:, None, None] * ang.nodes[None]).reshape(-1, n)
    exact = np.asarray(truth(pts), dtype=float).reshape(r.size, -1)
    diff = np.asarray(approx(pts), dtype=float).reshape(r.size, -1) - exact

    def norm2(u):
        return np.trapezoid(np.sum(u**2 * ang.weights, axis=1) * r ** (n - 1), r)

    num, den = norm2(diff), norm2(exact)
    return float(math.sqrt(num / den)) if den > 0 else float(math.sqrt(num))
