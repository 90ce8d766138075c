"""Phantom fields, annulus geometry, spherical-mean datasets and run config.

File formats
------------
Dataset CSV
    ``#``-prefixed ``key = value`` metadata lines (``n``, ``a``, ``A``,
    ``r0``, ``R_ext``, ``admissible``), then the header ``cx,cy[,cz],t,value``
    and one row per sample. Floats are written with 17 significant digits.
Config
    Line-based ``key = value``; ``#`` starts a comment.
"""

import math
import re
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError, InputError, ParseError
from .harmonics import SUPPORTED_DIMENSIONS, ModeIndex, _harmonic_values, mode_count
from .profile import RadialProfile, read_profile_csv, write_profile_csv  # noqa: F401

# ---------------------------------------------------------------- fields


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A closed-form function on R^n.

    ``support`` is ``None`` for an entire-space field, otherwise a closed
    radial interval ``(lo, hi)``; points with ``|x|`` outside it evaluate to 0.
    ``exact_profiles`` optionally maps :class:`ModeIndex` to callables giving
    the radial coefficient ``f_ml(r)`` in closed form.
    """

    n: int
    evaluator: object
    support: tuple = None
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    exact_profiles: dict = field(default_factory=dict)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[-1] != self.n:
            raise InputError(f"field is {self.n}-dimensional, got points of width {pts.shape[-1]}")
        vals = np.asarray(self.evaluator(pts), dtype=float)
        if self.support is not None:
            r = np.linalg.norm(pts, axis=-1)
            lo, hi = self.support
            vals = np.where((r >= lo) & (r <= hi), vals, 0.0)
        return float(vals[0]) if single else vals

    def restricted(self, lo, hi):
        """Same field, zero outside the closed shell ``lo <= |x| <= hi``."""
        if self.support is not None:
            lo, hi = max(lo, self.support[0]), min(hi, self.support[1])
        return replace(self, support=(float(lo), float(hi)))

    def __add__(self, other):
        return phantom("sum-of", {"terms": [self, other]}, n=self.n)

    def describe(self):
        if self.kind == "sum-of":
            return " + ".join(t.describe() for t in self.params["terms"])
        args = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.kind}({args})"


@dataclass(frozen=True)
class AnnulusGeometry:
    """Annulus ``a < |x| < A`` with the prior-region bounds."""

    a: float
    A: float
    r0: float = 0.0
    R_ext: float = None

    def __post_init__(self):
        if not self.a > 0:
            raise ConfigError(f"a > 0 violated (a={self.a})")
        if not self.a < self.A:
            raise ConfigError(f"a < A violated (a={self.a}, A={self.A})")
        if not 0 <= self.r0 < self.a:
            raise ConfigError(f"0 <= r0 < a violated (r0={self.r0}, a={self.a})")
        if self.R_ext is not None and not self.A < self.R_ext:
            raise ConfigError(f"A < R_ext violated (A={self.A}, R_ext={self.R_ext})")

    def contains(self, centers, radii):
        """Region-A predicate: ``|x| + a < t`` and ``|x| + t < A`` (vectorized)."""
        c = np.asarray(centers, dtype=float)
        t = np.asarray(radii, dtype=float)
        rho = np.linalg.norm(c, axis=-1)
        return (rho + self.a < t) & (rho + t < self.A)

    def center_cap(self, s):
        """Largest center radius admissible for sphere radius ``s`` (may be <= 0)."""
        return np.minimum(np.asarray(s) - self.a, self.A - np.asarray(s))


@dataclass(frozen=True)
class SphericalMeanSample:
    center: tuple
    radius: float
    value: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InputError(f"sample radius must be positive, got {self.radius}")


@dataclass(frozen=True, eq=False)
class SphericalMeanDataset:
    """Spherical-mean samples stored column-wise.

    ``dropped`` counts requested samples that failed the region-A predicate
    during generation (not persisted).
    """

    geometry: AnnulusGeometry
    n: int
    centers: np.ndarray
    radii: np.ndarray
    values: np.ndarray
    dropped: int = 0

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float).reshape(-1, self.n)
        t = np.asarray(self.radii, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if not (c.shape[0] == t.size == v.size):
            raise InputError("dataset columns have different lengths")
        if np.any(t <= 0):
            raise InputError("sample radius must be positive")
        for arr in (c, t, v):
            arr.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.radii.size

    @property
    def admissible(self):
        return bool(np.all(self.geometry.contains(self.centers, self.radii)))

    @property
    def samples(self):
        return [
            SphericalMeanSample(tuple(c), float(t), float(v))
            for c, t, v in zip(self.centers, self.radii, self.values)
        ]

    def with_values(self, values):
        return replace(self, values=np.asarray(values, dtype=float))


# -------------------------------------------------------------- phantoms

PHANTOM_KINDS = ("radial-gaussian-ring", "mode-bump", "kernel-element", "harmonic-polynomial", "sum-of")

_REQUIRED = {
    "radial-gaussian-ring": ("rc", "w"),
    "mode-bump": ("m", "rc", "w"),
    "kernel-element": ("m",),
    "harmonic-polynomial": ("expr",),
    "sum-of": ("terms",),
}


def _unit(pts, r):
    d = np.zeros_like(pts)
    d[:, 0] = 1.0
    nz = r > 0
    d[nz] = pts[nz] / r[nz, None]
    return d


def _y00(n):
    return 1.0 / math.sqrt(2.0 * math.pi if n == 2 else 4.0 * math.pi)


def phantom(kind, params, n=None):
    """Build a named closed-form phantom.

    Parameters are floats except ``m``, ``l``, ``i`` (ints), ``expr`` (a
    polynomial in ``x1..xn``) and ``terms`` (a list of fields). The ambient
    dimension comes from ``n`` or ``params["n"]``. Optional ``r_inner`` and
    ``r_outer`` restrict the support.
    """
    if kind not in PHANTOM_KINDS:
        raise ConfigError(f"unknown phantom kind {kind!r}; choose from {', '.join(PHANTOM_KINDS)}")
    params = dict(params)
    missing = [k for k in _REQUIRED[kind] if k not in params]
    if missing:
        raise ConfigError(f"phantom {kind!r} missing parameter(s): {', '.join(missing)}")
    if n is None:
        n = params.pop("n", None)
        if n is None and kind == "sum-of" and params["terms"]:
            n = params["terms"][0].n
    else:
        params.pop("n", None)
    if n is None:
        raise ConfigError("phantom needs the ambient dimension n")
    n = int(n)
    if n not in SUPPORTED_DIMENSIONS:
        raise ConfigError(f"unsupported dimension n={n}")
    r_inner = params.pop("r_inner", None)
    r_outer = params.pop("r_outer", None)
    try:
        fld = _BUILDERS[kind](n, params)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (ConfigError, InputError)):
            raise
        raise ConfigError(f"bad parameters for phantom {kind!r}: {exc}") from None
    if r_inner is not None or r_outer is not None:
        fld = fld.restricted(float(r_inner or 0.0), float(r_outer if r_outer is not None else np.inf))
    return fld


def _gauss(r, rc, w):
    return np.exp(-(((r - rc) / w) ** 2))


def _ring(n, p):
    rc, w, amp = float(p["rc"]), float(p["w"]), float(p.get("amp", 1.0))

    def ev(pts):
        return amp * _gauss(np.linalg.norm(pts, axis=1), rc, w)

    exact = {ModeIndex(n, 0, 1): lambda r: amp * _gauss(np.asarray(r, dtype=float), rc, w) / _y00(n)}
    return ScalarField(n, ev, None, "radial-gaussian-ring", {"rc": rc, "w": w, "amp": amp}, exact)


def _mode_bump(n, p):
    m, l = int(p["m"]), int(p.get("l", 1))
    rc, w, amp = float(p["rc"]), float(p["w"]), float(p.get("amp", 1.0))
    mode = ModeIndex(n, m, l)

    def ev(pts):
        r = np.linalg.norm(pts, axis=1)
        return amp * _gauss(r, rc, w) * r**m * _harmonic_values(n, m, l, _unit(pts, r))

    exact = {mode: lambda r: amp * _gauss(np.asarray(r, dtype=float), rc, w)}
    params = {"m": m, "l": l, "rc": rc, "w": w, "amp": amp}
    return ScalarField(n, ev, None, "mode-bump", params, exact)


def _kernel_element(n, p):
    m, l, i, c = int(p["m"]), int(p.get("l", 1)), int(p.get("i", 0)), float(p.get("c", 1.0))
    if m < 1:
        raise ConfigError("kernel-element needs m >= 1 (the degree-0 kernel is trivial)")
    if not 0 <= i < m:
        raise ConfigError(f"kernel-element needs 0 <= i < m, got i={i}, m={m}")
    mode = ModeIndex(n, m, l)
    p_exp = -n - 2 * i

    def ev(pts):
        r = np.linalg.norm(pts, axis=1)
        out = np.zeros_like(r)
        nz = r > 0
        d = _unit(pts, r)
        out[nz] = c * r[nz] ** (m + p_exp) * _harmonic_values(n, m, l, d[nz])
        return out

    exact = {mode: lambda r: c * np.asarray(r, dtype=float) ** p_exp}
    return ScalarField(n, ev, None, "kernel-element", {"m": m, "l": l, "i": i, "c": c}, exact)


def _polynomial(n, p):
    import sympy

    expr_text = str(p["expr"])
    syms = sympy.symbols(" ".join(f"x{k}" for k in range(1, n + 1)))
    syms = syms if isinstance(syms, tuple) else (syms,)
    try:
        expr = sympy.sympify(expr_text, locals={str(s): s for s in syms})
        sympy.Poly(expr, *syms)
    except (sympy.SympifyError, sympy.PolynomialError, TypeError) as exc:
        raise ConfigError(f"expr {expr_text!r} is not a polynomial in x1..x{n}: {exc}") from None
    fn = sympy.lambdify(syms, expr, "numpy")

    def ev(pts):
        return np.broadcast_to(fn(*pts.T), pts.shape[:1]).astype(float)

    return ScalarField(n, ev, None, "harmonic-polynomial", {"expr": expr_text})


def _sum_of(n, p):
    terms = list(p["terms"])
    for t in terms:
        if not isinstance(t, ScalarField) or t.n != n:
            raise ConfigError("sum-of terms must be fields of matching dimension")

    def ev(pts):
        out = np.zeros(pts.shape[0])
        for t in terms:
            out += t(pts)
        return out

    exact = {}
    if all(t.support is None for t in terms):
        for t in terms:
            for mode, fn in t.exact_profiles.items():
                prev = exact.get(mode)
                exact[mode] = fn if prev is None else (lambda r, f=prev, g=fn: f(r) + g(r))
    return ScalarField(n, ev, None, "sum-of", {"terms": terms}, exact)


_BUILDERS = {
    "radial-gaussian-ring": _ring,
    "mode-bump": _mode_bump,
    "kernel-element": _kernel_element,
    "harmonic-polynomial": _polynomial,
    "sum-of": _sum_of,
}


def _split_top(text, sep):
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts]


_TERM = re.compile(r"^([a-z-]+)\s*\((.*)\)$", re.S)


def parse_phantom(text, n):
    """Parse ``kind(key=value, ...) + kind(...)`` into a field."""
    terms = []
    for chunk in _split_top(text, "+"):
        if not chunk:
            raise ConfigError(f"empty term in phantom description {text!r}")
        match = _TERM.match(chunk)
        if not match:
            raise ConfigError(f"cannot parse phantom term {chunk!r}")
        kind, body = match.group(1), match.group(2).strip()
        params = {}
        if body:
            for item in _split_top(body, ","):
                if "=" not in item:
                    raise ConfigError(f"phantom parameter {item!r} is not key=value")
                k, v = (s.strip() for s in item.split("=", 1))
                params[k] = v if k == "expr" else _number(v, k)
        terms.append(phantom(kind, params, n=n))
    if len(terms) == 1:
        return terms[0]
    return phantom("sum-of", {"terms": terms}, n=n)


def _number(text, key):
    try:
        val = float(text)
    except ValueError:
        raise ConfigError(f"parameter {key}={text!r} is not a number") from None
    if not math.isfinite(val):
        raise ConfigError(f"parameter {key} must be finite")
    return int(val) if key in ("m", "l", "i") else val


# -------------------------------------------------------------- datasets


def _fmt(x):
    return f"{x:.17g}"


def write_dataset(dataset, path):
    g = dataset.geometry
    axes = ["cx", "cy", "cz"][: dataset.n]
    with open(path, "w", newline="") as fh:
        fh.write("# sphmean dataset\n")
        fh.write(f"# n = {dataset.n}\n# a = {_fmt(g.a)}\n# A = {_fmt(g.A)}\n# r0 = {_fmt(g.r0)}\n")
        if g.R_ext is not None:
            fh.write(f"# R_ext = {_fmt(g.R_ext)}\n")
        fh.write(f"# admissible = {int(dataset.admissible)}\n")
        fh.write(",".join(axes + ["t", "value"]) + "\n")
        for c, t, v in zip(dataset.centers, dataset.radii, dataset.values):
            fh.write(",".join(_fmt(x) for x in (*c, t, v)) + "\n")


def read_dataset(path):
    meta = {}
    rows = []
    header = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, v = (s.strip() for s in body.split("=", 1))
                    meta[k] = v
                continue
            if header is None:
                header = line.split(",")
                n = len(header) - 2
                expected = ["cx", "cy", "cz"][:n] + ["t", "value"]
                if n not in SUPPORTED_DIMENSIONS or header != expected:
                    raise ParseError(f"bad header {line!r}", lineno, path)
                continue
            parts = line.split(",")
            if len(parts) != len(header):
                raise ParseError(f"expected {len(header)} columns, got {len(parts)}", lineno, path)
            try:
                vals = [float(p) for p in parts]
            except ValueError as exc:
                raise ParseError(str(exc), lineno, path) from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError("non-finite value", lineno, path)
            if vals[-2] <= 0:
                raise ParseError("sample radius must be positive", lineno, path)
            rows.append(vals)
    if header is None:
        raise ParseError("missing header", None, path)
    n = len(header) - 2
    try:
        geometry = AnnulusGeometry(
            float(meta["a"]),
            float(meta["A"]),
            float(meta.get("r0", 0.0)),
            float(meta["R_ext"]) if "R_ext" in meta else None,
        )
    except KeyError as exc:
        raise ParseError(f"missing metadata {exc.args[0]!r}", None, path) from None
    if "n" in meta and int(meta["n"]) != n:
        raise ParseError(f"metadata n={meta['n']} disagrees with header", None, path)
    arr = np.array(rows, dtype=float).reshape(-1, n + 2)
    ds = SphericalMeanDataset(geometry, n, arr[:, :n], arr[:, n], arr[:, n + 1])
    if "admissible" in meta and bool(int(meta["admissible"])) != ds.admissible:
        raise ParseError(
            f"stored admissible={meta['admissible']} but samples give {int(ds.admissible)}", None, path
        )
    return ds


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration.

    Beyond the geometry and discretization keys, ``phantom`` holds a phantom
    description (see :func:`parse_phantom`), ``rho_max`` caps the center radii used
    for trace extraction and ``trim`` is the fraction of ``A - a`` removed at
    each end of the annulus when scoring reconstructions.
    """

    n: int
    a: float
    A: float
    r0: float = 0.0
    R_ext: float = None
    M_max: int = 8
    radial_points: int = 401
    angular_points: int = 32
    quad_order: int = 256
    cfl: float = 0.9
    s_points: int = 201
    extrap_radii: int = 6
    fd_order: int = 4
    prior: str = "interior"
    out_dir: str = None
    phantom: str = None
    seed: int = 0
    rho_max: float = 0.25
    trim: float = 0.1

    def __post_init__(self):
        if self.n not in SUPPORTED_DIMENSIONS:
            raise ConfigError(f"n must be 2 or 3, got {self.n}")
        self.geometry  # validates the inequalities
        checks = [
            (self.M_max >= 0, "M_max >= 0"),
            (self.radial_points >= 8, "radial_points >= 8"),
            (self.s_points >= 9, "s_points >= 9"),
            (self.extrap_radii >= 2, "extrap_radii >= 2"),
            (self.quad_order >= 8, "quad_order >= 8"),
            (0 < self.cfl <= 1, "0 < cfl <= 1"),
            (1 <= self.fd_order <= 8, "1 <= fd_order <= 8"),
            (self.prior in ("interior", "exterior"), "prior in {interior, exterior}"),
            (self.rho_max > 0, "rho_max > 0"),
            (0 <= self.trim < 0.5, "0 <= trim < 0.5"),
        ]
        for ok, text in checks:
            if not ok:
                raise ConfigError(f"{text} violated")
        if self.prior == "exterior" and self.R_ext is None:
            raise ConfigError("prior = exterior requires R_ext")
        min_ang = 2 * self.M_max + 2 if self.n == 2 else self.M_max + 1
        if self.angular_points < min_ang:
            raise ConfigError(f"angular_points >= {min_ang} violated (needed for M_max={self.M_max})")

    @property
    def geometry(self):
        return AnnulusGeometry(self.a, self.A, self.r0, self.R_ext)

    @property
    def trim_bounds(self):
        w = self.trim * (self.A - self.a)
        return self.a + w, self.A - w

    def replace(self, **kw):
        return replace(self, **kw)


_CONFIG_KEYS = {f.name for f in fields(RunConfig)}
_INT_KEYS = {"n", "M_max", "radial_points", "angular_points", "quad_order", "s_points", "extrap_radii", "fd_order", "seed"}
_STR_KEYS = {"prior", "out_dir", "phantom"}
_REQUIRED_KEYS = ("n", "a", "A")


def parse_config_text(text, source="<config>"):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{source}: line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}: line {lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, val, f"{source}: line {lineno}")
    for key in _REQUIRED_KEYS:
        if key not in values:
            raise ConfigError(f"{source}: missing required key {key!r}")
    return RunConfig(**values)


def _coerce(key, val, where):
    if key in _STR_KEYS:
        if not val:
            raise ConfigError(f"{where}: empty value for {key!r}")
        return val
    try:
        num = float(val)
    except ValueError:
        raise ConfigError(f"{where}: {key} = {val!r} is not a number") from None
    if not math.isfinite(num):
        raise ConfigError(f"{where}: {key} must be finite")
    if key in _INT_KEYS:
        if num != int(num):
            raise ConfigError(f"{where}: {key} must be an integer")
        return int(num)
    return num


def parse_config(path):
    with open(path) as fh:
        return parse_config_text(fh.read(), str(path))


def serialize_config(cfg):
    lines = []
    for f in fields(RunConfig):
        val = getattr(cfg, f.name)
        if val is None:
            continue
        if isinstance(val, float):
            val = _fmt(val)
        lines.append(f"{f.name} = {val}")
    return "\n".join(lines) + "\n"
