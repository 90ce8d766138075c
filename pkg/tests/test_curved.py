import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from sphmean.curved import SpaceKind, apply_curved_Q, apply_D, apply_gamma, curved_intertwine_residual
from sphmean.errors import InputError
from sphmean.profile import RadialProfile, uniform_grid


def prof(r, v):
    return RadialProfile(None, r, v)


def test_parse():
    assert SpaceKind.parse("Hyperbolic") is SpaceKind.HYPERBOLIC
    assert SpaceKind.parse(SpaceKind.SPHERICAL) is SpaceKind.SPHERICAL
    with pytest.raises(InputError):
        SpaceKind.parse("flat-torus")


def test_D_examples():
    r = uniform_grid(0.5, 2.5, 2001)
    d = apply_D("hyperbolic", 2, 0, prof(r, np.cosh(r))).values
    assert np.allclose(d[1:-1], 2 * np.cosh(r[1:-1]), rtol=1e-6)
    r = uniform_grid(0.5, 2.5, 2001)
    d = apply_D("spherical", 2, 1, prof(r, np.sin(r))).values
    mid = np.argmin(np.abs(r - np.pi / 2))
    assert d[mid] == pytest.approx(-2 * np.sin(r[mid]), abs=1e-6)


@pytest.mark.parametrize("space", [SpaceKind.HYPERBOLIC, SpaceKind.SPHERICAL, SpaceKind.EUCLIDEAN])
@pytest.mark.parametrize("n,k", [(2, 1), (3, 1), (3, 2)])
def test_gamma_annihilates_inverse_sine_power(space, n, k):
    errs = []
    for N in (401, 801):
        r = uniform_grid(0.5, 2.5, N)
        u = space.sin(r) ** (-(n + k - 2))
        errs.append(np.max(np.abs(apply_gamma(space, n, k, prof(r, u)).values[1:-1])))
    assert errs[1] < 1e-2
    assert 3 < errs[0] / errs[1] < 5


def test_Q_order_zero_is_identity():
    r = uniform_grid(0.5, 1.5, 11)
    p = prof(r, np.exp(r))
    assert apply_curved_Q("hyperbolic", 3, 0, p) is p
    r21 = uniform_grid(0.5, 1.5, 21)
    assert curved_intertwine_residual("spherical", 2, 0, prof(r21, np.cos(r21))) == 0.0
    with pytest.raises(InputError):
        apply_curved_Q("hyperbolic", 3, -1, p)


@pytest.mark.parametrize(
    "space,radii",
    [
        ("hyperbolic", uniform_grid(0.0, 1.0, 11)),
        ("spherical", uniform_grid(2.0, np.pi, 11)),
        ("euclidean", uniform_grid(-1.0, 1.0, 11)),
    ],
)
def test_singular_grids_rejected(space, radii):
    with pytest.raises(InputError):
        apply_D(space, 2, 1, prof(radii, np.ones_like(radii)))


def test_too_few_nodes_after_trim():
    r = uniform_grid(0.5, 1.0, 12)
    with pytest.raises(InputError):
        curved_intertwine_residual("hyperbolic", 2, 3, prof(r, r))


def _symbolic_ops(space, n, m):
    r = sp.symbols("r", positive=True)
    S = {"hyperbolic": sp.sinh(r), "spherical": sp.sin(r), "euclidean": r}[space]
    T = sp.diff(S, r) / S
    u = sp.Function("u")(r)

    def D(mm, e):
        return sp.diff(e, r, 2) + (n - 1) * T * sp.diff(e, r) - mm * (mm + n - 2) / S**2 * e

    def Q(e):
        for k in range(m, 0, -1):
            e = sp.diff(e, r) + (n + k - 2) * T * e
        return e

    return sp.simplify(Q(D(m, u)) - D(0, Q(u)))


@pytest.mark.parametrize("space", ["hyperbolic", "spherical", "euclidean"])
@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("m", [1, 2])
def test_symbolic_intertwining(space, n, m):
    # independent check that the operator family satisfies the identity exactly
    assert _symbolic_ops(space, n, m) == 0


@pytest.mark.parametrize("space", [SpaceKind.HYPERBOLIC, SpaceKind.SPHERICAL])
@pytest.mark.parametrize("n,m", [(2, 1), (3, 2), (2, 4)])
def test_fd_intertwining_second_order(space, n, m):
    res = []
    for N in (81, 161, 321):
        r = uniform_grid(0.5, 2.5, N)
        res.append(curved_intertwine_residual(space, n, m, prof(r, np.exp(-(((r - 1.5) / 0.3) ** 2)))))
    assert 3 < res[0] / res[1] < 5
    assert 3 < res[1] / res[2] < 5


@given(r0=st.floats(1e-3, 5e-3))
def test_small_radius_matches_euclidean(r0):
    # sinh r, sin r and r agree to O(r^3), so the operators coincide to O(r^2) relative
    r = uniform_grid(r0, 2 * r0, 41)
    u = prof(r, np.cos(r) + r**2)
    e = apply_D("euclidean", 3, 2, u).values
    for space in ("hyperbolic", "spherical"):
        c = apply_D(space, 3, 2, u).values
        assert np.max(np.abs(c - e)) < 10 * np.max(np.abs(e)) * (2 * r0) ** 2 + 1e-6
