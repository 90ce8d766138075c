import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sphmean.data_model import ScalarField, phantom
from sphmean.errors import InputError
from sphmean.harmonics import (
    AngularSampleSet,
    HarmonicExpansion,
    ModeIndex,
    angular_project,
    decompose,
    eval_harmonic,
    mode_count,
    modes,
    synthesize,
)
from sphmean.profile import RadialProfile, uniform_grid


def test_mode_count():
    assert mode_count(2, 0) == 1
    assert mode_count(2, 3) == 2
    assert mode_count(3, 2) == 5
    assert len(modes(3, 3)) == 1 + 3 + 5 + 7


def test_mode_index_validation():
    with pytest.raises(InputError):
        ModeIndex(2, 1, 3)
    with pytest.raises(InputError):
        ModeIndex(4, 0, 1)
    assert str(ModeIndex(3, 2, 4)) == "n3_m2_l4"


@pytest.mark.parametrize("n,order", [(2, 16), (3, 8)])
def test_angular_sample_set_invariants(n, order):
    ang = AngularSampleSet.build(n, order)
    assert np.allclose(np.linalg.norm(ang.nodes, axis=1), 1.0, atol=1e-14)
    assert np.all(ang.weights > 0)
    total = 2 * math.pi if n == 2 else 4 * math.pi
    assert ang.weights.sum() == pytest.approx(total, abs=1e-12)


def test_eval_harmonic_examples():
    assert eval_harmonic(ModeIndex(2, 0, 1), [0.6, 0.8]) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert eval_harmonic(ModeIndex(2, 1, 1), [1.0, 0.0]) == pytest.approx(1 / math.sqrt(math.pi))
    with pytest.raises(InputError):
        eval_harmonic(ModeIndex(2, 1, 1), [2.0, 0.0])


@pytest.mark.parametrize("n,order", [(2, 20), (3, 10)])
def test_orthonormality(n, order):
    ang = AngularSampleSet.build(n, order)
    ms = modes(n, ang.max_degree)
    for mode in ms:
        vals = np.array([eval_harmonic(mode, d) for d in ang.nodes])
        for other in ms:
            expect = 1.0 if other == mode else 0.0
            assert angular_project(vals, other, ang) == pytest.approx(expect, abs=1e-12)


def test_project_cos2_plus_three():
    ang = AngularSampleSet.build(2, 16)
    phi = np.arctan2(ang.nodes[:, 1], ang.nodes[:, 0])
    got = angular_project(np.cos(2 * phi) + 3, ModeIndex(2, 0, 1), ang)
    assert got == pytest.approx(3 * math.sqrt(2 * math.pi), abs=1e-12)


def test_project_rejects_unresolved_mode():
    ang = AngularSampleSet.build(2, 8)
    with pytest.raises(InputError):
        angular_project(np.ones(8), ModeIndex(2, 5, 1), ang)


@pytest.mark.parametrize("n", [2, 3])
def test_decompose_radial_square(n):
    f = phantom("harmonic-polynomial", {"expr": "x1**2 + x2**2" + (" + x3**2" if n == 3 else "")}, n=n)
    ang = AngularSampleSet.build(n, 16 if n == 2 else 8)
    r = uniform_grid(0.5, 2.0, 7)
    prof = decompose(f, r, 3, ang)
    scale = math.sqrt(2 * math.pi if n == 2 else 4 * math.pi)
    for mode, p in prof.items():
        expect = r**2 * scale if mode.m == 0 else 0.0
        assert np.allclose(p.values, expect, atol=1e-12)


def test_decompose_x1_is_constant_profile():
    f = phantom("harmonic-polynomial", {"expr": "x1"}, n=2)
    prof = decompose(f, uniform_grid(0.5, 2.0, 7), 3, AngularSampleSet.build(2, 16))
    for mode, p in prof.items():
        expect = math.sqrt(math.pi) if (mode.m, mode.l) == (1, 1) else 0.0
        assert np.allclose(p.values, expect, atol=1e-12)


def test_synthesize_examples():
    assert synthesize({}, [0.3, 0.4]) == 0.0
    r = uniform_grid(0.0, 2.0, 11)
    one = {ModeIndex(2, 0, 1): RadialProfile(None, r, np.full(11, 2.0))}
    assert synthesize(one, [0.3, 0.4]) == pytest.approx(2.0 / math.sqrt(2 * math.pi))
    assert HarmonicExpansion(one, 2)(np.zeros(2)) == pytest.approx(2.0 / math.sqrt(2 * math.pi))


@pytest.mark.parametrize("n", [2, 3])
def test_polynomial_round_trip(n):
    expr = "1 + x1 - 2*x2**2 + x1*x2" + (" + x3**3 - x1*x3" if n == 3 else " + x1**3")
    f = phantom("harmonic-polynomial", {"expr": expr}, n=n)
    ang = AngularSampleSet.build(n, 16 if n == 2 else 8)
    r = uniform_grid(0.0, 2.0, 41)[1:]
    ex = HarmonicExpansion(decompose(f, r, 3, ang), n)
    pts = np.random.default_rng(0).uniform(-1, 1, (50, n))
    pts *= 1.3 / np.maximum(1.0, np.linalg.norm(pts, axis=1))[:, None]
    pts = pts[np.linalg.norm(pts, axis=1) > 0.06]
    assert np.allclose(ex(pts), f(pts), atol=1e-10)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_decompose_is_linear(alpha, beta):
    n = 2
    f = phantom("mode-bump", {"m": 1, "l": 1, "rc": 1.0, "w": 0.4}, n=n)
    g = phantom("mode-bump", {"m": 2, "l": 2, "rc": 1.2, "w": 0.3}, n=n)
    combo = ScalarField(n, lambda p: alpha * f(p) + beta * g(p))
    ang = AngularSampleSet.build(n, 16)
    r = uniform_grid(0.5, 2.0, 9)
    df, dg, dc = (decompose(h, r, 3, ang) for h in (f, g, combo))
    for mode in dc:
        assert np.allclose(dc[mode].values, alpha * df[mode].values + beta * dg[mode].values, atol=1e-12)


@given(st.integers(0, 3), st.integers(0, 6), st.floats(0.3, 2.0))
def test_random_expansion_round_trip(m, l_seed, scale):
    n = 3
    mode = ModeIndex(n, m, 1 + l_seed % (2 * m + 1))
    r = uniform_grid(0.0, 2.0, 81)
    prof = {mode: RadialProfile(mode, r, scale * np.exp(-r))}
    field = HarmonicExpansion(prof, n)
    back = decompose(ScalarField(n, field), r[1:], 3, AngularSampleSet.build(n, 8))
    for other, p in back.items():
        expect = scale * np.exp(-r[1:]) if other == mode else 0.0
        assert np.allclose(p.values, expect, atol=1e-10)
