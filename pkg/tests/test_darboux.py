import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gamma

from sphmean.darboux import (
    EPDGrid,
    apply_B,
    apply_Q,
    apply_Q_power,
    corrupted_q,
    energy_profile,
    epd_solve,
    epd_step_back,
    intertwine_residual,
    intertwine_residual_power,
    shell_ball_measure,
    stable_time_step,
    trace_symmetry_check,
)
from sphmean.errors import InputError, InstabilityError
from sphmean.harmonics import ModeIndex
from sphmean.profile import RadialProfile, uniform_grid


def prof(r, v, mode=None):
    return RadialProfile(mode, r, v)


def test_apply_Q_examples():
    r = uniform_grid(1.0, 3.0, 201)
    u = prof(r, np.exp(r))
    assert np.array_equal(apply_Q(2, 0, u).values, u.values)
    assert np.allclose(apply_Q(2, 1, prof(r, r**2)).values, 2 * r**2, atol=1e-10)
    with pytest.raises(InputError):
        apply_Q(2, 1, prof(uniform_grid(0.0, 1.0, 11), np.ones(11)))


@pytest.mark.parametrize("i", [0, 1, 2])
def test_Q3_annihilates_kernel_powers(i):
    n, m = 2, 3
    errs = []
    for N in (201, 401, 801):
        r = uniform_grid(1.0, 3.0, N)
        q = apply_Q(n, m, prof(r, r ** (-n - 2 * i))).values
        errs.append(np.max(np.abs(q[(r >= 1.2) & (r <= 2.8)])))
        assert errs[-1] < 10 * r[1] ** 2
    if i == 2:  # the lower powers cancel beyond second order
        assert 3 < errs[1] / errs[2] < 5


def test_apply_Q_power_examples():
    assert apply_Q_power(5, 4, 0) == 1
    assert apply_Q_power(2, 2, -4) == 0
    assert apply_Q_power(3, 2, 2) == Fraction(7, 3)


@given(st.integers(2, 3), st.integers(0, 8), st.integers(-40, 10))
def test_Q_power_zero_set(n, m, p):
    assert (apply_Q_power(n, m, p) == 0) == (p in {-n - 2 * i for i in range(m)})


@given(st.integers(2, 3), st.integers(0, 8), st.fractions(min_value=-20, max_value=20, max_denominator=50))
def test_intertwining_exact_on_powers(n, m, p):
    assert intertwine_residual_power(n, m, p) == 0


def test_intertwining_fd_path():
    r = uniform_grid(0.5, 4.0, 201)
    assert intertwine_residual(2, 0, prof(r, np.exp(-(r**2)))) < 1e-12
    res = [intertwine_residual(3, 2, prof(g, np.exp(-(g**2)))) for g in (uniform_grid(0.5, 4, N) for N in (281, 561))]
    assert 3 < res[0] / res[1] < 5
    with pytest.raises(InputError):
        intertwine_residual(2, 4, prof(uniform_grid(1, 2, 15), np.ones(15)))


def test_corrupted_factor_breaks_identity():
    with corrupted_q(0.5):
        assert intertwine_residual_power(2, 3, 2) != 0
    assert intertwine_residual_power(2, 3, 2) == 0


def test_factor_orders_agree():
    # every factor is (r/c) D + 1 with the same discrete r D, so the stencils commute
    r = uniform_grid(1.0, 3.0, 401)
    u = prof(r, np.sin(2 * r) * np.exp(-r))
    d = apply_Q(2, 3, u).values - apply_Q(2, 3, u, order="outer-first").values
    assert np.max(np.abs(d)) < 1e-10


def test_apply_B_on_even_power():
    r = uniform_grid(0.0, 2.0, 101)
    # B_{r,m} r^2 = 2 (n + 2m), including the origin row
    assert np.allclose(apply_B(3, 2, prof(r, r**2)).values, 2 * (3 + 4), atol=1e-8)


@pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
def test_epd_constant_and_errors():
    r = uniform_grid(0.0, 3.0, 121)
    g = epd_solve(2, 0, prof(r, np.full(121, 1.5)), 2.0)
    assert np.max(np.abs(g.values - 1.5)) < 1e-12
    assert g.t[-1] == pytest.approx(2.0)
    assert g.dt <= 0.9 * g.dr + 1e-15
    with pytest.raises(InputError):
        epd_solve(2, 0, prof(r, np.ones(121)), 2.0, cfl=1.2)
    with pytest.raises(InputError):
        epd_solve(2, 0, prof(r, np.ones(121)), 3.5)
    bad = np.ones(121)
    bad[50] = np.inf
    with pytest.raises(InstabilityError) as info:
        epd_solve(2, 0, prof(r, bad), 1.0)
    assert info.value.step is not None


@pytest.mark.parametrize("n,m", [(2, 0), (2, 3), (3, 1), (3, 6)])
def test_stable_step_scales_with_dr(n, m):
    r1 = stable_time_step(n, m, 201, 0.01)
    r2 = stable_time_step(n, m, 401, 0.005)
    assert r1 / r2 == pytest.approx(2.0, rel=1e-3)


def test_stable_step_values():
    # eigenvalue oracle for the node-0 ratio table (n = 2)
    ratios = [stable_time_step(2, m, 2001, 1.0 / 2000) * 2000 for m in range(0, 9, 4)]
    assert ratios == pytest.approx([0.909, 0.447, 0.333], abs=2e-3)


def test_epd_step_back_recovers_start():
    r = uniform_grid(0.0, 4.0, 201)
    f = np.exp(-(((r - 1.5) / 0.5) ** 2))
    g = epd_solve(2, 1, prof(r, f, ModeIndex(2, 1, 1)), 1.0)
    back = epd_step_back(2, g)
    assert np.max(np.abs(back[0] - f)) < 1e-8
    g3 = epd_solve(3, 1, prof(r, f), 1.0)
    back3 = epd_step_back(3, g3)
    assert np.isnan(back3[0]).all()
    assert np.max(np.abs(back3[1] - g3.values[1])) < 1e-8


def test_trace_check_zero_and_small():
    r = uniform_grid(0.0, 3.0, 1024)
    zero = prof(r, np.zeros(r.size))
    _, d = trace_symmetry_check(2, 2, zero, epd_solve(2, 2, zero, 2.5))
    assert np.all(d == 0.0)
    f = prof(r, np.exp(-(((r - 1.5) / 0.5) ** 2)))
    _, d = trace_symmetry_check(2, 1, f, epd_solve(2, 1, f, 2.5))
    assert np.max(d) < 1e-3


def test_grid_csv(tmp_path):
    g = EPDGrid(ModeIndex(2, 0, 1), 0.5, 0.25, np.arange(6.0).reshape(2, 3))
    g.write_csv(tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "r,t,value"
    assert lines[1:3] == ["0,0,0", "0.5,0,1"]
    assert lines[4] == "0,0.25,3"


@pytest.mark.parametrize("N", [2, 3, 6])
def test_shell_measure_concentric(N):
    rho = np.array([0.2, 0.5, 0.95])
    area = 2 * math.pi ** (N / 2) / gamma(N / 2)
    assert np.allclose(shell_ball_measure(N, rho, 0.0, 0.9), [area * 0.2 ** (N - 1), area * 0.5 ** (N - 1), 0.0])


@pytest.mark.parametrize("N", [2, 3, 6])
@pytest.mark.parametrize("dist", [0.4, 0.7])
def test_shell_measure_integrates_to_ball_volume(N, dist):
    R = 0.9
    rho = np.linspace(0.0, dist + R, 20001)
    vol = np.trapezoid(shell_ball_measure(N, rho, dist, R), rho)
    exact = math.pi ** (N / 2) * R**N / gamma(N / 2 + 1)
    assert vol == pytest.approx(exact, rel=1e-5)


def test_energy_of_zero_and_decay():
    r = uniform_grid(0.0, 4.0, 401)
    zero = epd_solve(2, 0, prof(r, np.zeros(401)), 2.0)
    _, e = energy_profile(2, 0, zero, 0.0, 1.5)
    assert np.all(e == 0.0)
    x = (r - 1.0) / 0.6
    g = epd_solve(2, 1, prof(r, np.where(abs(x) < 1, (1 - x**2) ** 4, 0.0)), 3.0)
    t, e = energy_profile(2, 1, g, 0.0, 2.0)
    assert e[0] > 0
    assert np.max(np.diff(e)) <= 0.1 * r[1] * e[0]
    with pytest.raises(InputError):
        energy_profile(2, 1, g, 3.0, 2.0)
