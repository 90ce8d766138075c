import math
import os
import subprocess
import sys

import numpy as np
import pytest

from sphmean import _leapfrog
from sphmean.darboux import _apply_tridiag, _fv_coefficients, stable_time_step


def problem(n, m, nr, T=2.0):
    dr = 3.0 / (nr - 1)
    lower, diag, upper = _fv_coefficients(n, m, nr, dr)
    dt = 0.9 * min(dr, stable_time_step(n, m, nr, dr))
    nt = math.ceil(T / dt)
    dt = T / nt
    r = np.linspace(0.0, 3.0, nr)
    f = np.exp(-(((r - 1.5) / 0.5) ** 2))
    g = np.zeros((nt + 1, nr))
    g[0] = f
    g[1] = f + dt**2 / (2 * n) * _apply_tridiag(lower, diag, upper, f)
    s = dt**2
    return g, (lower * s, diag * s, upper * s, float(n - 1))


@pytest.mark.skipif(_leapfrog.compiled_leapfrog is None, reason="compiled extension not built")
@pytest.mark.parametrize("n,m,nr", [(2, 0, 129), (3, 1, 257), (2, 2, 257)])
def test_backends_agree(n, m, nr):
    g, coeffs = problem(n, m, nr)
    a, b = g.copy(), g.copy()
    assert _leapfrog.python_leapfrog(a, *coeffs) == -1
    assert _leapfrog.compiled_leapfrog(b, *coeffs) == -1
    assert np.max(np.abs(a - b)) < 1e-10


@pytest.mark.parametrize("kernel", ["python", "compiled"])
def test_blowup_is_reported(kernel):
    fn = _leapfrog.python_leapfrog if kernel == "python" else _leapfrog.compiled_leapfrog
    if fn is None:
        pytest.skip("compiled extension not built")
    g, (lo, di, up, nm1) = problem(2, 0, 65)
    # a hugely oversized step makes the recurrence explode
    bad = fn(g, lo * 1e6, di * 1e6, up * 1e6, nm1)
    assert bad > 1


@pytest.mark.parametrize("flag,expected", [("1", "python"), ("", None)])
def test_backend_selection_env(flag, expected):
    env = dict(os.environ, SPHMEAN_PURE_PYTHON=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from sphmean import _leapfrog; print(_leapfrog.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    ).stdout.strip()
    if expected is None:
        expected = "cython" if _leapfrog.compiled_leapfrog is not None else "python"
    assert out == expected
