"""Time the compiled and numpy leapfrog kernels on the same EPD problems.

Usage: python3 benchmarks/bench_leapfrog.py [--repeat K]

The cases stay at low degree: the origin column of a degree-m solution behaves
like an m-th derivative, so roundoff differences between the two kernels
grow like h^-m and would swamp the comparison at high m on fine grids.
"""

import argparse
import math
import timeit

import numpy as np

from sphmean import _leapfrog
from sphmean.darboux import _fv_coefficients, _apply_tridiag, stable_time_step


def setup(n, m, nr, T=None):
    dr = 3.0 / (nr - 1)
    T = 0.8 * 3.0 if T is None else T
    lower, diag, upper = _fv_coefficients(n, m, nr, dr)
    dt = 0.9 * min(dr, stable_time_step(n, m, nr, dr))
    nt = math.ceil(T / dt)
    dt = T / nt
    r = np.linspace(0.0, 3.0, nr)
    f = np.exp(-(((r - 1.5) / 0.5) ** 2))
    g0 = np.zeros((nt + 1, nr))
    g0[0] = f
    g0[1] = f + dt**2 / (2 * n) * _apply_tridiag(lower, diag, upper, f)
    s = dt**2
    return g0, (lower * s, diag * s, upper * s, float(n - 1))


def bench(kernel, g0, coeffs, repeat):
    def run():
        g = g0.copy()
        kernel(g, *coeffs)
        return g

    out = run()
    best = min(timeit.repeat(run, number=1, repeat=repeat))
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _leapfrog.compiled_leapfrog is None:
        print("compiled kernel not built; only the numpy backend is available")
    print(f"{'n':>2} {'m':>2} {'nr':>6} {'steps':>6} {'python s':>10} {'cython s':>10} {'speedup':>8} {'max diff':>10}")
    for n, m, nr in ((2, 0, 513), (2, 0, 2049), (3, 1, 2049), (2, 2, 4097)):
        g0, coeffs = setup(n, m, nr)
        tp, gp = bench(_leapfrog.python_leapfrog, g0, coeffs, args.repeat)
        if _leapfrog.compiled_leapfrog is None:
            print(f"{n:>2} {m:>2} {nr:>6} {g0.shape[0]:>6} {tp:>10.4f} {'-':>10} {'-':>8} {'-':>10}")
            continue
        tc, gc = bench(_leapfrog.compiled_leapfrog, g0, coeffs, args.repeat)
        diff = float(np.max(np.abs(gp - gc)))
        print(f"{n:>2} {m:>2} {nr:>6} {g0.shape[0]:>6} {tp:>10.4f} {tc:>10.4f} {tp / tc:>8.1f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
