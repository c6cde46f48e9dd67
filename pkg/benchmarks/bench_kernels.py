"""Compiled vs pure-Python kernels: tridiagonal solve and matvec.

Usage: python benchmarks/bench_kernels.py [--n 4096 16384] [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from blowup_lab import _fallback

try:
    from blowup_lab import _kernels
except ImportError:
    _kernels = None


def system(n, seed=0):
    rng = np.random.default_rng(seed)
    lo = rng.uniform(-1, 0, n)
    up = rng.uniform(-1, 0, n)
    di = 2.5 + rng.uniform(0, 1, n)
    rhs = rng.standard_normal(n)
    return lo, di, up, rhs


def bench(mod, name, args, repeat):
    fn = getattr(mod, name)
    t = timeit.repeat(lambda: fn(*args), number=1, repeat=repeat)
    return min(t)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[1024, 8193, 65536])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'kernel':<18}{'n':>8}{'python [ms]':>14}{'cython [ms]':>14}{'speed-up':>10}{'max |diff|':>13}")
    for n in args.n:
        lo, di, up, rhs = system(n)
        for name in ("solve_tridiagonal", "tridiag_matvec"):
            tp = bench(_fallback, name, (lo, di, up, rhs), args.repeat)
            if _kernels is None:
                print(f"{name:<18}{n:>8}{1e3 * tp:>14.3f}{'-':>14}{'-':>10}{'-':>13}")
                continue
            tc = bench(_kernels, name, (lo, di, up, rhs), args.repeat)
            diff = np.max(np.abs(getattr(_fallback, name)(lo, di, up, rhs) - getattr(_kernels, name)(lo, di, up, rhs)))
            print(f"{name:<18}{n:>8}{1e3 * tp:>14.3f}{1e3 * tc:>14.3f}{tp / tc:>10.1f}{diff:>13.2e}")


if __name__ == "__main__":
    main()
