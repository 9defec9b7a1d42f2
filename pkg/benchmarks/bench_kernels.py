#!/usr/bin/env python3
"""Benchmark the numba-compiled kernels against the pure-numpy fallbacks.

Usage: python benchmarks/bench_kernels.py [--repeats N]

The same comparison can be forced package-wide by setting DRIFTLAB_NUMBA=0,
which routes all callers through the numpy implementations.
"""

import argparse
import time

import numpy as np

from driftlab import _kernels


def timeit(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_dtw(repeats):
    print("dtw_cost (accumulated cost matrix, euclidean point cost)")
    rng = np.random.default_rng(0)
    for n, m in ((100, 100), (300, 300), (500, 400)):
        a = rng.uniform(0, 1000, size=(n, 2))
        b = rng.uniform(0, 1000, size=(m, 2))
        t_np = timeit(_kernels._dtw_cost_numpy, a, b, repeats=repeats)
        row = f"  {n}x{m}: numpy {t_np * 1e3:8.2f} ms"
        if _kernels.NUMBA_ENABLED:
            _kernels._dtw_cost_jit(a, b)  # compile outside the timer
            t_jit = timeit(_kernels._dtw_cost_jit, a, b, repeats=repeats)
            row += f" | numba {t_jit * 1e3:8.2f} ms | speedup {t_np / t_jit:6.1f}x"
        print(row)


def bench_kmeans(repeats):
    print("kmeans_1d_lloyd (sorted 1-D Lloyd iterations)")
    rng = np.random.default_rng(1)
    for n, k in ((500, 10), (5000, 14), (20000, 14)):
        values = np.sort(rng.normal(0, 100, size=n))
        seeds = np.sort(rng.choice(np.unique(values), size=k, replace=False))
        t_np = timeit(_kernels._kmeans_1d_numpy, values, seeds, 100, repeats=repeats)
        row = f"  n={n:6d} k={k:2d}: numpy {t_np * 1e3:8.2f} ms"
        if _kernels.NUMBA_ENABLED:
            _kernels._kmeans_1d_jit(values, seeds, 100)
            t_jit = timeit(_kernels._kmeans_1d_jit, values, seeds, 100, repeats=repeats)
            row += f" | numba {t_jit * 1e3:8.2f} ms | speedup {t_np / t_jit:6.1f}x"
        print(row)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    print(f"numba path enabled: {_kernels.NUMBA_ENABLED}")
    bench_dtw(args.repeats)
    bench_kmeans(args.repeats)


if __name__ == "__main__":
    main()
