"""Time the hot kernels on both backends and report the speedup.

Imports the pure-numpy fallback and the compiled extension directly,
bypassing the import-time dispatch, so the two implementations run on
identical inputs in one process. Workloads mirror how the library calls
the kernels: split scoring over pre-sorted columns, and coordinate
descent from a cold start at a mid-path penalty.

Usage:
    python3 benchmarks/kernel_benchmark.py [--repeats N] [--seed S]
"""

import argparse
import sys
import time

import numpy as np

from ltboost._kernels import pybackend

try:
    from ltboost._kernels import _core
except ImportError:
    _core = None


def time_call(fn, repeats):
    """Median wall-clock seconds over repeated calls."""
    times = []
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        times.append(time.perf_counter() - started)
    return float(np.median(times))


def split_workload(rng, n):
    x = np.sort(rng.standard_normal(n))
    y = rng.standard_normal(n)

    def run(backend):
        return lambda: backend.best_split_feature(x, y, 1)

    return run, f"split n={n}"


def cd_workload(rng, n, k, gram):
    x = rng.standard_normal((n, k))
    y = x[:, : k // 4] @ rng.standard_normal(k // 4) + rng.standard_normal(n)
    xc = np.asfortranarray(x - x.mean(axis=0))
    yc = y - y.mean()
    col_nsq = np.einsum("ij,ij->j", xc, xc) / n
    lam = 0.1 * np.max(np.abs(xc.T @ yc)) / n

    if gram:
        g = np.ascontiguousarray(xc.T @ xc) / n
        c0 = xc.T @ yc / n

        def run(backend):
            def call():
                beta = np.zeros(k)
                c = c0.copy()
                backend.cd_sweeps_gram(g, c, beta, col_nsq, lam, 1e-9, 1000)
            return call

        return run, f"cd gram n={n} k={k}"

    def run(backend):
        def call():
            beta = np.zeros(k)
            resid = yc.copy()
            backend.cd_sweeps(xc, resid, beta, col_nsq, lam, 1e-9, 1000)
        return call

    return run, f"cd n={n} k={k}"


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7,
                        help="timing repeats per cell, median reported")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if _core is None:
        print("compiled extension not built; nothing to compare",
              file=sys.stderr)
        return 1

    rng = np.random.default_rng(args.seed)
    workloads = [
        split_workload(rng, 1_000),
        split_workload(rng, 10_000),
        split_workload(rng, 100_000),
        cd_workload(rng, 500, 100, gram=False),
        cd_workload(rng, 2_000, 200, gram=False),
        cd_workload(rng, 2_000, 200, gram=True),
        cd_workload(rng, 500, 800, gram=True),
    ]

    print(f"{'workload':<22} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for run, label in workloads:
        run(pybackend)()  # warm both paths before timing
        run(_core)()
        py = time_call(run(pybackend), args.repeats)
        cy = time_call(run(_core), args.repeats)
        print(f"{label:<22} {py * 1e3:>8.2f}ms {cy * 1e3:>8.2f}ms "
              f"{py / cy:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
