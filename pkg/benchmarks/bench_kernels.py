"""Benchmark: compiled kernels vs the pure-numpy fallback.

Run:  python benchmarks/bench_kernels.py [--n 2048] [--dim 32] [--trials 50]

METRICLAB_THREADS caps any thread-based parallelism (the benchmark itself is
sequential; the variable is read so runs are comparable across environments).
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from metriclab import _pykernels

try:
    from metriclab import _ckernels
except ImportError:
    _ckernels = None


def time_fn(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2048)
    ap.add_argument("--dim", type=int, default=32)
    ap.add_argument("--trials", type=int, default=50)
    args = ap.parse_args()
    print(f"METRICLAB_THREADS={os.environ.get('METRICLAB_THREADS', '(unset)')}")

    rng = np.random.default_rng(0)
    coords = rng.standard_normal((args.n, args.dim))
    w = np.full(args.dim, 1.0 / args.dim)
    impls = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])

    for p in (2.0, 3.0):
        row = []
        for name, impl in impls:
            row.append(f"{name}: {time_fn(impl.pairwise_lp, coords, w, p):8.3f}s")
        print(f"pairwise_lp  n={args.n} p={p}:  " + "   ".join(row))

    dists = _pykernels.pairwise_lp(coords, w, 2.0)
    order = rng.permutation(args.n).astype(np.int64)
    rho = float(np.quantile(dists, 0.05))
    for name, impl in impls:
        t = time_fn(lambda: [impl.ckr_assign(dists, order, rho) for _ in range(args.trials)])
        print(f"ckr_assign   x{args.trials}: {name}: {t:8.3f}s")

    labels = _pykernels.ckr_assign(dists, order, rho)
    for name, impl in impls:
        counts = np.zeros((args.n, args.n), dtype=np.uint32)
        t = time_fn(lambda: [impl.pair_sep_accumulate(labels, counts) for _ in range(args.trials)])
        print(f"pair_sep_acc x{args.trials}: {name}: {t:8.3f}s")

    u = np.arange(-3.0, 3.0, 0.01)
    for name, impl in impls:
        t = time_fn(impl.slack_min, u, u, 0.25, 0.5, 4.0)
        print(f"slack_min    601x601: {name}: {t:8.3f}s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
