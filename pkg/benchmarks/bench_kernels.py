"""Compare the numba and numpy kernel paths on random sparse graphs.

    python3 benchmarks/bench_kernels.py [--sizes 64,512,4096,32768] [--repeat 5]

Prints the median wall time per kernel and backend and the speed-up.  The
numba column excludes compilation (kernels are warmed up first).
"""

import argparse
import statistics
import time

import numpy as np

from opaq import _kernels as K


def random_graph(n, degree, rng):
    m = n * degree
    src = rng.integers(0, n, m)
    dst = rng.integers(0, n, m)
    indptr, indices, _ = K.build_csr(n, src, dst)
    return indptr, indices


def timeit(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="64,512,4096,32768")
    ap.add_argument("--degree", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--closure-max", type=int, default=4096, help="skip closure above this size (quadratic)")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    t0 = time.perf_counter()
    K.warmup()
    print(f"numba import + cache load: {time.perf_counter() - t0:.3f} s")
    nb = K._numba_kernels()
    print(f"{'kernel':<10}{'n':>8}{'numpy ms':>12}{'numba ms':>12}{'speed-up':>10}")
    for n in [int(s) for s in args.sizes.split(",")]:
        # sparse τ-like graph for closure: low degree keeps rows short
        indptr, indices = random_graph(n, args.degree, rng)
        seeds = np.zeros(n, np.bool_)
        seeds[0] = True
        weights = rng.integers(0, 2, indices.size).astype(np.int64)
        cases = [
            ("reach", lambda: K.reach_mask_np(indptr, indices, seeds), lambda: nb["reach"](indptr, indices, seeds)),
            ("0/1-bfs", lambda: K.zero_one_dist_np(indptr, indices, weights, seeds),
             lambda: nb["zero_one"](indptr, indices, weights, seeds)),
        ]
        if n <= args.closure_max:
            tp, tx = random_graph(n, 1, rng)
            cases.append(("closure", lambda: K.closure_np(tp, tx, n), lambda: nb["closure"](tp, tx, n)))
        for name, f_np, f_nb in cases:
            a = timeit(f_np, args.repeat) * 1000
            b = timeit(f_nb, args.repeat) * 1000
            print(f"{name:<10}{n:>8}{a:>12.3f}{b:>12.3f}{a / b:>9.1f}x")


if __name__ == "__main__":
    main()
