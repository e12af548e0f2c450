"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py            # blind greedy, n = 100, 200, 400
    python3 benchmarks/bench_kernels.py --micro    # single-kernel timings

The end-to-end part is the same as ``fmetric bench``.
"""
import argparse
import time

import numpy as np

from fmetric import kernels
from fmetric.bench import format_table, run_benchmark


def micro(n: int, reps: int) -> None:
    rng = np.random.default_rng(0)
    pts = rng.random((n, 2))
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    for name in kernels.available_backends():
        k = kernels.get_backend(name)
        a = np.zeros((n, n))
        b = np.full((n, n), np.inf)
        known = np.zeros((n, n), dtype=bool)
        pairs = rng.integers(0, n, size=(reps, 2))
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
        t0 = time.perf_counter()
        for i, j in pairs:
            known[i, j] = known[j, i] = True
            k.update_bounds(a, b, known, int(i), int(j), float(d[i, j]), 1.1)
        upd = (time.perf_counter() - t0) / len(pairs)
        t0 = time.perf_counter()
        for _ in range(reps):
            k.scan_pairs(a, b, 1.1)
        scan = (time.perf_counter() - t0) / reps
        print(f"{name:>9} n={n}: update+scan {upd * 1e6:9.1f} us   scan {scan * 1e6:9.1f} us")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--micro", action="store_true")
    ap.add_argument("--reps", type=int, default=50)
    args = ap.parse_args()
    if args.micro:
        for n in args.n:
            micro(n, args.reps)
    else:
        print(format_table(run_benchmark(args.n, [2], [0.1], [0])))
