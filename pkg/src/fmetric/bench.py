"""Compiled vs pure-Python kernel benchmark.

Each configuration builds the same blind greedy spanner on every available
backend, times it, and checks that the edge lists agree exactly.
"""
from __future__ import annotations

import csv
import time

from . import kernels
from .harness import pointset_for
from .metric import DistanceOracle, derive_seed
from .spanner import build_blind_spanner

COLUMNS = ["n", "dim", "eps", "seed", "backend", "edges", "seconds", "identical", "speedup"]


def _timed(ps, eps, seed, backend):
    oracle = DistanceOracle(ps)
    t0 = time.perf_counter()
    sp = build_blind_spanner(oracle, eps, "blind_greedy", derive_seed(seed, "ties"), backend=backend)
    return sp, time.perf_counter() - t0


def run_benchmark(ns, dims, eps_list, seeds, *, python_max_n: int = 400) -> list[dict]:
    backends = kernels.available_backends()
    rows = []
    for dim in dims:
        for n in ns:
            for eps in eps_list:
                for seed in seeds:
                    ps = pointset_for("uniform", dim, n, seed)
                    ref, base = None, None
                    for b in backends:
                        if b == "python" and n > python_max_n:
                            continue
                        sp, sec = _timed(ps, eps, seed, b)
                        ref = ref or sp.edges
                        base = base or sec
                        rows.append({"n": n, "dim": dim, "eps": eps, "seed": seed, "backend": b,
                                     "edges": sp.n_edges, "seconds": sec,
                                     "identical": sp.edges == ref, "speedup": sec / base})
    # report speedup relative to the pure-Python run where there is one
    for r in rows:
        py = [x for x in rows if x["backend"] == "python"
              and all(x[k] == r[k] for k in ("n", "dim", "eps", "seed"))]
        r["speedup"] = py[0]["seconds"] / r["seconds"] if py else float("nan")
    return rows


def format_table(rows) -> str:
    head = f"{'n':>6} {'dim':>3} {'eps':>6} {'seed':>5} {'backend':>9} {'edges':>7} {'seconds':>9} {'same':>5} {'speedup':>8}"
    lines = [head]
    for r in rows:
        lines.append(f"{r['n']:>6} {r['dim']:>3} {r['eps']:>6g} {r['seed']:>5} {r['backend']:>9} "
                     f"{r['edges']:>7} {r['seconds']:>9.3f} {str(r['identical']):>5} {r['speedup']:>8.1f}")
    return "\n".join(lines)


def write_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
