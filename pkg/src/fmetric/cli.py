"""Command line entry point: ``fmetric spanner|ann|wspd|bench``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from .harness import PLOT_KINDS, ExperimentSpec, SpecError, emit_plot_data, run_experiment
from .metric import GENERATORS

EXIT_OK = 0
EXIT_INVALID = 2

_DEFAULT_STRATEGY = {"spanner": "blind_greedy,greedy", "wspd": "quadtree,covertree", "ann": "ann"}
_DEFAULT_INSTANCES = {"spanner": 5, "wspd": 5, "ann": 10}
_PLOTS = {"spanner": ("edges_vs_n", "ratio_vs_n", "edges_vs_eps"),
          "wspd": ("edges_vs_n", "ratio_vs_n", "edges_vs_eps"),
          "ann": ("queries_over_log_n",)}


def int_list(text: str) -> list[int]:
    """``"100,200"`` or inclusive ranges ``"100:700:100"`` (step defaults to 1)."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            if len(bits) not in (2, 3) or (len(bits) == 3 and bits[2] <= 0):
                raise argparse.ArgumentTypeError(f"bad range {part!r}")
            lo, hi = bits[0], bits[1]
            step = bits[2] if len(bits) == 3 else 1
            out.extend(range(lo, hi + 1, step))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def float_list(text: str) -> list[float]:
    """Comma-separated reals; fractions such as ``1/32`` are accepted."""
    try:
        return [float(Fraction(p.strip())) for p in text.split(",") if p.strip()]
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def str_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def master_seed() -> int:
    raw = os.environ.get("FMETRIC_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise SpecError(f"FMETRIC_SEED must be an integer, got {raw!r}") from None


def _experiment_parser(sub, task: str):
    p = sub.add_parser(task, help=f"run a {task} experiment sweep")
    p.add_argument("--generator", default="uniform", choices=GENERATORS)
    p.add_argument("--dim", type=int_list, default=[2], help="list or range, e.g. 2,3 or 2:5")
    p.add_argument("--n", type=int_list, default=[100], help="list or range, e.g. 100:700:100")
    p.add_argument("--eps", type=float_list, default=None, help="list, e.g. 0.1,1/32")
    p.add_argument("--strategy", type=str_list, default=str_list(_DEFAULT_STRATEGY[task]))
    p.add_argument("--seeds", type=int_list, default=None,
                   help="instance seeds; default FMETRIC_SEED + 0..k-1")
    p.add_argument("--instances", type=int, default=_DEFAULT_INSTANCES[task],
                   help="number of seeds when --seeds is omitted")
    p.add_argument("--perms", type=int, default=10, help="permutations per ANN instance")
    p.add_argument("--query-dist", default="uniform", choices=("uniform", "normal"))
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--emit-svg", action="store_true", help="also write plot data and SVG")
    p.add_argument("--dump-bounds", default=None, metavar="DIR",
                   help="write final bound matrices of blind runs into DIR")
    p.add_argument("--max-n", type=int, default=None, help="size guard override")
    p.add_argument("--timing", action="store_true",
                   help="fill runtime_ms (makes CSVs machine dependent)")
    p.set_defaults(task=task)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fmetric", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for task in ("spanner", "ann", "wspd"):
        _experiment_parser(sub, task)
    b = sub.add_parser("bench", help="time the compiled and pure-Python kernels")
    b.add_argument("--n", type=int_list, default=[100, 200, 400])
    b.add_argument("--dim", type=int_list, default=[2])
    b.add_argument("--eps", type=float_list, default=[0.1])
    b.add_argument("--seeds", type=int_list, default=None)
    b.add_argument("--out", default=None, help="optional CSV path")
    b.add_argument("--max-n", type=int, default=400,
                   help="largest n also run on the pure-Python backend")
    b.set_defaults(task="bench")
    return parser


def _spec_from_args(args) -> ExperimentSpec:
    seeds = args.seeds
    if seeds is None:
        if args.instances < 1:
            raise SpecError("--instances must be positive")
        base = master_seed()
        seeds = [base + k for k in range(args.instances)]
    eps = args.eps if args.eps is not None else ([0.01] if args.task == "ann" else [0.1])
    return ExperimentSpec(
        task=args.task, generator=args.generator, dims=args.dim, ns=args.n, eps=eps,
        strategies=args.strategy, seeds=seeds, perms=args.perms, query_dist=args.query_dist,
        out=args.out, max_n=args.max_n, dump_bounds=args.dump_bounds, timing=args.timing,
    )


def _run_bench(args) -> int:
    from .bench import format_table, run_benchmark, write_csv

    seeds = args.seeds if args.seeds is not None else [master_seed()]
    rows = run_benchmark(args.n, args.dim, args.eps, seeds, python_max_n=args.max_n)
    print(format_table(rows))
    if args.out:
        write_csv(rows, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.task == "bench":
            return _run_bench(args)
        spec = _spec_from_args(args)
        raw, agg = run_experiment(spec)
    except SpecError as e:
        print(f"fmetric: invalid specification: {e}", file=sys.stderr)
        return EXIT_INVALID
    print(raw)
    print(agg)
    if args.emit_svg:
        for kind in _PLOTS[args.task]:
            data = Path(args.out) / f"{args.task}_{kind}.txt"
            emit_plot_data(agg, kind, data, data.with_suffix(".svg"))
            print(data)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
