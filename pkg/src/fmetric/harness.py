"""Experiment runner: parameter sweeps, CSV output, exponent fits, plot data."""
from __future__ import annotations

import csv
import io
import logging
import math
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ann as ann_mod
from .metric import GENERATORS, DistanceOracle, derive_seed, generate_pointset
from .spanner import Strategy, build_blind_spanner, build_greedy_spanner
from .wspd import BACKENDS, build_wspd_spanner

__all__ = [
    "TASKS",
    "RAW_COLUMNS",
    "SpecError",
    "ExperimentSpec",
    "ResultRow",
    "run_experiment",
    "run_cells",
    "aggregate",
    "fit_exponent",
    "emit_plot_data",
    "render_svg",
    "read_csv",
    "pointset_for",
    "query_for",
]

log = logging.getLogger(__name__)

TASKS = ("spanner", "ann", "wspd")
QUERY_DISTS = ("uniform", "normal")
PLOT_KINDS = ("edges_vs_n", "ratio_vs_n", "queries_over_log_n", "edges_vs_eps")

RAW_COLUMNS = ["task", "generator", "dim", "n", "eps", "strategy", "seed", "perm",
               "edges", "queries", "runtime_ms"]
GROUP_COLUMNS = ["task", "generator", "dim", "n", "eps", "strategy"]

DEFAULT_MAX_N = 1000
ANN_MAX_N = 30000
ANN_MAX_N_HIGH_DIM = 10000
# rough cost of one bound-matrix entry update, used for the size-guard estimate
_NS_PER_ENTRY = 3.0


class SpecError(ValueError):
    """Experiment specification rejected before running."""


@dataclass
class ExperimentSpec:
    task: str
    generator: str = "uniform"
    dims: list[int] = field(default_factory=lambda: [2])
    ns: list[int] = field(default_factory=lambda: [100])
    eps: list[float] = field(default_factory=lambda: [0.1])
    strategies: list[str] = field(default_factory=lambda: ["blind_greedy"])
    seeds: list[int] = field(default_factory=lambda: list(range(5)))
    perms: int = 10
    query_dist: str = "uniform"
    out: str | Path | None = None
    max_n: int | None = None
    dump_bounds: str | Path | None = None
    timing: bool = False

    def validate(self) -> None:
        if self.task not in TASKS:
            raise SpecError(f"unknown task {self.task!r}")
        if self.generator not in GENERATORS:
            raise SpecError(f"unknown generator {self.generator!r}")
        for name in ("dims", "ns", "eps", "strategies", "seeds"):
            if not getattr(self, name):
                raise SpecError(f"{name} must be non-empty")
        if any(d < 1 for d in self.dims):
            raise SpecError("dimensions must be positive")
        if any(n < 1 for n in self.ns):
            raise SpecError("n must be positive")
        if self.task == "ann":
            if any(e < 0 for e in self.eps):
                raise SpecError("ANN eps must be non-negative")
            if self.perms < 1:
                raise SpecError("perms must be positive")
            if self.query_dist not in QUERY_DISTS:
                raise SpecError(f"unknown query distribution {self.query_dist!r}")
        elif any(not e > 0 for e in self.eps):
            raise SpecError("spanner eps must be positive")
        if self.task == "wspd" and any(e > 1 for e in self.eps):
            raise SpecError("WSPD spanners need eps in (0, 1]")
        for s in self.strategies:
            self._check_strategy(s)
        self._check_sizes()

    def _check_strategy(self, s):
        if self.task == "spanner":
            try:
                Strategy.parse(s)
            except ValueError as e:
                raise SpecError(str(e)) from None
        elif self.task == "wspd" and s not in BACKENDS:
            raise SpecError(f"unknown WSPD backend {s!r}")
        elif self.task == "ann" and s not in ("ann", "ann_prefilter"):
            raise SpecError(f"unknown ANN variant {s!r}")

    def _check_sizes(self):
        for d in self.dims:
            cap = self.max_n
            if cap is None:
                if self.task == "ann":
                    cap = ANN_MAX_N if d == 2 else ANN_MAX_N_HIGH_DIM
                else:
                    cap = DEFAULT_MAX_N
            for n in self.ns:
                if n > cap:
                    pairs = n * (n - 1) // 2
                    est = pairs * n * n * _NS_PER_ENTRY * 1e-9 if self.task != "ann" else None
                    hint = f"; worst case ~{est:.3g} s per run" if est else ""
                    raise SpecError(f"n={n} exceeds cap {cap} for dim {d}{hint} (raise --max-n)")


@dataclass
class ResultRow:
    task: str
    generator: str
    dim: int
    n: int
    eps: float
    strategy: str
    seed: int
    perm: int | str
    edges: int | str
    queries: int
    runtime_ms: float | str = ""
    backend_queries: int | None = None

    def as_list(self, extra: bool) -> list[str]:
        vals = [self.task, self.generator, self.dim, self.n, self.eps, self.strategy,
                self.seed, self.perm, self.edges, self.queries, self.runtime_ms]
        if extra:
            vals.append(self.backend_queries)
        return [_fmt(v) for v in vals]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def pointset_for(generator: str, dim: int, n: int, seed: int):
    return generate_pointset(generator, dim, n, derive_seed(seed, f"points/{generator}/{dim}/{n}"))


def query_for(dist: str, dim: int, n: int, seed: int) -> np.ndarray:
    """ANN query point: uniform on ``[-10, 10]^dim`` or normal with scale 100."""
    rng = np.random.default_rng(derive_seed(seed, f"query/{dist}/{dim}/{n}"))
    if dist == "uniform":
        return rng.uniform(-10.0, 10.0, size=dim)
    return rng.normal(0.0, 100.0, size=dim)


def _cells(spec: ExperimentSpec):
    for dim in spec.dims:
        for n in spec.ns:
            for eps in spec.eps:
                for strategy in spec.strategies:
                    for seed in spec.seeds:
                        yield dim, n, float(eps), strategy, seed


def _run_spanner(spec, dim, n, eps, strategy, seed):
    ps = pointset_for(spec.generator, dim, n, seed)
    oracle = DistanceOracle(ps, approx_seed=derive_seed(seed, "approx"))
    st = Strategy.parse(strategy)
    t0 = time.perf_counter()
    if st.kind == "greedy_baseline":
        sp = build_greedy_spanner(oracle, eps)
    else:
        sp = build_blind_spanner(oracle, eps, st, derive_seed(seed, "ties"))
    ms = (time.perf_counter() - t0) * 1e3
    if spec.dump_bounds and sp.bounds is not None:
        d = Path(spec.dump_bounds)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"bounds_{st.name}_d{dim}_n{n}_eps{eps!r}_s{seed}.txt").write_text(sp.bounds.dump())
    row = ResultRow(spec.task, spec.generator, dim, n, eps, st.name, seed, "",
                    sp.n_edges, sp.queries_used, ms if spec.timing else "")
    return [row]


def _run_wspd(spec, dim, n, eps, backend, seed):
    ps = pointset_for(spec.generator, dim, n, seed)
    t0 = time.perf_counter()
    sp = build_wspd_spanner(ps, eps, backend)
    ms = (time.perf_counter() - t0) * 1e3
    row = ResultRow(spec.task, spec.generator, dim, n, eps, backend, seed, "",
                    sp.n_edges, sp.queries_used, ms if spec.timing else "",
                    backend_queries=sp.backend_queries)
    return [row]


def _run_ann(spec, dim, n, eps, variant, seed):
    ps = pointset_for(spec.generator, dim, n, seed)
    q = query_for(spec.query_dist, dim, n, seed)
    inst = ann_mod.AnnInstance(ps, q, eps)
    rows = []
    if variant == "ann_prefilter":
        inst = ann_mod.prefilter_with_approx(
            inst, DistanceOracle(ps, approx_seed=derive_seed(seed, "approx")))
    for p in range(spec.perms):
        t0 = time.perf_counter()
        res = ann_mod.ann_search(inst, derive_seed(seed, f"perm/{p}"))
        ms = (time.perf_counter() - t0) * 1e3
        log.debug("%s", ann_mod.run_record(inst, res))
        rows.append(ResultRow(spec.task, spec.generator, dim, n, eps, variant, seed, p,
                              "", res.queries_used, ms if spec.timing else ""))
    return rows


_RUNNERS = {"spanner": _run_spanner, "wspd": _run_wspd, "ann": _run_ann}


def run_cells(spec: ExperimentSpec) -> list[ResultRow]:
    """Run every cell of ``spec`` in spec order and return the raw rows."""
    spec.validate()
    runner = _RUNNERS[spec.task]
    rows = []
    for dim, n, eps, strategy, seed in _cells(spec):
        log.info("%s %s dim=%d n=%d eps=%r %s seed=%d", spec.task, spec.generator,
                 dim, n, eps, strategy, seed)
        rows.extend(runner(spec, dim, n, eps, strategy, seed))
    return rows


def _mean_std(vals):
    if not vals or any(v == "" for v in vals):
        return "", ""
    vals = [float(v) for v in vals]
    return statistics.fmean(vals), statistics.pstdev(vals)


def aggregate(rows: list[ResultRow]) -> tuple[list[str], list[list[str]]]:
    """Per-configuration mean and population std over seeds (and perms)."""
    extra = any(r.backend_queries is not None for r in rows)
    metrics = ["edges", "queries", "runtime_ms"] + (["backend_queries"] if extra else [])
    header = GROUP_COLUMNS + [f"{p}_{m}" for m in metrics for p in ("mean", "std")] + ["runs"]
    groups: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        key = (r.task, r.generator, r.dim, r.n, r.eps, r.strategy)
        groups.setdefault(key, []).append(r)
    out = []
    for key, members in groups.items():
        line = [_fmt(k) for k in key]
        for m in metrics:
            mean, std = _mean_std([getattr(r, m) for r in members])
            line += [_fmt(mean), _fmt(std)]
        line.append(str(len(members)))
        out.append(line)
    return header, out


def _write_csv(path: Path, header, lines) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(lines)
    path.write_text(buf.getvalue())


def run_experiment(spec: ExperimentSpec) -> tuple[Path, Path]:
    """Run ``spec`` and write ``<task>_raw.csv`` and ``<task>_agg.csv`` into ``spec.out``."""
    rows = run_cells(spec)
    out = Path(spec.out if spec.out is not None else ".")
    out.mkdir(parents=True, exist_ok=True)
    extra = spec.task == "wspd"
    raw = out / f"{spec.task}_raw.csv"
    agg = out / f"{spec.task}_agg.csv"
    _write_csv(raw, RAW_COLUMNS + (["backend_queries"] if extra else []),
               [r.as_list(extra) for r in rows])
    header, lines = aggregate(rows)
    _write_csv(agg, header, lines)
    return raw, agg


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- analysis -------------------------------------------------------------

def fit_exponent(rows) -> float:
    """Least-squares slope of ``log(edges)`` against ``log(n)``."""
    pts = [(float(n), float(e)) for n, e in rows]
    if len({n for n, _ in pts}) < 2:
        raise ValueError("need at least two distinct n values")
    if any(n <= 0 or e <= 0 for n, e in pts):
        raise ValueError("n and edges must be positive")
    x = np.log([n for n, _ in pts])
    y = np.log([e for _, e in pts])
    return float(np.polyfit(x, y, 1)[0])


def _aggregated(records):
    """Accept aggregate rows as-is; aggregate raw rows on the fly."""
    if not records or "mean_queries" in records[0]:
        return records
    groups: dict[tuple, list] = {}
    for r in records:
        groups.setdefault(tuple(r[c] for c in GROUP_COLUMNS), []).append(r)
    out = []
    for key, members in groups.items():
        rec = dict(zip(GROUP_COLUMNS, key))
        for m in ("edges", "queries"):
            rec[f"mean_{m}"] = _fmt(_mean_std([x[m] for x in members])[0])
        out.append(rec)
    return out


def emit_plot_data(csv_path, kind: str, out_path, svg_path=None) -> int:
    """Write ``series x y`` lines for one plot kind; returns the number of points.

    Series labels encode the coordinates that are held fixed.
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    records = _aggregated(read_csv(csv_path))
    series: dict[str, list[tuple[float, float]]] = {}
    for r in records:
        n = int(r["n"])
        edges = float(r["mean_edges"]) if r.get("mean_edges") else None
        queries = float(r["mean_queries"]) if r.get("mean_queries") else None
        base = f"{r['strategy']}/{r['generator']}/d{r['dim']}"
        if kind == "edges_vs_eps":
            label, x, y = f"{base}/n{n}", float(r["eps"]), edges
        else:
            label, x = f"{base}/eps{r['eps']}", float(n)
            if kind == "edges_vs_n":
                y = edges
            elif kind == "ratio_vs_n":
                y = None if edges is None else edges / n
            else:
                y = None if queries is None or n < 2 else queries / math.log2(n)
        if y is not None:
            series.setdefault(label, []).append((x, y))
    lines = []
    for label, pts in series.items():
        for x, y in sorted(pts):
            lines.append(f"{label} {x!r} {y!r}")
    if not lines:
        log.warning("no plottable rows in %s for %s", csv_path, kind)
    Path(out_path).write_text("".join(l + "\n" for l in lines))
    if svg_path is not None:
        xlabel = {"edges_vs_eps": "eps"}.get(kind, "n")
        ylabel = {"edges_vs_n": "edges", "ratio_vs_n": "edges / n",
                  "queries_over_log_n": "queries / log2 n", "edges_vs_eps": "edges"}[kind]
        Path(svg_path).write_text(render_svg(series, xlabel, ylabel,
                                             loglog=kind == "edges_vs_n"))
    return len(lines)


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def render_svg(series, xlabel: str, ylabel: str, *, loglog: bool = False,
               width: int = 640, height: int = 420) -> str:
    """Minimal polyline plot with labelled axes and a legend."""
    tf = (lambda v: math.log10(v)) if loglog else (lambda v: v)
    pts = [(tf(x), tf(y)) for s in series.values() for x, y in s if not loglog or (x > 0 and y > 0)]
    ml, mr, mt, mb = 70, 160, 20, 50
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           '<rect width="100%" height="100%" fill="white"/>']
    pw, ph = width - ml - mr, height - mt - mb
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    if pts:
        xs, ys = [p[0] for p in pts], [p[1] for p in pts]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        x1 = x1 if x1 > x0 else x0 + 1
        y1 = y1 if y1 > y0 else y0 + 1

        def sx(v):
            return ml + (v - x0) / (x1 - x0) * pw

        def sy(v):
            return mt + ph - (v - y0) / (y1 - y0) * ph

        for t in range(5):
            xv = x0 + (x1 - x0) * t / 4
            yv = y0 + (y1 - y0) * t / 4
            xt = 10 ** xv if loglog else xv
            yt = 10 ** yv if loglog else yv
            out.append(f'<text x="{sx(xv):.1f}" y="{mt + ph + 16}" font-size="10" '
                       f'text-anchor="middle">{xt:.3g}</text>')
            out.append(f'<text x="{ml - 6}" y="{sy(yv) + 3:.1f}" font-size="10" '
                       f'text-anchor="end">{yt:.3g}</text>')
        for k, (label, s) in enumerate(series.items()):
            color = _COLORS[k % len(_COLORS)]
            coords = " ".join(f"{sx(tf(x)):.1f},{sy(tf(y)):.1f}" for x, y in sorted(s)
                              if not loglog or (x > 0 and y > 0))
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}"/>')
            out.append(f'<text x="{ml + pw + 8}" y="{mt + 14 + 14 * k}" font-size="10" '
                       f'fill="{color}">{label}</text>')
    scale = " (log)" if loglog else ""
    out.append(f'<text x="{ml + pw / 2}" y="{height - 12}" font-size="12" '
               f'text-anchor="middle">{xlabel}{scale}</text>')
    out.append(f'<text x="16" y="{mt + ph / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {mt + ph / 2})">{ylabel}{scale}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
