"""Blind spanner construction, the greedy baseline, and stretch verification."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .bounds import BoundMatrix
from .metric import DistanceOracle, PointSet

__all__ = [
    "BLIND_STRATEGIES",
    "FULL_SWEEP_STRATEGIES",
    "Strategy",
    "Spanner",
    "build_blind_spanner",
    "build_greedy_spanner",
    "make_selector",
    "select_next_pair",
    "verify_stretch",
    "stretch_ok",
    "shortest_paths",
]

_KINDS = ("blind_random", "blind_greedy", "quasi_sorted_greedy", "quasi_sorted_shaker", "greedy_baseline")

STRETCH_SLACK = 1e-9


@dataclass(frozen=True)
class Strategy:
    kind: str
    connect_first: bool = False
    lower_bound_first: bool = False
    # quasi-sorted only: query every pair in order instead of skipping satisfied ones
    full_sweep: bool = False

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if (self.connect_first or self.lower_bound_first) and self.kind != "blind_random":
            raise ValueError("connect_first/lower_bound_first only apply to blind_random")
        if self.full_sweep and not self.kind.startswith("quasi_sorted"):
            raise ValueError("full_sweep only applies to the quasi-sorted strategies")

    @property
    def name(self) -> str:
        if self.kind == "greedy_baseline":
            return "greedy"
        s = self.kind
        if self.connect_first:
            s += "_connect_first"
        if self.lower_bound_first:
            s += "_lower_bound_first"
        if self.full_sweep:
            s += "_full_sweep"
        return s

    @property
    def needs_approx(self) -> bool:
        return self.kind.startswith("quasi_sorted")

    @classmethod
    def parse(cls, name: str) -> "Strategy":
        if name == "greedy":
            return cls("greedy_baseline")
        if name.startswith("blind_random"):
            rest = name[len("blind_random"):]
            cf = "_connect_first" in rest
            lbf = "_lower_bound_first" in rest
            if rest.replace("_connect_first", "").replace("_lower_bound_first", ""):
                raise ValueError(f"unknown strategy {name!r}")
            return cls("blind_random", cf, lbf)
        if name.endswith("_full_sweep"):
            return cls(name[: -len("_full_sweep")], full_sweep=True)
        return cls(name)


BLIND_STRATEGIES = (
    "blind_greedy",
    "blind_random",
    "blind_random_connect_first",
    "blind_random_lower_bound_first",
    "blind_random_connect_first_lower_bound_first",
    "quasi_sorted_greedy",
    "quasi_sorted_shaker",
)

# opt-in variants that query each pair when the sweep reaches it, satisfied or not
FULL_SWEEP_STRATEGIES = ("quasi_sorted_greedy_full_sweep", "quasi_sorted_shaker_full_sweep")


@dataclass
class Spanner:
    n: int
    edges: list[tuple[int, int, float]]
    eps: float
    queries_used: int
    strategy: str
    seed: int = 0
    # WSPD only: distance queries spent inside the tree backend
    backend_queries: int = 0
    bounds: BoundMatrix | None = field(default=None, repr=False, compare=False)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def to_text(self) -> str:
        lines = [f"{self.n} {self.eps!r} {self.strategy} {self.seed} {self.queries_used}"]
        lines.extend(f"{i} {j} {w!r}" for i, j, w in self.edges)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Spanner":
        rows = text.strip("\n").split("\n")
        n, eps, strategy, seed, queries = rows[0].split()
        edges = []
        for row in rows[1:]:
            i, j, w = row.split()
            edges.append((int(i), int(j), float(w)))
        return cls(int(n), edges, float(eps), int(queries), strategy, int(seed))

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())


# --- pair selection -------------------------------------------------------

class _GreedySelector:
    def __init__(self, m, rng):
        self.m, self.rng = m, rng

    def next_pair(self):
        nv, _, _, best, nb, fk, fl = self.m.scan()
        if nv == 0:
            return None
        r = int(self.rng.integers(nb))
        if r == 0:
            return fk, fl
        return self.m.pick(kernels.MAXIMAL, best, r)


class _RandomSelector:
    def __init__(self, m, rng, connect_first, lower_bound_first):
        self.m, self.rng = m, rng
        self.connect_first = connect_first
        self.lower_bound_first = lower_bound_first

    def next_pair(self):
        nv, nd, nz = self.m.scan()[:3]
        if nv == 0:
            return None
        if self.connect_first and nd:
            cls, count = kernels.DISCONNECTED, nd
        elif self.lower_bound_first and nz:
            cls, count = kernels.ZERO_LOWER, nz
        else:
            cls, count = kernels.VIOLATING, nv
        r = int(self.rng.integers(count))
        return self.m.pick(cls, -1.0, r)


class _QuasiSortedSelector:
    """Walk pairs by approximate distance, skipping satisfied ones.

    The plain variant always advances from the short end.  The shaker takes
    the next short pair on odd reveals and the next long pair on even ones.
    Satisfied pairs stay satisfied (bounds only tighten), so one sweep
    normally suffices; if violations survive a sweep it restarts.

    With ``full_sweep`` nothing is skipped: while any pair still violates,
    the next pair in sweep order is queried whatever its current ratio.
    """

    def __init__(self, m, approx, shaker, full_sweep=False):
        self.m, self.shaker, self.full_sweep = m, shaker, full_sweep
        n = m.n
        ii, jj = np.triu_indices(n, 1)
        order = np.lexsort((jj, ii, approx[ii, jj]))
        self.ii = ii[order]
        self.jj = jj[order]
        self.lo = 0
        self.hi = len(order) - 1
        self.iteration = 0

    def _violating(self, t):
        return self.m.ratio(int(self.ii[t]), int(self.jj[t])) > self.m.threshold

    def _next_unskipped(self):
        # every pair is visited once, so the sweep cannot run out first
        if self.m.scan()[0] == 0 or self.lo > self.hi:
            return None
        from_top = self.shaker and self.iteration % 2 == 1
        self.iteration += 1
        if from_top:
            t, self.hi = self.hi, self.hi - 1
        else:
            t, self.lo = self.lo, self.lo + 1
        return int(self.ii[t]), int(self.jj[t])

    def next_pair(self):
        if self.full_sweep:
            return self._next_unskipped()
        while True:
            from_top = self.shaker and self.iteration % 2 == 1
            if from_top:
                while self.hi >= self.lo and not self._violating(self.hi):
                    self.hi -= 1
                t = self.hi
            else:
                while self.lo <= self.hi and not self._violating(self.lo):
                    self.lo += 1
                t = self.lo
            if self.lo <= self.hi:
                self.iteration += 1
                if from_top:
                    self.hi -= 1
                else:
                    self.lo += 1
                return int(self.ii[t]), int(self.jj[t])
            if self.m.scan()[0] == 0:
                return None
            self.lo, self.hi = 0, len(self.ii) - 1


def make_selector(strategy: Strategy, m: BoundMatrix, oracle: DistanceOracle, rng):
    """Stateful next-pair chooser for one run; violation means ratio > ``m.threshold``."""
    if strategy.kind == "blind_greedy":
        return _GreedySelector(m, rng)
    if strategy.kind == "blind_random":
        return _RandomSelector(m, rng, strategy.connect_first, strategy.lower_bound_first)
    if strategy.needs_approx:
        return _QuasiSortedSelector(
            m, oracle.approx_table, shaker=strategy.kind == "quasi_sorted_shaker",
            full_sweep=strategy.full_sweep,
        )
    raise ValueError(f"{strategy.name} is not a blind strategy")


def select_next_pair(strategy: Strategy, m: BoundMatrix, oracle: DistanceOracle, rng):
    """One-shot selection; ``None`` when no pair violates ``m.threshold``."""
    return make_selector(strategy, m, oracle, rng).next_pair()


# --- constructions --------------------------------------------------------

def build_blind_spanner(
    oracle: DistanceOracle,
    eps: float,
    strategy: Strategy | str = "blind_greedy",
    seed: int = 0,
    *,
    backend: str | None = None,
    strict: bool = False,
) -> Spanner:
    """Query pairs until every pair's bound ratio is at most ``1 + eps``.

    The queried pairs, with their exact distances, form the spanner.
    """
    if isinstance(strategy, str):
        strategy = Strategy.parse(strategy)
    if not eps > 0:
        raise ValueError("eps must be positive for spanners")
    n = oracle.n
    m = BoundMatrix(n, threshold=1.0 + eps, strict=strict, backend=backend)
    rng = np.random.default_rng(seed)
    selector = make_selector(strategy, m, oracle, rng)
    start = oracle.exact_query_count
    edges = []
    with oracle.phase("blind"):
        while (pair := selector.next_pair()) is not None:
            i, j = pair
            v = oracle.exact_distance(i, j)
            edges.append((i, j, v))
            m.update(i, j, v)
    return Spanner(
        n, edges, eps, oracle.exact_query_count - start, strategy.name, seed, bounds=m
    )


def build_greedy_spanner(oracle: DistanceOracle, eps: float, *, backend: str | None = None) -> Spanner:
    """Classical greedy spanner; pays for all ``n(n-1)/2`` distances."""
    if not eps > 0:
        raise ValueError("eps must be positive for spanners")
    k = kernels.get_backend(backend) if backend else kernels.active
    n = oracle.n
    start = oracle.exact_query_count
    ii, jj = np.triu_indices(n, 1)
    with oracle.phase("sort"):
        dist = np.array([oracle.exact_distance(int(i), int(j)) for i, j in zip(ii, jj)])
    order = np.lexsort((jj, ii, dist))
    # upper triangle only, like the bound matrices
    paths = np.full((n, n), np.inf)
    stretch = 1.0 + eps
    edges = []
    for t in order:
        i, j, d = int(ii[t]), int(jj[t]), float(dist[t])
        if paths[i, j] > stretch * d:
            edges.append((i, j, d))
            k.relax_through_edge(paths, i, j, d)
    return Spanner(n, edges, eps, oracle.exact_query_count - start, "greedy", 0)


# --- verification ---------------------------------------------------------

def shortest_paths(n: int, edges) -> np.ndarray:
    """All-pairs shortest paths by Floyd-Warshall (independent of the bounds code)."""
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for i, j, w in edges:
        if w < d[i, j]:
            d[i, j] = d[j, i] = w
    for k in range(n):
        np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
    return d


def verify_stretch(s: Spanner, pointset: PointSet) -> float:
    """Maximum over pairs of spanner distance / true distance (``0/0 = 1``)."""
    n = pointset.n
    if n < 2:
        return 1.0
    sp = shortest_paths(n, s.edges)
    true = pointset.distance_matrix()
    iu = np.triu_indices(n, 1)
    num, den = sp[iu], true[iu]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0, num / den, np.where(num > 0, np.inf, 1.0))
    return float(r.max())


def stretch_ok(s: Spanner, pointset: PointSet) -> bool:
    return verify_stretch(s, pointset) <= (1.0 + s.eps) * (1.0 + STRETCH_SLACK)
