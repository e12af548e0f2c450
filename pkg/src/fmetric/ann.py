"""Randomized incremental approximate nearest neighbour with lower-bound pruning.

Distances between data points are free (precomputed); only distances to
the query point are counted.  Points are visited in a random order and a
point is skipped whenever its lower bound already proves it cannot beat
the current candidate by more than a factor ``1 + eps``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metric import DistanceOracle, PointSet

__all__ = [
    "AnnInstance",
    "AnnResult",
    "AnnState",
    "ann_search",
    "update_lower_bounds",
    "brute_force_nn",
    "prefilter_with_approx",
    "pruning_violations",
    "run_record",
]

PRUNE_MARGIN = 1e-12


class AnnInstance:
    """Point set, query point and ``eps``.

    Pairwise distances are served row by row and are not counted.  For
    large ``n`` the full matrix is never formed.
    """

    def __init__(self, pointset: PointSet, q, eps: float = 0.0, index_map=None):
        q = np.asarray(q, dtype=np.float64).reshape(-1)
        if pointset.n < 1:
            raise ValueError("ANN needs a non-empty point set")
        if q.shape[0] != pointset.dim:
            raise ValueError(f"query has dimension {q.shape[0]}, point set has {pointset.dim}")
        if eps < 0:
            raise ValueError("eps must be non-negative")
        self.pointset = pointset
        self.q = q
        self.eps = float(eps)
        # positions in the original point set when this is a filtered view
        self.index_map = None if index_map is None else np.asarray(index_map)

    @property
    def n(self) -> int:
        return self.pointset.n

    def pairwise_row(self, i: int) -> np.ndarray:
        p = self.pointset.points
        diff = p - p[i]
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))

    @property
    def pairwise(self) -> np.ndarray:
        return self.pointset.distance_matrix()

    def original_index(self, i: int) -> int:
        return int(i) if self.index_map is None else int(self.index_map[i])


@dataclass
class AnnResult:
    candidate: int
    distance: float
    queries_used: int
    permutation_seed: int
    query_log: list[tuple[int, float]] = field(default_factory=list)
    permutation: np.ndarray | None = field(default=None, repr=False)


@dataclass
class AnnState:
    """Lower bounds indexed by permutation position."""

    perm: np.ndarray
    lower: np.ndarray
    pos: int = 0


def update_lower_bounds(state: AnnState, inst: AnnInstance, i: int, r_i: float) -> None:
    """``a_k = max(a_k, |d(p_i, p_k) - r_i|)`` for positions after ``state.pos``."""
    rest = state.perm[state.pos + 1 :]
    if rest.size == 0:
        return
    row = inst.pairwise_row(i)
    tail = state.lower[state.pos + 1 :]
    np.maximum(tail, np.abs(row[rest] - r_i), out=tail)


def ann_search(inst: AnnInstance, seed: int, oracle: DistanceOracle | None = None,
               *, permutation=None) -> AnnResult:
    """Return a point within ``(1 + eps)`` of the nearest neighbour of ``inst.q``.

    The visiting order is a uniform permutation drawn from ``seed`` unless
    ``permutation`` is given explicitly.
    """
    if oracle is None:
        oracle = DistanceOracle(inst.pointset)
    n = inst.n
    if permutation is None:
        perm = np.random.default_rng(seed).permutation(n)
    else:
        perm = np.asarray(permutation, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(n)):
            raise ValueError("not a permutation of the point indices")
    state = AnnState(perm, np.zeros(n))
    scale = 1.0 + inst.eps
    log = []
    c, v = -1, np.inf
    t = 0
    while t < n:
        state.pos = t
        i = int(perm[t])
        r = oracle.query_point_distance(inst.q, i)
        log.append((i, r))
        update_lower_bounds(state, inst, i, r)
        if r < v:
            c, v = i, r
        # next position whose bound does not rule it out
        ahead = state.lower[t + 1 :]
        live = np.flatnonzero(~(ahead >= v / scale))
        if live.size == 0:
            break
        t = t + 1 + int(live[0])
    return AnnResult(c, float(v), len(log), seed, log, perm)


def brute_force_nn(inst: AnnInstance, oracle: DistanceOracle | None = None) -> tuple[int, float]:
    """Exact nearest neighbour by ``n`` counted distances; ties to the lowest index."""
    if oracle is None:
        oracle = DistanceOracle(inst.pointset)
    d = np.array([oracle.query_point_distance(inst.q, i) for i in range(inst.n)])
    k = int(np.argmin(d))
    return k, float(d[k])


def prefilter_with_approx(
    inst: AnnInstance,
    oracle: DistanceOracle | None = None,
    query_id: int = 0,
    *,
    approx=None,
) -> AnnInstance:
    """Drop points whose approximate distance exceeds twice the smallest one.

    ``approx`` overrides the oracle's free 2-approximations of ``d(q, p_i)``.
    """
    if approx is None:
        if oracle is None:
            oracle = DistanceOracle(inst.pointset)
        approx = oracle.approx_query_distances(inst.q, query_id)
    approx = np.asarray(approx, dtype=np.float64)
    keep = np.flatnonzero(approx <= 2.0 * approx.min())
    sub = PointSet(inst.pointset.points[keep], label=inst.pointset.label, seed=inst.pointset.seed)
    base = keep if inst.index_map is None else inst.index_map[keep]
    return AnnInstance(sub, inst.q, inst.eps, index_map=base)


def pruning_violations(inst: AnnInstance, result: AnnResult) -> list[tuple[int, int]]:
    """Pairs ``(i, j)`` where ``j`` was queried although ``i`` rules it out.

    After ``r_i`` is known, a later point ``j`` with
    ``d(i, j) >= (1 + 1/(1+eps)) r_i`` or ``d(i, j) <= eps/(1+eps) r_i`` must
    never be queried.  The thresholds are tightened by ``PRUNE_MARGIN``
    (relative) so rounding at the exact boundary is not reported.
    """
    perm = result.permutation
    if perm is None:
        raise ValueError("result carries no permutation")
    eps = inst.eps
    where = np.empty(inst.n, dtype=np.int64)
    where[perm] = np.arange(inst.n)
    queried = np.zeros(inst.n, dtype=bool)
    queried[[i for i, _ in result.query_log]] = True
    far = (1.0 + 1.0 / (1.0 + eps)) * (1.0 + PRUNE_MARGIN)
    near = (eps / (1.0 + eps)) * (1.0 - PRUNE_MARGIN)
    bad = []
    for i, r in result.query_log:
        later = perm[where[i] + 1 :]
        row = inst.pairwise_row(i)[later]
        hit = later[((row >= far * r) | (row <= near * r)) & queried[later]]
        bad.extend((i, int(j)) for j in hit)
    return bad


def run_record(inst: AnnInstance, result: AnnResult) -> str:
    """``n dim eps seed queries candidate distance``."""
    return (
        f"{inst.n} {inst.pointset.dim} {inst.eps!r} {result.permutation_seed} "
        f"{result.queries_used} {inst.original_index(result.candidate)} {result.distance!r}"
    )
