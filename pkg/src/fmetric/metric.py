"""Ground-truth point sets and the query-counting distance oracle.

Every algorithm in this package touches the metric only through a
:class:`DistanceOracle`.  The oracle counts each exact distance evaluation,
which is the sole cost unit the algorithms try to minimise.
"""
from __future__ import annotations

import contextlib
import math
import zlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "GENERATORS",
    "PointSet",
    "QueryLedger",
    "DistanceOracle",
    "generate_pointset",
    "derive_seed",
    "read_pointset",
    "write_pointset",
]

GENERATORS = ("uniform", "normal", "clustered", "exp")

CLUSTER_SIZE = 50


def derive_seed(seed: int, tag: str) -> int:
    """Return a child seed for the named purpose, stable across platforms."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(tag.encode())])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class PointSet:
    """A finite set of points in ``R^dim`` with the Euclidean metric.

    ``clusters`` is the per-point center assignment for the clustered
    generator and ``None`` otherwise.
    """

    points: np.ndarray
    label: str = "custom"
    seed: int = 0
    clusters: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"expected a non-empty (n, dim) array, got shape {pts.shape}")
        self.points = pts

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def distance_matrix(self) -> np.ndarray:
        """All pairwise distances. Test and setup use only; never counted."""
        diff = self.points[:, None, :] - self.points[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def generate_pointset(kind: str, dim: int, n: int, seed: int) -> PointSet:
    """Draw one of the four random test sets.

    uniform
        unit cube ``[0, 1]^dim``
    normal
        i.i.d. standard normal coordinates
    clustered
        ``ceil(n / 50)`` centers uniform in ``[0, 10000]^dim``; point ``k``
        belongs to center ``k // 50`` and gets standard normal noise
    exp
        coordinates ``2**xi`` with ``xi`` uniform on ``[1, 25]``
    """
    if kind not in GENERATORS:
        raise ValueError(f"unknown generator {kind!r}; choose from {GENERATORS}")
    if dim <= 0 or n <= 0:
        raise ValueError(f"dim and n must be positive (got dim={dim}, n={n})")
    rng = np.random.default_rng(seed)
    clusters = None
    if kind == "uniform":
        pts = rng.random((n, dim))
    elif kind == "normal":
        pts = rng.standard_normal((n, dim))
    elif kind == "clustered":
        n_centers = math.ceil(n / CLUSTER_SIZE)
        centers = rng.uniform(0.0, 10000.0, size=(n_centers, dim))
        clusters = np.arange(n) // CLUSTER_SIZE
        pts = centers[clusters] + rng.standard_normal((n, dim))
    else:
        pts = np.exp2(rng.uniform(1.0, 25.0, size=(n, dim)))
    return PointSet(pts, label=kind, seed=int(seed), clusters=clusters)


def write_pointset(ps: PointSet, path) -> None:
    lines = [f"{ps.dim} {ps.n}"]
    lines.extend(" ".join(format(x, ".17g") for x in row) for row in ps.points)
    Path(path).write_text("\n".join(lines) + "\n")


def read_pointset(path, label: str = "file") -> PointSet:
    rows = Path(path).read_text().split("\n")
    dim, n = (int(t) for t in rows[0].split())
    data = [[float(t) for t in line.split()] for line in rows[1 : n + 1]]
    pts = np.array(data, dtype=np.float64).reshape(n, dim)
    return PointSet(pts, label=label)


@dataclass
class QueryLedger:
    """Exact-distance counts, split by algorithm phase."""

    pair_phases: Counter = field(default_factory=Counter)
    query_point_phases: Counter = field(default_factory=Counter)

    @property
    def exact_point_pair_queries(self) -> int:
        return sum(self.pair_phases.values())

    @property
    def exact_query_point_queries(self) -> int:
        return sum(self.query_point_phases.values())


class DistanceOracle:
    """Exact Euclidean distances over a :class:`PointSet`, with counting.

    Pairs ``i != j`` cost one query each, every time (no caching here;
    callers own their caches).  ``approx_distance`` serves a frozen value
    in ``[d, 2d]`` for free, materialised on first use from ``approx_seed``.
    """

    def __init__(self, pointset: PointSet, approx_seed: int = 0, approx_table=None):
        self.pointset = pointset
        self.approx_seed = int(approx_seed)
        self.ledger = QueryLedger()
        self._phase = "main"
        self._points = pointset.points
        self._approx: np.ndarray | None = None
        if approx_table is not None:
            self._approx = self._checked_table(approx_table)

    def _checked_table(self, table) -> np.ndarray:
        table = np.array(table, dtype=np.float64)
        n = self.n
        if table.shape != (n, n) or not np.array_equal(table, table.T):
            raise ValueError("approx table must be a symmetric n x n matrix")
        d = self.pointset.distance_matrix()
        if np.any(table < d) or np.any(table > 2 * d):
            raise ValueError("approx table leaves the [d, 2d] envelope")
        table.setflags(write=False)
        return table

    @property
    def n(self) -> int:
        return self.pointset.n

    @property
    def exact_query_count(self) -> int:
        return self.ledger.exact_point_pair_queries

    @property
    def query_point_count(self) -> int:
        return self.ledger.exact_query_point_queries

    @contextlib.contextmanager
    def phase(self, name: str):
        """Attribute queries issued inside the block to phase ``name``."""
        prev, self._phase = self._phase, name
        try:
            yield self
        finally:
            self._phase = prev

    def _check(self, i: int) -> int:
        if not -self.n <= i < self.n:
            raise IndexError(f"point index {i} out of range for n={self.n}")
        return i % self.n

    def exact_distance(self, i: int, j: int) -> float:
        i, j = self._check(i), self._check(j)
        if i == j:
            return 0.0
        self.ledger.pair_phases[self._phase] += 1
        d = self._points[i] - self._points[j]
        return math.sqrt(float(d @ d))

    def query_point_distance(self, q, i: int) -> float:
        q = np.asarray(q, dtype=np.float64).reshape(-1)
        if q.shape[0] != self.pointset.dim:
            raise ValueError(f"query has dimension {q.shape[0]}, point set has {self.pointset.dim}")
        i = self._check(i)
        self.ledger.query_point_phases[self._phase] += 1
        d = self._points[i] - q
        return math.sqrt(float(d @ d))

    @property
    def approx_table(self) -> np.ndarray:
        """Symmetric matrix ``A`` with ``d <= A <= 2d``; read-only."""
        if self._approx is None:
            n = self.n
            rng = np.random.default_rng(self.approx_seed)
            iu = np.triu_indices(n, 1)
            factors = np.zeros((n, n))
            factors[iu] = rng.uniform(1.0, 2.0, size=iu[0].shape[0])
            factors = factors + factors.T
            table = factors * self.pointset.distance_matrix()
            table.setflags(write=False)
            self._approx = table
        return self._approx

    def approx_distance(self, i: int, j: int) -> float:
        i, j = self._check(i), self._check(j)
        return float(self.approx_table[i, j])

    def approx_query_distances(self, q, query_id: int = 0) -> np.ndarray:
        """Free 2-approximations of ``d(q, p_i)`` for every ``i``.

        Factors are frozen per ``(approx_seed, query_id)``.
        """
        q = np.asarray(q, dtype=np.float64).reshape(-1)
        if q.shape[0] != self.pointset.dim:
            raise ValueError(f"query has dimension {q.shape[0]}, point set has {self.pointset.dim}")
        rng = np.random.default_rng(derive_seed(self.approx_seed, f"query-{query_id}"))
        factors = rng.uniform(1.0, 2.0, size=self.n)
        true = np.sqrt(((self._points - q) ** 2).sum(axis=1))
        return factors * true
