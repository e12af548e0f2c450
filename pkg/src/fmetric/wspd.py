"""Well-separated pair decompositions and the spanners they induce.

Two backends share one recursion over a hierarchical decomposition:

* ``quadtree``: compressed 2^d-ary quadtree on coordinates.  Separation is
  tested with point bounding boxes, so it costs no distance queries.
* ``covertree``: cover tree with base 1.3, built by insertion through the
  distance oracle.  Every distance it needs is counted (once; the tree keeps
  its own cache) and radii are derived from distances it already paid for.

Identical points end up in the same leaf.  A leaf holding ``m`` copies
contributes the chain ``{p1}|{p2}, {p1,p2}|{p3}, ...``, which is
well-separated for any ``s`` because every diameter and distance is 0.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .metric import DistanceOracle, PointSet
from .spanner import Spanner

__all__ = [
    "BACKENDS",
    "WspdPair",
    "CoverTree",
    "build_quadtree",
    "build_cover_tree",
    "build_wspd",
    "build_wspd_spanner",
    "wspd_to_text",
    "write_wspd",
]

BACKENDS = ("quadtree", "covertree")

COVER_BASE = 1.3
CUBE_PAD = 1e-9


@dataclass(frozen=True)
class WspdPair:
    A: tuple[int, ...]
    B: tuple[int, ...]

    def __post_init__(self):
        if not self.A or not self.B:
            raise ValueError("WSPD sets must be non-empty")

    @property
    def representative_a(self) -> int:
        return self.A[0]

    @property
    def representative_b(self) -> int:
        return self.B[0]

    @property
    def size(self) -> int:
        return len(self.A) * len(self.B)


class _Node:
    __slots__ = ("idx", "children", "radius", "center", "lo", "hi")

    def __init__(self, idx, children=(), radius=0.0, center=-1, lo=None, hi=None):
        self.idx = idx
        self.children = list(children)
        self.radius = radius
        self.center = center
        self.lo = lo
        self.hi = hi

    @property
    def leaf(self):
        return not self.children


def _pair(u, v):
    return WspdPair(tuple(u.idx), tuple(v.idx))


def _chain(idx):
    return [WspdPair(tuple(idx[:k]), (idx[k],)) for k in range(1, len(idx))]


def _decompose(root, separated, dist_scale):
    """Generic WSPD recursion; ``dist_scale(node)`` is the size that gets split."""
    out = []
    stack = [(root, root)]
    while stack:
        u, v = stack.pop()
        if u is v:
            if u.leaf:
                out.extend(_chain(u.idx))
                continue
            ch = u.children
            for x in range(len(ch) - 1, -1, -1):
                for y in range(len(ch) - 1, x, -1):
                    stack.append((ch[x], ch[y]))
                stack.append((ch[x], ch[x]))
            continue
        if separated(u, v):
            out.append(_pair(u, v))
            continue
        if dist_scale(u) < dist_scale(v) or u.leaf:
            u, v = v, u
        for c in reversed(u.children):
            stack.append((c, v))
    return out


# --- quadtree -------------------------------------------------------------

def build_quadtree(points: np.ndarray) -> _Node:
    """Compressed quadtree; leaves hold sets of identical points."""
    points = np.asarray(points, dtype=np.float64)
    n, d = points.shape
    lo, hi = points.min(axis=0), points.max(axis=0)
    side = float((hi - lo).max())
    pad = CUBE_PAD * max(1.0, side)
    root_corner, root_side = lo - pad, side + 2 * pad

    def make(idx, corner, side):
        p = points[idx]
        node = _Node(np.sort(idx), lo=p.min(axis=0), hi=p.max(axis=0))
        node.radius = float(np.linalg.norm(node.hi - node.lo))
        return node, corner, side

    root = make(np.arange(n), root_corner, root_side)
    stack = [root]
    while stack:
        node, corner, side = stack.pop()
        if node.radius == 0.0:
            continue
        p = points[node.idx]
        for _ in range(2100):
            half = side / 2
            mid = corner + half
            bits = p >= mid
            codes = bits @ (1 << np.arange(d))
            if codes.min() != codes.max():
                break
            # all in one child cell: shrink the cell (compression)
            corner = np.where(bits[0], mid, corner)
            side = half
        else:
            # cell size underflowed before separating near-identical points
            axis = int(np.argmax(node.hi - node.lo))
            codes = (p[:, axis] > node.lo[axis]).astype(np.int64)
            half, bits = side, None
        for code in np.unique(codes):
            sel = codes == code
            if bits is not None:
                c_corner = np.where(bits[np.argmax(sel)], corner + half, corner)
            else:
                c_corner = corner
            child = make(node.idx[sel], c_corner, half)
            node.children.append(child[0])
            stack.append(child)
    return root[0]


def _box_separated(s):
    def test(u, v):
        gap = np.maximum(0.0, np.maximum(u.lo - v.hi, v.lo - u.hi))
        return float(np.linalg.norm(gap)) >= s * max(u.radius, v.radius)
    return test


# --- cover tree -----------------------------------------------------------

class CoverTree:
    """Cover tree over an oracle's points, base ``COVER_BASE``.

    A point entering at level ``i`` below parent ``q`` satisfies
    ``d(p, q) <= base**(i + 1)`` (covering); a point is present on every
    level up to its own (nesting); points present at level ``i`` are more
    than ``base**i`` apart (separation).  Points at distance 0 from an
    existing node are stored as its duplicates.
    """

    def __init__(self, oracle: DistanceOracle, base: float = COVER_BASE):
        if base <= 1:
            raise ValueError("cover tree base must exceed 1")
        self.oracle = oracle
        self.base = base
        self._cache: dict[tuple[int, int], float] = {}
        n = oracle.n
        self.root = 0
        self.top = -math.inf
        self.children: list[dict[int, list[int]]] = [dict() for _ in range(n)]
        self.level = [0] * n  # level at which each point enters the tree
        self.parent_dist = [0.0] * n
        self.dups: list[list[int]] = [[] for _ in range(n)]
        self.is_dup = [False] * n
        for p in range(1, n):
            self.insert(p)
        if self.top == -math.inf:
            self.top = 0

    @property
    def queries(self) -> int:
        return len(self._cache)

    def dist(self, i: int, j: int) -> float:
        key = (i, j) if i < j else (j, i)
        d = self._cache.get(key)
        if d is None:
            d = self._cache[key] = self.oracle.exact_distance(i, j)
        return d

    def _ceil_level(self, d):
        """Smallest integer ``c`` with ``base**c >= d``."""
        c = math.ceil(math.log(d, self.base))
        while self.base ** c < d:
            c += 1
        while self.base ** (c - 1) >= d:
            c -= 1
        return c

    def insert(self, p: int) -> None:
        """Attach ``p`` below its nearest *eligible* point.

        ``x`` is eligible when ``d(p, x) <= base**level(x)``; separation then
        forces ``p`` strictly below ``log_base d(p, x)`` for every eligible
        ``x``, and the nearest one is a valid parent one level up.  The search
        descends the tree keeping nodes whose subtree (radius at most
        ``base**i / (base - 1)`` below level ``i``) could still hold a closer
        eligible point.
        """
        r = self.root
        d0 = self.dist(p, r)
        if d0 == 0.0:
            self.dups[r].append(p)
            self.is_dup[p] = True
            return
        self.top = max(self.top, self._ceil_level(d0))
        self.level[r] = self.top
        reach = 1.0 / (self.base - 1.0)
        best, best_d = r, d0
        cover = {r: d0}
        i = self.top
        while cover:
            # next level at which any covered node has children
            nxt = [l for q in cover for l in self.children[q] if l < i]
            if not nxt:
                break
            i = max(nxt)
            ext = dict(cover)
            for q in cover:
                for c in self.children[q].get(i, ()):
                    dc = self.dist(p, c)
                    if dc == 0.0:
                        self.dups[c].append(p)
                        self.is_dup[p] = True
                        return
                    ext[c] = dc
                    if dc <= self.base ** i and dc < best_d:
                        best, best_d = c, dc
            limit = min(best_d, self.base ** i) + self.base ** i * reach
            cover = {q: dq for q, dq in ext.items() if dq <= limit}
        lvl = self._ceil_level(best_d) - 1
        self.children[best].setdefault(lvl, []).append(p)
        self.level[p] = lvl
        self.parent_dist[p] = best_d

    # -- compressed view used by the WSPD recursion

    def to_nodes(self) -> _Node:
        n = self.oracle.n

        def node(p, lvl):
            lvls = sorted((l for l in self.children[p] if l < lvl), reverse=True)
            if not lvls:
                return _Node(sorted([p] + self.dups[p]), center=p, radius=0.0)
            j = lvls[0]
            kids = [node(p, j)] + [node(c, j) for c in self.children[p][j]]
            idx = sorted(x for k in kids for x in k.idx)
            rad = max(kids[0].radius,
                      max(self.parent_dist[c] + k.radius for c, k in zip(self.children[p][j], kids[1:])))
            return _Node(idx, kids, rad, center=p)

        if n == 0:
            raise ValueError("empty tree")
        # depth is bounded by the number of (point, level) nodes
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 20 * n + 1000))
        try:
            return node(self.root, math.inf)
        finally:
            sys.setrecursionlimit(limit)


def build_cover_tree(oracle: DistanceOracle, base: float = COVER_BASE) -> CoverTree:
    return CoverTree(oracle, base)


def _ball_separated(s, tree):
    def test(u, v):
        d = tree.dist(u.center, v.center)
        return d - u.radius - v.radius >= 2.0 * s * max(u.radius, v.radius)
    return test


# --- public API -----------------------------------------------------------

def build_wspd(
    pointset: PointSet,
    s: float,
    backend: str = "quadtree",
    *,
    oracle: DistanceOracle | None = None,
) -> list[WspdPair]:
    """``s``-well-separated pair decomposition of ``pointset``.

    Every unordered pair of distinct indices lies in exactly one returned
    pair.  The cover-tree backend pays its distances through ``oracle``
    (a fresh one if omitted).
    """
    if not s > 0:
        raise ValueError("separation must be positive")
    if backend not in BACKENDS:
        raise ValueError(f"unknown WSPD backend {backend!r}")
    if pointset.n < 2:
        return []
    if backend == "quadtree":
        root = build_quadtree(pointset.points)
        return _decompose(root, _box_separated(s), lambda u: u.radius)
    if oracle is None:
        oracle = DistanceOracle(pointset)
    tree = CoverTree(oracle)
    root = tree.to_nodes()
    return _decompose(root, _ball_separated(s, tree), lambda u: u.radius)


def build_wspd_spanner(
    pointset: PointSet,
    eps: float,
    backend: str = "quadtree",
    *,
    oracle: DistanceOracle | None = None,
) -> Spanner:
    """Spanner with one representative edge per pair of a ``16/eps``-WSPD."""
    if not 0 < eps <= 1:
        raise ValueError("WSPD spanners need eps in (0, 1]")
    if oracle is None:
        oracle = DistanceOracle(pointset)
    start = oracle.exact_query_count
    with oracle.phase("wspd-tree"):
        before = oracle.exact_query_count
        pairs = build_wspd(pointset, 16.0 / eps, backend, oracle=oracle)
        tree_queries = oracle.exact_query_count - before
    edges = []
    with oracle.phase("wspd-edges"):
        for pr in pairs:
            i, j = pr.representative_a, pr.representative_b
            edges.append((i, j, oracle.exact_distance(i, j)))
    return Spanner(
        pointset.n, edges, eps, oracle.exact_query_count - start,
        f"wspd_{backend}", 0, backend_queries=tree_queries,
    )


def wspd_to_text(pairs, n: int, s: float, backend: str) -> str:
    lines = [f"{n} {s!r} {backend}"]
    lines.extend(f"{len(p.A)} {len(p.B)} {p.representative_a} {p.representative_b}" for p in pairs)
    return "\n".join(lines) + "\n"


def write_wspd(path, pairs, n: int, s: float, backend: str) -> None:
    Path(path).write_text(wspd_to_text(pairs, n, s, backend))
