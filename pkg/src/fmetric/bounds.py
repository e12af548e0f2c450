"""Per-pair lower/upper distance bounds refined by the triangle inequality."""
from __future__ import annotations

import io
import logging
import math

import numpy as np

from . import kernels

__all__ = ["BoundMatrix", "InconsistentMetricError", "new_bound_matrix", "update_bounds", "ratio"]

log = logging.getLogger(__name__)

REVEAL_SLACK = 1e-9


class InconsistentMetricError(ValueError):
    """A revealed distance falls outside its current bounds."""


def _symmetric(m):
    up = np.triu(m, 1)
    return up + up.T


class BoundMatrix:
    """Lower bounds ``a`` and upper bounds ``b`` for every pair of points.

    Starts at ``a = 0`` and ``b = inf`` off the diagonal.  After any
    sequence of :meth:`update` calls, ``b`` is the shortest-path metric of
    the revealed edges and ``a`` collects the six triangle-inequality bounds
    through each new edge.

    With ``strict=True`` a reveal outside ``[a, b]`` (beyond a small
    relative slack) raises :class:`InconsistentMetricError`; otherwise it is
    logged and applied anyway.

    ``threshold`` is the ratio the violation scan compares against; every
    update refreshes :attr:`last_scan` for that threshold as a by-product.
    """

    def __init__(self, n: int, *, threshold: float = 1.0, strict: bool = False,
                 backend: str | None = None):
        if n < 1:
            raise ValueError("a bound matrix needs at least one point")
        self.n = n
        self.strict = strict
        self.threshold = float(threshold)
        self._k = kernels.get_backend(backend) if backend else kernels.active
        # only the strict upper triangle is authoritative
        self._a = np.zeros((n, n))
        self._b = np.full((n, n), np.inf)
        self.known = np.zeros((n, n), dtype=bool)
        self.n_known = 0
        self._scan = None

    @property
    def backend(self) -> str:
        return self._k.BACKEND

    @property
    def a(self) -> np.ndarray:
        """Symmetric copy of the lower bounds."""
        return _symmetric(self._a)

    @property
    def b(self) -> np.ndarray:
        """Symmetric copy of the upper bounds."""
        return _symmetric(self._b)

    def _pair(self, i, j):
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError(f"pair ({i}, {j}) out of range for n={self.n}")
        if i == j:
            raise ValueError("bounds are only defined for distinct points")
        return (i, j) if i < j else (j, i)

    def lower(self, i: int, j: int) -> float:
        return float(self._a[self._pair(i, j)])

    def upper(self, i: int, j: int) -> float:
        return float(self._b[self._pair(i, j)])

    def update(self, i: int, j: int, v: float) -> None:
        """Record ``d(i, j) = v`` and propagate to every other pair."""
        i, j = self._pair(i, j)
        v = float(v)
        if v < 0 or math.isnan(v):
            raise ValueError(f"distance must be non-negative, got {v}")
        lo, hi = self._a[i, j], self._b[i, j]
        slack = REVEAL_SLACK * max(1.0, v)
        if v < lo - slack or v > hi + slack:
            msg = f"d({i},{j}) = {v!r} outside bounds [{lo!r}, {hi!r}]"
            if self.strict:
                raise InconsistentMetricError(msg)
            log.warning("inconsistent metric: %s", msg)
        if self.known[i, j] and v == hi and v == lo:
            return
        if not self.known[i, j]:
            self.n_known += 1
        self.known[i, j] = self.known[j, i] = True
        self._scan = self._k.update_bounds(self._a, self._b, self.known, i, j, v, self.threshold)

    def scan(self):
        """Violation summary ``(nv, nd, nz, best, nb, first_k, first_l)``."""
        if self._scan is None:
            self._scan = self._k.scan_pairs(self._a, self._b, self.threshold)
        return self._scan

    def pick(self, cls: int, best: float, rank: int) -> tuple[int, int]:
        return self._k.pick_pair(self._a, self._b, self.threshold, cls, best, rank)

    def ratio(self, i: int, j: int) -> float:
        """``b/a`` with ``x/0 = inf`` and ``1`` whenever ``a == b``."""
        i, j = self._pair(i, j)
        return self._k.pair_ratio(self._a, self._b, i, j)

    def known_pairs(self) -> list[tuple[int, int]]:
        ii, jj = np.nonzero(np.triu(self.known, 1))
        return list(zip(ii.tolist(), jj.tolist()))

    def dump(self) -> str:
        """Text matrix: first line ``n``, then row ``k`` as ``a,b`` per column."""
        a, b = self.a, self.b
        out = io.StringIO()
        out.write(f"{self.n}\n")
        for k in range(self.n):
            out.write(" ".join(f"{float(x)!r},{float(y)!r}" for x, y in zip(a[k], b[k])))
            out.write("\n")
        return out.getvalue()


def new_bound_matrix(n: int, **kw) -> BoundMatrix:
    return BoundMatrix(n, **kw)


def update_bounds(m: BoundMatrix, i: int, j: int, v: float) -> BoundMatrix:
    m.update(i, j, v)
    return m


def ratio(m: BoundMatrix, i: int, j: int) -> float:
    return m.ratio(i, j)
