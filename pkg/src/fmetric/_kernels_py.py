"""Pure numpy versions of the hot kernels.

These define the reference semantics.  ``_kernels.pyx`` evaluates the same
expressions in the same floating-point order, so both backends produce
bit-identical bound matrices and therefore identical spanners.

Storage: square ``n x n`` float arrays of which only the strict upper
triangle (``k < l``) is authoritative.  Entries on or below the diagonal
are ignored and may hold stale values.

Scan results are tuples ``(nv, nd, nz, best, nb, first_k, first_l)``:
the number of violating pairs (ratio above the threshold), how many of
those have ``b = inf`` and ``a = 0``, the maximal violating ratio
(-1 if none), its multiplicity, and the first maximiser in row-major
order.  Pair classes for :func:`pick_pair`:

``VIOLATING``     ratio above the threshold
``DISCONNECTED``  violating with ``b = inf``
``ZERO_LOWER``    violating with ``a = 0``
``MAXIMAL``       violating with ratio equal to ``best``
"""
from __future__ import annotations

import numpy as np

VIOLATING, DISCONNECTED, ZERO_LOWER, MAXIMAL = 0, 1, 2, 3

BACKEND = "python"

_TRIU_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _triu(n):
    iu = _TRIU_CACHE.get(n)
    if iu is None:
        iu = np.triu_indices(n, 1)
        _TRIU_CACHE.clear()
        _TRIU_CACHE[n] = iu
    return iu


def gather(m, i):
    """Column ``i`` of the symmetric matrix stored in ``m``'s upper triangle."""
    return np.concatenate([m[:i, i], [0.0], m[i, i + 1 :]])


def _upper_mask(n):
    return np.triu(np.ones((n, n), dtype=bool), 1)


def _shortcuts(di, dj, w):
    return np.minimum((di[:, None] + w) + dj[None, :], (dj[:, None] + w) + di[None, :])


def relax_through_edge(d, i, j, w):
    """Shortest-path update of upper-triangle matrix ``d`` after edge ``(i, j, w)``."""
    i, j = min(i, j), max(i, j)
    if w < d[i, j]:
        d[i, j] = w
    t = _shortcuts(gather(d, i), gather(d, j), w)
    np.copyto(d, np.minimum(d, t), where=_upper_mask(d.shape[0]))


def update_bounds(a, b, known, i, j, v, threshold):
    """Refine bounds in place after revealing ``d(i, j) = v``; return a scan.

    Upper bounds first (shortest paths through the new edge), then the six
    triangle lower bounds computed from the refreshed upper bounds.  Pairs
    flagged in ``known`` keep their upper bound.  Finally ``b = max(b, a)``
    so that ``a <= b`` survives floating-point rounding.
    """
    i, j = min(i, j), max(i, j)
    n = a.shape[0]
    a[i, j] = v
    b[i, j] = v
    upper = _upper_mask(n)
    t = _shortcuts(gather(b, i), gather(b, j), v)
    np.copyto(b, np.minimum(b, t), where=upper & ~known.astype(bool))

    bi, bj = gather(b, i), gather(b, j)
    ai, aj = gather(a, i), gather(a, j)
    f = np.maximum(v - bj, aj - v)
    g = np.maximum(v - bi, ai - v)
    lb = np.maximum(
        np.maximum(f[None, :] - bi[:, None], g[None, :] - bj[:, None]),
        np.maximum(f[:, None] - bi[None, :], g[:, None] - bj[None, :]),
    )
    np.copyto(a, np.maximum(a, np.minimum(lb, b)), where=upper)
    # rounding can leave an old lower bound an ulp above a new path length
    np.copyto(b, np.maximum(b, a), where=upper)
    return scan_pairs(a, b, threshold)


def _ratios(a, b):
    iu = _triu(a.shape[0])
    au = a[iu]
    bu = b[iu]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(au == bu, 1.0, np.where(au == 0.0, np.inf, bu / au))
    return au, bu, r


def scan_pairs(a, b, threshold):
    n = a.shape[0]
    if n < 2:
        return 0, 0, 0, -1.0, 0, -1, -1
    au, bu, r = _ratios(a, b)
    viol = r > threshold
    nv = int(viol.sum())
    if nv == 0:
        return 0, 0, 0, -1.0, 0, -1, -1
    best = float(r.max())
    ties = r == best
    first = int(np.argmax(ties))
    iu = _triu(n)
    return (
        nv,
        int((viol & (bu == np.inf)).sum()),
        int((viol & (au == 0.0)).sum()),
        best,
        int(ties.sum()),
        int(iu[0][first]),
        int(iu[1][first]),
    )


def pick_pair(a, b, threshold, cls, best, rank):
    """Return the ``rank``-th pair (row-major over ``k < l``) of class ``cls``."""
    iu = _triu(a.shape[0])
    au, bu, r = _ratios(a, b)
    sel = r > threshold
    if cls == DISCONNECTED:
        sel &= bu == np.inf
    elif cls == ZERO_LOWER:
        sel &= au == 0.0
    elif cls == MAXIMAL:
        sel &= r == best
    idx = np.flatnonzero(sel)
    if rank < 0 or rank >= idx.shape[0]:
        raise IndexError(f"rank {rank} out of range for {idx.shape[0]} candidates")
    k = idx[rank]
    return int(iu[0][k]), int(iu[1][k])


def pair_ratio(a, b, i, j):
    i, j = min(i, j), max(i, j)
    x, y = a[i, j], b[i, j]
    if x == y:
        return 1.0
    if x == 0.0:
        return float("inf")
    return float(y / x)
