"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback.  Set ``FMETRIC_BACKEND=python`` to force the fallback (useful
for benchmarking and cross-checking).
"""
from __future__ import annotations

import os
import warnings

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

VIOLATING = _kernels_py.VIOLATING
DISCONNECTED = _kernels_py.DISCONNECTED
ZERO_LOWER = _kernels_py.ZERO_LOWER
MAXIMAL = _kernels_py.MAXIMAL


def available_backends() -> list[str]:
    return ["compiled", "python"] if _compiled is not None else ["python"]


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` (``auto``, ``compiled``, ``python``)."""
    name = name or os.environ.get("FMETRIC_BACKEND", "auto")
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
        return _compiled
    if name != "auto":
        raise ValueError(f"unknown kernel backend {name!r}")
    if _compiled is None:
        warnings.warn("fmetric: compiled kernels unavailable, using numpy fallback", stacklevel=2)
        return _kernels_py
    return _compiled


active = get_backend()
