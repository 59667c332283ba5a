"""Join-kernel backend selection.

The compiled extension is preferred when importable; the pure-numpy twin is
the fallback. Set FIBERALIGN_PURE=1 to force the fallback (useful for
benchmarking and for debugging the compiled kernels against it).
"""
from __future__ import annotations

import os

from . import _joinkern_py

if os.environ.get("FIBERALIGN_PURE"):
    _impl = _joinkern_py
else:
    try:
        from . import _joinkern_c as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _joinkern_py

BACKEND: str = _impl.BACKEND
brute_pairs = _impl.brute_pairs
grid_pairs = _impl.grid_pairs


def backend() -> str:
    """Name of the active kernel backend ("cython" or "python")."""
    return BACKEND
