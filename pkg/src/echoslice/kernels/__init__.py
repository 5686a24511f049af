"""Trilinear sampling kernels.

The compiled Cython kernel is preferred when the extension built; a pure
NumPy implementation with identical semantics is the fallback. Selection
happens at import time and can be forced with ECHOSLICE_BACKEND=python
(or =cython) for benchmarking.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pure

try:
    from . import _trilinear as _ext
except ImportError:  # extension not built
    _ext = None

_forced = os.environ.get("ECHOSLICE_BACKEND", "").strip().lower()
if _forced == "python" or (_ext is None and _forced != "cython"):
    DEFAULT_BACKEND = "python"
elif _ext is None:
    raise ImportError("ECHOSLICE_BACKEND=cython but the extension is not built")
else:
    DEFAULT_BACKEND = "cython"


def available_backends() -> tuple[str, ...]:
    return ("python",) if _ext is None else ("cython", "python")


def sample_trilinear(frame: np.ndarray, coords: np.ndarray,
                     backend: str | None = None) -> np.ndarray:
    """Trilinearly sample a uint8 grid at fractional index coordinates.

    Parameters
    ----------
    frame : (I, J, K) uint8 array
    coords : (N, 3) float64 fractional indices into the grid
    backend : optional "cython" or "python" override

    Points outside [0, dim-1] on any axis return 0.
    """
    backend = backend or DEFAULT_BACKEND
    frame = np.ascontiguousarray(frame, dtype=np.uint8)
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 3:
        raise ValueError("coords must have shape (N, 3)")
    if backend == "python":
        return _pure.sample_trilinear(frame, coords)
    if backend == "cython":
        if _ext is None:
            raise ValueError("cython backend is not built")
        out = np.empty(coords.shape[0], dtype=np.float64)
        _ext.sample_trilinear(frame, coords, out)
        return out
    raise ValueError(f"unknown backend {backend!r}")
