"""Selects the descriptor kernel backend at import time.

The compiled extension is preferred when it was built; otherwise the
numpy fallback is used.  Set ``GRIDSHAPE_BACKEND=numpy`` or ``=cython``
to force a choice (forcing an unavailable backend is an error).
"""

from __future__ import annotations

import os

import numpy as np

from . import _binned

try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None

_IMPLS = {"numpy": _binned.bin_percentiles}
if _kernels is not None:
    _IMPLS["cython"] = _kernels.bin_percentiles

_active: str | None = None


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_IMPLS))


def active_backend() -> str:
    """Name of the backend used when none is requested explicitly."""
    global _active
    if _active is None:
        forced = os.environ.get("GRIDSHAPE_BACKEND", "").strip().lower()
        if forced:
            if forced not in ("cython", "numpy"):
                raise ValueError(
                    f"GRIDSHAPE_BACKEND must be 'cython' or 'numpy', not {forced!r}"
                )
            if forced not in _IMPLS:
                raise RuntimeError(
                    "GRIDSHAPE_BACKEND=cython but the compiled extension is not installed"
                )
            _active = forced
        else:
            _active = "cython" if "cython" in _IMPLS else "numpy"
    return _active


def bin_percentiles(
    bin_ids: np.ndarray,
    heights: np.ndarray,
    n_bins: int,
    layers: int,
    *,
    nearest_rank: bool = False,
    fill: float = -2.0,
    backend: str | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Dispatch to the requested (or active) percentile kernel."""
    name = backend or active_backend()
    try:
        impl = _IMPLS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    return impl(bin_ids, heights, n_bins, layers, nearest_rank, fill)
