"""Pure-numpy per-bin percentile kernel (fallback backend).

Groups heights by flat bin id with a single stable lexsort, then gathers
the requested order statistics for every non-empty bin at once.  The
compiled backend in ``_kernels`` implements the same contract; both must
produce bitwise-identical results (ties in height are broken by the
original point index in both).
"""

from __future__ import annotations

import numpy as np


def bin_percentiles(
    bin_ids: np.ndarray,
    heights: np.ndarray,
    n_bins: int,
    layers: int,
    nearest_rank: bool,
    fill: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Per-bin evenly spaced percentiles of grouped heights.

    Layer k (0-based) of a bin with M heights is the value at fractional
    rank (M-1)*k/(layers-1) of the sorted heights: linearly interpolated,
    or the nearest rank (half-up) when ``nearest_rank`` is set.  A single
    layer takes the bin minimum.  Returns (values, mask, source) where
    ``values`` is (n_bins, layers), ``mask`` flags non-empty bins and
    ``source`` holds the index of the selected input point per entry
    (nearest-rank mode only, -1 for empty bins; None otherwise).
    """
    if layers < 1:
        raise ValueError("layers must be >= 1")
    bin_ids = np.ascontiguousarray(bin_ids, dtype=np.int64)
    heights = np.ascontiguousarray(heights, dtype=np.float64)
    if bin_ids.shape != heights.shape or bin_ids.ndim != 1:
        raise ValueError("bin_ids and heights must be 1D arrays of equal length")

    values = np.full((n_bins, layers), fill, dtype=np.float64)
    mask = np.zeros(n_bins, dtype=bool)
    source = np.full((n_bins, layers), -1, dtype=np.int64) if nearest_rank else None
    if bin_ids.size == 0:
        return values, mask, source
    if bin_ids.min() < 0 or bin_ids.max() >= n_bins:
        raise ValueError("bin id out of range")

    order = np.lexsort((heights, bin_ids))
    sorted_bins = bin_ids[order]
    sorted_heights = heights[order]
    occupied, starts, counts = np.unique(sorted_bins, return_index=True, return_counts=True)
    mask[occupied] = True

    for k in range(layers):
        if layers == 1:
            rank = np.zeros(len(occupied))
        else:
            rank = (counts - 1).astype(np.float64) * k / (layers - 1)
        if nearest_rank:
            idx = starts + np.floor(rank + 0.5).astype(np.int64)
            values[occupied, k] = sorted_heights[idx]
            source[occupied, k] = order[idx]
        else:
            lo = np.floor(rank).astype(np.int64)
            hi = np.minimum(lo + 1, counts - 1)
            frac = rank - lo
            vlo = sorted_heights[starts + lo]
            vhi = sorted_heights[starts + hi]
            values[occupied, k] = vlo + frac * (vhi - vlo)
    return values, mask, source
