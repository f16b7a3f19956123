"""The three structured 2D representations and their label maps.

All descriptors share the binning of :func:`gridshape.geometry.to_grid_coords`;
points flagged out of bounds are dropped before any statistics are taken.

* MLH: per-bin height percentiles, evenly spaced from minimum (layer 1)
  to maximum (layer c).  Empty bins carry a sentinel fill value.
* Occupancy slices: binary presence inside c equidistant bands of a
  fixed thickness along the grid normal.
* Occupancy volume: binary presence in the full H x W x c voxelization
  of the grid box.  With thickness = depth/c the slice descriptor
  reduces to the volume descriptor exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .geometry import GridFrame, GridSpec, PointCloud, axis_bins, to_grid_coords

__all__ = [
    "MlhDescriptor",
    "SliceDescriptor",
    "VolumeDescriptor",
    "LabelMap",
    "DEFAULT_FILL",
    "compute_mlh",
    "compute_mlh_labeled",
    "compute_slices",
    "compute_volume",
]

# Outside the attainable height range of a unit-normalized shape, so an
# empty bin can never be mistaken for data.
DEFAULT_FILL = -2.0

PERCENTILE_MODES = ("interpolated", "nearest_rank")


@dataclass(frozen=True, eq=False)
class MlhDescriptor:
    """Layered height map: (H, W, c) float heights plus a non-empty mask."""

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 3:
            raise ValueError("values must have shape (H, W, c)")
        if self.mask.shape != self.values.shape[:2] or self.mask.dtype != np.bool_:
            raise ValueError("mask must be a boolean (H, W) array")

    @property
    def layers(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True, eq=False)
class SliceDescriptor:
    """Occupancy slices: (H, W, c) binary bands at fixed heights."""

    values: np.ndarray
    slice_centers: np.ndarray
    thickness: float

    def __post_init__(self):
        if self.values.ndim != 3 or self.values.dtype != np.uint8:
            raise ValueError("values must be a uint8 (H, W, c) array")
        centers = np.asarray(self.slice_centers, dtype=np.float64)
        if centers.shape != (self.values.shape[2],):
            raise ValueError("one slice center per layer required")
        if len(centers) > 1 and not (np.diff(centers) > 0).all():
            raise ValueError("slice centers must be strictly increasing")
        object.__setattr__(self, "slice_centers", centers)


@dataclass(frozen=True, eq=False)
class VolumeDescriptor:
    """Binary occupancy volume on the (H, W, c) grid box."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 3 or self.values.dtype != np.uint8:
            raise ValueError("values must be a uint8 (H, W, c) array")


@dataclass(frozen=True, eq=False)
class LabelMap:
    """Per-entry labels aligned with an MLH descriptor.

    Entries are in [1, n_classes + 1]; the extra id marks entries with no
    source point (empty bins) and must appear exactly where the paired
    descriptor's mask is clear.
    """

    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 3:
            raise ValueError("labels must have shape (H, W, c)")
        if self.n_classes < 1:
            raise ValueError("n_classes must be >= 1")
        if labels.size and (labels.min() < 1 or labels.max() > self.n_classes + 1):
            raise ValueError("labels out of [1, n_classes + 1]")
        object.__setattr__(self, "labels", labels)

    @property
    def invalid_label(self) -> int:
        return self.n_classes + 1


def _binned_heights(cloud: PointCloud, frame: GridFrame, spec: GridSpec):
    """Flat bin ids and heights of the in-bounds points (plus their mask)."""
    coords = to_grid_coords(cloud, frame, spec)
    keep = coords.in_bounds
    flat = coords.bin_i[keep] * spec.w + coords.bin_j[keep]
    return flat, coords.height[keep], keep


def compute_mlh(
    cloud: PointCloud,
    frame: GridFrame,
    spec: GridSpec,
    percentile_mode: str = "interpolated",
    fill: float = DEFAULT_FILL,
) -> MlhDescriptor:
    """Multi-layered height map of a cloud under a grid frame.

    Layer k of a non-empty bin is the (k-1)/(c-1)*100-th percentile of
    the bin's point heights, so layer 1 is the minimum and layer c the
    maximum; a single layer takes the minimum.  ``percentile_mode``
    selects interpolated percentiles (default) or nearest-rank, which
    ties every entry to one concrete source point.
    """
    if percentile_mode not in PERCENTILE_MODES:
        raise ValueError(f"percentile_mode must be one of {PERCENTILE_MODES}")
    if len(cloud) == 0:
        raise ValueError("cannot compute an MLH descriptor of an empty cloud")
    flat, heights, _ = _binned_heights(cloud, frame, spec)
    values, mask, _ = backend.bin_percentiles(
        flat,
        heights,
        spec.n_bins,
        spec.layers,
        nearest_rank=(percentile_mode == "nearest_rank"),
        fill=fill,
    )
    return MlhDescriptor(
        values.reshape(spec.h, spec.w, spec.layers),
        mask.reshape(spec.h, spec.w),
    )


def compute_mlh_labeled(
    cloud: PointCloud,
    frame: GridFrame,
    spec: GridSpec,
    n_classes: int | None = None,
    fill: float = DEFAULT_FILL,
) -> tuple[MlhDescriptor, LabelMap]:
    """MLH descriptor plus the label map of its source points.

    Heights use nearest-rank percentiles so every entry corresponds to
    exactly one input point, whose label is copied into the map.  Empty
    entries get the invalid label n_classes + 1.  ``n_classes`` defaults
    to the largest label present in the cloud.
    """
    if cloud.labels is None:
        raise ValueError("cloud has no labels")
    if len(cloud) == 0:
        raise ValueError("cannot compute an MLH descriptor of an empty cloud")
    n = int(cloud.labels.max()) if n_classes is None else int(n_classes)
    if cloud.labels.max() > n:
        raise ValueError("cloud labels exceed n_classes")
    flat, heights, keep = _binned_heights(cloud, frame, spec)
    values, mask, source = backend.bin_percentiles(
        flat, heights, spec.n_bins, spec.layers, nearest_rank=True, fill=fill
    )
    kept_labels = cloud.labels[keep]
    labels = np.full(values.shape, n + 1, dtype=np.int64)
    chosen = source >= 0
    labels[chosen] = kept_labels[source[chosen]]
    mlh = MlhDescriptor(
        values.reshape(spec.h, spec.w, spec.layers),
        mask.reshape(spec.h, spec.w),
    )
    return mlh, LabelMap(labels.reshape(spec.h, spec.w, spec.layers), n)


def compute_volume(cloud: PointCloud, frame: GridFrame, spec: GridSpec) -> VolumeDescriptor:
    """Binary occupancy of the (H, W, c) voxelization of the grid box."""
    flat, heights, _ = _binned_heights(cloud, frame, spec)
    depth_bin, _ = axis_bins(heights, *spec.depth, spec.layers)
    cells = np.zeros(spec.n_bins * spec.layers, dtype=np.uint8)
    cells[flat * spec.layers + depth_bin] = 1
    return VolumeDescriptor(cells.reshape(spec.h, spec.w, spec.layers))


def compute_slices(cloud: PointCloud, frame: GridFrame, spec: GridSpec) -> SliceDescriptor:
    """Binary occupancy inside c equidistant bands of width ``thickness``.

    Band k is centered at depth_min + (k - 1/2) * depth/c; for c = 1 this
    is the mid-section of the depth range.  Bands are half-open at the
    top, except that a point exactly at the depth maximum counts into the
    last band whenever the band reaches it (thickness >= depth/c),
    mirroring the closed last bin of the volume grid.
    """
    if spec.thickness is None:
        raise ValueError("grid spec has no slice thickness")
    t = spec.thickness
    d0, d1 = spec.depth
    step = spec.depth_step
    c = spec.layers
    centers = d0 + (np.arange(c) + 0.5) * step

    flat, heights, _ = _binned_heights(cloud, frame, spec)
    cells = np.zeros((spec.n_bins, c), dtype=np.uint8)
    for k in range(c):
        # written as base + half-gap so that t == step collapses the gap
        # to exactly 0.0 and band edges coincide with volume bin edges
        lo = d0 + k * step + 0.5 * (step - t)
        hi = lo + t
        in_band = (heights >= lo) & (heights < hi)
        if k == c - 1 and t >= step:
            in_band |= heights == d1
        cells[flat[in_band], k] = 1
    return SliceDescriptor(cells.reshape(spec.h, spec.w, c), centers, t)
