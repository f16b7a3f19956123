"""Back-projection of label maps and multi-view segmentation fusion.

The 3D labeling pipeline: per-layer 2D label maps are back-projected to
labeled clouds at bin centers, the clouds of all orientation views are
pooled, a voxel grid takes the per-voxel mode of the pooled labels, and
the target cloud finally reads its labels out of that grid (falling back
to the nearest non-empty voxel where its own voxel is empty).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptors import LabelMap, MlhDescriptor
from .geometry import GridFrame, GridSpec, PointCloud, axis_bins

__all__ = [
    "LabeledVoxelGrid",
    "backproject",
    "voxel_mode_labels",
    "transfer_labels",
    "fuse_views",
    "point_iou",
]

_EMPTY = np.iinfo(np.int64).max  # sentinel for unlabeled voxels during fill


@dataclass(frozen=True, eq=False)
class LabeledVoxelGrid:
    """Cubic voxel grid of labels; 0 marks an empty voxel."""

    labels: np.ndarray
    extent: tuple[float, float]
    n_classes: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 3 or len(set(labels.shape)) != 1:
            raise ValueError("labels must be a cubic (R, R, R) array")
        lo, hi = self.extent
        if not hi > lo:
            raise ValueError("extent must be non-degenerate")
        if labels.size and (labels.min() < 0 or labels.max() > self.n_classes):
            raise ValueError("labels out of [0, n_classes]")
        object.__setattr__(self, "labels", labels)

    @property
    def resolution(self) -> int:
        return self.labels.shape[0]


def backproject(
    mlh: MlhDescriptor,
    labels: LabelMap,
    frame: GridFrame,
    spec: GridSpec,
) -> PointCloud:
    """Reconstruct a labeled cloud from an MLH descriptor and label map.

    Every non-empty entry (i, j, k) becomes one world-space point at the
    bin center in the grid plane and the stored height along the normal;
    its label is copied from the map.  Entries carrying the invalid label
    are skipped.
    """
    if mlh.values.shape != labels.labels.shape:
        raise ValueError("descriptor and label map shapes differ")
    take = mlh.mask[:, :, None] & (labels.labels != labels.invalid_label)
    ii, jj, kk = np.nonzero(take)
    pu = spec.extent_u[0] + (ii + 0.5) * spec.bin_u
    pv = spec.extent_v[0] + (jj + 0.5) * spec.bin_v
    heights = mlh.values[ii, jj, kk]
    points = (
        frame.origin
        + pu[:, None] * frame.u
        + pv[:, None] * frame.v
        + heights[:, None] * frame.w
    )
    return PointCloud(points, labels=labels.labels[ii, jj, kk])


def voxel_mode_labels(
    cloud: PointCloud,
    resolution: int,
    extent: tuple[float, float] = (-1.0, 1.0),
    n_classes: int | None = None,
    invalid_label: int | None = None,
) -> LabeledVoxelGrid:
    """Vote each voxel's label as the mode of the point labels inside it.

    Ties go to the smallest label id; voxels without points stay 0.
    Points labeled ``invalid_label`` (if given) and points outside the
    extent are ignored.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if cloud.labels is None:
        raise ValueError("cloud has no labels")
    lo, hi = extent
    pts, labs = cloud.points, cloud.labels
    if invalid_label is not None:
        keep = labs != invalid_label
        pts, labs = pts[keep], labs[keep]

    grid = np.zeros((resolution, resolution, resolution), dtype=np.int64)
    if len(pts):
        ix, in_x = axis_bins(pts[:, 0], lo, hi, resolution)
        iy, in_y = axis_bins(pts[:, 1], lo, hi, resolution)
        iz, in_z = axis_bins(pts[:, 2], lo, hi, resolution)
        inside = in_x & in_y & in_z
        voxel = (ix[inside] * resolution + iy[inside]) * resolution + iz[inside]
        labs = labs[inside]
        if len(labs):
            width = int(labs.max()) + 1
            code, counts = np.unique(voxel * width + labs, return_counts=True)
            vox, lab = code // width, code % width
            # per voxel: highest count first, then smallest label
            order = np.lexsort((lab, -counts, vox))
            vox, lab = vox[order], lab[order]
            first = np.unique(vox, return_index=True)[1]
            grid.flat[vox[first]] = lab[first]

    n = int(n_classes) if n_classes is not None else int(grid.max())
    return LabeledVoxelGrid(grid, (float(lo), float(hi)), n)


def _fill_empty_voxels(labels: np.ndarray) -> np.ndarray:
    """Label empty voxels from their nearest non-empty voxel.

    Nearest is breadth-first over face adjacency; among equidistant
    voxels the smallest label wins.  Implemented as synchronous rounds of
    min-label dilation, which yields exactly that tie-break.
    """
    work = np.where(labels > 0, labels, _EMPTY)
    while True:
        empty = work == _EMPTY
        if not empty.any():
            return work
        best = np.full_like(work, _EMPTY)
        np.minimum(best[1:], work[:-1], out=best[1:])
        np.minimum(best[:-1], work[1:], out=best[:-1])
        np.minimum(best[:, 1:], work[:, :-1], out=best[:, 1:])
        np.minimum(best[:, :-1], work[:, 1:], out=best[:, :-1])
        np.minimum(best[:, :, 1:], work[:, :, :-1], out=best[:, :, 1:])
        np.minimum(best[:, :, :-1], work[:, :, 1:], out=best[:, :, :-1])
        reach = empty & (best != _EMPTY)
        if not reach.any():  # grid has no labeled voxel at all
            return work
        work[reach] = best[reach]


def transfer_labels(grid: LabeledVoxelGrid, cloud: PointCloud) -> np.ndarray:
    """Label every point of ``cloud`` from the voxel grid.

    A point takes its containing voxel's label (points outside the extent
    snap to the nearest voxel).  Points in empty voxels take the label of
    the nearest non-empty voxel; if the whole grid is empty, every point
    gets the invalid label n_classes + 1.
    """
    res = grid.resolution
    lo, hi = grid.extent
    if not (grid.labels > 0).any():
        return np.full(len(cloud), grid.n_classes + 1, dtype=np.int64)
    filled = _fill_empty_voxels(grid.labels)
    ix, _ = axis_bins(cloud.points[:, 0], lo, hi, res)
    iy, _ = axis_bins(cloud.points[:, 1], lo, hi, res)
    iz, _ = axis_bins(cloud.points[:, 2], lo, hi, res)
    return filled[ix, iy, iz]


def fuse_views(
    clouds: list[PointCloud],
    resolution: int,
    extent: tuple[float, float],
    target: PointCloud,
    n_classes: int | None = None,
) -> np.ndarray:
    """Pool labeled view clouds and label the target cloud from the pool.

    Equivalent to :func:`transfer_labels` over the
    :func:`voxel_mode_labels` grid of the concatenated view clouds.
    """
    if not clouds:
        raise ValueError("at least one view cloud required")
    for c in clouds:
        if c.labels is None:
            raise ValueError("every view cloud must carry labels")
    points = np.concatenate([c.points for c in clouds])
    labels = np.concatenate([c.labels for c in clouds])
    combined = PointCloud(points, labels=labels)
    grid = voxel_mode_labels(combined, resolution, extent, n_classes=n_classes)
    return transfer_labels(grid, target)


def point_iou(pred, gt, n_classes: int) -> tuple[np.ndarray, float]:
    """Per-class intersection-over-union of two point labelings.

    Classes absent from both labelings report IoU 1; the instance mean
    averages only over classes present in either labeling (and is 1.0
    when none is).  Returns (per-class array of length n_classes, mean).
    """
    pred = np.asarray(pred, dtype=np.int64).reshape(-1)
    gt = np.asarray(gt, dtype=np.int64).reshape(-1)
    if pred.shape != gt.shape:
        raise ValueError("prediction and ground truth lengths differ")
    per_class = np.ones(n_classes, dtype=np.float64)
    present = np.zeros(n_classes, dtype=bool)
    for k in range(1, n_classes + 1):
        p = pred == k
        g = gt == k
        union = int((p | g).sum())
        if union:
            per_class[k - 1] = int((p & g).sum()) / union
            present[k - 1] = True
    mean = float(per_class[present].mean()) if present.any() else 1.0
    return per_class, mean
