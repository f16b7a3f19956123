"""Structured 2D grid descriptors for 3D shape processing.

Converts point clouds and meshes into fixed-size grid descriptors
(layered height maps, occupancy slices, occupancy volumes), provides the
joint class/orientation loss math used to fuse multi-orientation
descriptors, and runs the segmentation label pipeline (back-projection,
voxel-mode fusion, point IoU).  Everything serializes through bit-exact
interchange formats; see the ``gridshape`` command line for batch use.
"""

__version__ = "0.1.0"

from .backend import active_backend, available_backends
from .geometry import (
    GridCoords,
    GridFrame,
    GridSpec,
    PointCloud,
    TriangleMesh,
    axis_orientations,
    center_normalize,
    sample_mesh,
    to_grid_coords,
    z_ring_orientations,
)
from .descriptors import (
    DEFAULT_FILL,
    LabelMap,
    MlhDescriptor,
    SliceDescriptor,
    VolumeDescriptor,
    compute_mlh,
    compute_mlh_labeled,
    compute_slices,
    compute_volume,
)
from .fusion import (
    LabeledVoxelGrid,
    backproject,
    fuse_views,
    point_iou,
    transfer_labels,
    voxel_mode_labels,
)
from .rotnet import (
    ClassProbs,
    OrientationAssignment,
    best_assignment,
    onehot_ce,
    predict_class,
    rotnet_target,
    rotnet_total_loss,
    rotnet_view_loss,
)

__all__ = [
    "__version__",
    "active_backend",
    "available_backends",
    "GridCoords",
    "GridFrame",
    "GridSpec",
    "PointCloud",
    "TriangleMesh",
    "axis_orientations",
    "center_normalize",
    "sample_mesh",
    "to_grid_coords",
    "z_ring_orientations",
    "DEFAULT_FILL",
    "LabelMap",
    "MlhDescriptor",
    "SliceDescriptor",
    "VolumeDescriptor",
    "compute_mlh",
    "compute_mlh_labeled",
    "compute_slices",
    "compute_volume",
    "LabeledVoxelGrid",
    "backproject",
    "fuse_views",
    "point_iou",
    "transfer_labels",
    "voxel_mode_labels",
    "ClassProbs",
    "OrientationAssignment",
    "best_assignment",
    "onehot_ce",
    "predict_class",
    "rotnet_target",
    "rotnet_total_loss",
    "rotnet_view_loss",
]
