"""Meshes, point clouds, grid frames and point-to-grid coordinates.

A *grid frame* fixes the pose of the 2D sampling grid: ``w`` is the grid
normal (the viewing direction), ``u`` and ``v`` span the grid plane, and
heights are measured along ``w`` from the frame origin.  Frame generators
follow a fixed in-plane convention so descriptor layouts are
reproducible: ``v`` is world Z (up) for every frame whose normal lies in
the XY plane, ``v`` is world Y for the Z-normal frame, and ``u = w x v``.

Grid bins are half-open ``[lo, hi)`` along every axis, except that the
last bin is closed so a coordinate exactly at the upper extent still
falls inside the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "TriangleMesh",
    "PointCloud",
    "GridFrame",
    "GridSpec",
    "GridCoords",
    "sample_mesh",
    "center_normalize",
    "z_ring_orientations",
    "axis_orientations",
    "to_grid_coords",
]

_ORTHO_TOL = 1e-9


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _unit3(value, name: str) -> np.ndarray:
    vec = np.array(value, dtype=np.float64).reshape(-1)
    if vec.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector")
    if abs(np.linalg.norm(vec) - 1.0) > _ORTHO_TOL:
        raise ValueError(f"{name} must have unit length")
    return _freeze(vec)


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Triangle soup in model coordinates.

    ``vertices`` is (V, 3) float, ``faces`` is (F, 3) integer vertex
    indices.  Faces with repeated indices are rejected; zero-area faces
    are legal here and skipped by :func:`sample_mesh`.
    """

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        verts = np.array(self.vertices, dtype=np.float64)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise ValueError("vertices must have shape (V, 3)")
        faces = np.array(self.faces, dtype=np.int64)
        if faces.size == 0:
            faces = faces.reshape(0, 3)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise ValueError("faces must have shape (F, 3)")
        if faces.size:
            if faces.min() < 0 or faces.max() >= len(verts):
                raise ValueError("face index out of range")
            degenerate = (
                (faces[:, 0] == faces[:, 1])
                | (faces[:, 1] == faces[:, 2])
                | (faces[:, 0] == faces[:, 2])
            )
            if degenerate.any():
                raise ValueError("face with repeated vertex indices")
        object.__setattr__(self, "vertices", _freeze(verts))
        object.__setattr__(self, "faces", _freeze(faces))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """N 3D points with optional per-point integer labels (1-based)."""

    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError("points must have shape (N, 3)")
        if not np.isfinite(pts).all():
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", _freeze(pts))
        if self.labels is not None:
            labels = np.array(self.labels, dtype=np.int64).reshape(-1)
            if len(labels) != len(pts):
                raise ValueError("labels length must match point count")
            if labels.size and labels.min() < 1:
                raise ValueError("labels must be >= 1")
            object.__setattr__(self, "labels", _freeze(labels))

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True, eq=False)
class GridFrame:
    """Orthonormal grid pose: origin, in-plane axes u/v, normal w."""

    origin: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        origin = np.array(self.origin, dtype=np.float64).reshape(-1)
        if origin.shape != (3,):
            raise ValueError("origin must be a 3-vector")
        object.__setattr__(self, "origin", _freeze(origin))
        object.__setattr__(self, "u", _unit3(self.u, "u"))
        object.__setattr__(self, "v", _unit3(self.v, "v"))
        object.__setattr__(self, "w", _unit3(self.w, "w"))
        for a, b, name in (
            (self.u, self.v, "u/v"),
            (self.u, self.w, "u/w"),
            (self.v, self.w, "v/w"),
        ):
            if abs(float(a @ b)) > _ORTHO_TOL:
                raise ValueError(f"frame axes {name} not orthogonal")


@dataclass(frozen=True)
class GridSpec:
    """Grid resolution and physical extents.

    ``h`` bins along u, ``w`` bins along v, ``layers`` values per bin.
    ``depth`` is the height range along the frame normal; ``thickness``
    is the slice band width and only required for occupancy slices.
    """

    h: int
    w: int
    layers: int
    extent_u: tuple[float, float] = (-1.0, 1.0)
    extent_v: tuple[float, float] = (-1.0, 1.0)
    depth: tuple[float, float] = (-1.0, 1.0)
    thickness: float | None = None

    def __post_init__(self):
        if min(self.h, self.w, self.layers) < 1:
            raise ValueError("h, w and layers must all be >= 1")
        for lo, hi, name in (
            (*self.extent_u, "extent_u"),
            (*self.extent_v, "extent_v"),
            (*self.depth, "depth"),
        ):
            if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
                raise ValueError(f"{name} must be a non-degenerate range")
        if self.thickness is not None:
            if not 0.0 < self.thickness <= self.depth_size:
                raise ValueError("thickness must be in (0, depth range]")

    @property
    def bin_u(self) -> float:
        return (self.extent_u[1] - self.extent_u[0]) / self.h

    @property
    def bin_v(self) -> float:
        return (self.extent_v[1] - self.extent_v[0]) / self.w

    @property
    def depth_size(self) -> float:
        return self.depth[1] - self.depth[0]

    @property
    def depth_step(self) -> float:
        return self.depth_size / self.layers

    @property
    def n_bins(self) -> int:
        return self.h * self.w


class GridCoords(NamedTuple):
    """Per-point grid coordinates; indices are clipped into the grid and
    only meaningful where ``in_bounds`` is set."""

    bin_i: np.ndarray
    bin_j: np.ndarray
    height: np.ndarray
    in_bounds: np.ndarray


def axis_bins(x: np.ndarray, lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Half-open binning of coordinates with the last bin closed.

    Returns (bin index clipped to [0, n), inside mask for lo <= x <= hi).
    """
    width = (hi - lo) / n
    idx = np.clip(np.floor((x - lo) / width), 0, n - 1).astype(np.int64)
    inside = (x >= lo) & (x <= hi)
    return idx, inside


def sample_mesh(mesh: TriangleMesh, n_points: int, seed: int) -> PointCloud:
    """Sample points uniformly over the mesh surface.

    Triangles are selected with probability proportional to their area
    and points are placed by square-root barycentric reparameterization,
    so the density is uniform over the surface.  Zero-area triangles are
    skipped; a mesh whose total area is zero is an error.  Output is a
    pure function of (mesh, n_points, seed); the generator is PCG64.
    """
    if n_points < 0:
        raise ValueError("n_points must be >= 0")
    if mesh.n_faces == 0:
        raise ValueError("mesh has no faces")
    tri = mesh.vertices[mesh.faces]
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    usable = areas > 0.0
    if not usable.any():
        raise ValueError("mesh surface area is zero")
    a, b, c = a[usable], b[usable], c[usable]
    areas = areas[usable]

    rng = np.random.default_rng(seed)
    choice = rng.choice(len(areas), size=n_points, p=areas / areas.sum())
    r1 = rng.random(n_points)
    r2 = rng.random(n_points)
    s = np.sqrt(r1)
    pts = (
        (1.0 - s)[:, None] * a[choice]
        + (s * (1.0 - r2))[:, None] * b[choice]
        + (s * r2)[:, None] * c[choice]
    )
    return PointCloud(pts)


def center_normalize(cloud: PointCloud) -> PointCloud:
    """Mean-center the cloud and scale so the farthest point has norm 1.

    Labels are carried through unchanged.  A cloud of coincident points
    has no scale and is rejected.
    """
    if len(cloud) == 0:
        raise ValueError("cannot normalize an empty cloud")
    centered = cloud.points - cloud.points.mean(axis=0)
    scale = float(np.linalg.norm(centered, axis=1).max())
    if scale <= 0.0:
        raise ValueError("all points coincide; cloud has no scale")
    return PointCloud(centered / scale, labels=cloud.labels)


def z_ring_orientations(m: int) -> list[GridFrame]:
    """m grid frames rotated about world Z in equal increments.

    Frame k points its normal at angle 2*pi*k/m in the XY plane, starting
    along +X.  Angles are computed per index, never accumulated, so frame
    k is identical no matter how many frames precede it.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    origin = np.zeros(3)
    up = np.array([0.0, 0.0, 1.0])
    frames = []
    for k in range(m):
        angle = 2.0 * math.pi * k / m
        w = np.array([math.cos(angle), math.sin(angle), 0.0])
        frames.append(GridFrame(origin=origin, u=np.cross(w, up), v=up, w=w))
    return frames


def axis_orientations() -> list[GridFrame]:
    """The three axis-aligned frames (normals along world X, Y, Z)."""
    origin = np.zeros(3)
    x = np.array([1.0, 0.0, 0.0])
    y = np.array([0.0, 1.0, 0.0])
    z = np.array([0.0, 0.0, 1.0])
    return [
        GridFrame(origin=origin, u=np.cross(x, z), v=z, w=x),
        GridFrame(origin=origin, u=np.cross(y, z), v=z, w=y),
        GridFrame(origin=origin, u=np.cross(z, y), v=y, w=z),
    ]


def to_grid_coords(cloud: PointCloud, frame: GridFrame, spec: GridSpec) -> GridCoords:
    """Project points into a grid frame and bin the in-plane coordinates.

    ``height`` is the signed distance from the grid plane along ``w``.
    A point is in bounds when both in-plane coordinates lie within the
    extents and the height lies within the depth range (all ranges treat
    the upper edge as belonging to the last bin).
    """
    rel = cloud.points - frame.origin
    pu = rel @ frame.u
    pv = rel @ frame.v
    height = rel @ frame.w
    bin_i, in_u = axis_bins(pu, *spec.extent_u, spec.h)
    bin_j, in_v = axis_bins(pv, *spec.extent_v, spec.w)
    in_d = (height >= spec.depth[0]) & (height <= spec.depth[1])
    return GridCoords(bin_i, bin_j, height, in_u & in_v & in_d)
