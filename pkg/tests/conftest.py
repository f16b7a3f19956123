import math

import numpy as np
import pytest

from gridshape import GridFrame, PointCloud


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


BOX_OFF = """OFF
8 12 0
-1 -1 -1
1 -1 -1
1 1 -1
-1 1 -1
-1 -1 1
1 -1 1
1 1 1
-1 1 1
3 0 1 2
3 0 2 3
3 4 6 5
3 4 7 6
3 0 4 5
3 0 5 1
3 1 5 6
3 1 6 2
3 2 6 7
3 2 7 3
3 3 7 4
3 3 4 0
"""


def make_mesh_dataset(root, n_per_class=2):
    """Two tiny OFF classes (full boxes and flat slabs) for CLI tests."""
    for cls, scale in (("box", 1.0), ("slab", 0.4)):
        d = root / cls
        d.mkdir(parents=True)
        for i in range(n_per_class):
            stretch = 1.0 + 0.1 * i
            lines = BOX_OFF.splitlines()
            out = [lines[0], lines[1]]
            for line in lines[2:10]:
                x, y, z = (float(t) for t in line.split())
                out.append(f"{x * stretch} {y} {z * scale}")
            out.extend(lines[10:])
            (d / f"{cls}_{i}.off").write_text("\n".join(out) + "\n")


def dir_tree_bytes(root):
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def identity_frame() -> GridFrame:
    """Frame whose axes coincide with the world axes (u=X, v=Y, w=Z)."""
    return GridFrame(
        origin=np.zeros(3),
        u=np.array([1.0, 0.0, 0.0]),
        v=np.array([0.0, 1.0, 0.0]),
        w=np.array([0.0, 0.0, 1.0]),
    )


def random_cloud(rng, n, lo=-1.0, hi=1.0, labels=None) -> PointCloud:
    pts = rng.uniform(lo, hi, (n, 3))
    if labels is not None:
        return PointCloud(pts, labels=rng.integers(1, labels + 1, n))
    return PointCloud(pts)


def brute_force_bins(points, frame, spec):
    """Independent per-bin height grouping: pure-python loop, dict of lists.

    Implements the stated binning contract directly: project on the frame
    axes, drop out-of-bounds points, half-open bins with the last closed.
    """
    u0, u1 = spec.extent_u
    v0, v1 = spec.extent_v
    d0, d1 = spec.depth
    groups: dict[tuple[int, int], list[float]] = {}
    for p in points:
        rel = p - frame.origin
        pu = float(rel @ frame.u)
        pv = float(rel @ frame.v)
        hh = float(rel @ frame.w)
        if not (u0 <= pu <= u1 and v0 <= pv <= v1 and d0 <= hh <= d1):
            continue
        bi = min(math.floor((pu - u0) / ((u1 - u0) / spec.h)), spec.h - 1)
        bj = min(math.floor((pv - v0) / ((v1 - v0) / spec.w)), spec.w - 1)
        groups.setdefault((bi, bj), []).append(hh)
    return groups


def brute_force_percentile(heights, p, nearest_rank=False):
    """Percentile at p in [0, 100] over a list, evaluated the stated way:
    fractional rank (M-1)*p/100, linearly interpolated or rounded half-up."""
    ordered = sorted(heights)
    rank = (len(ordered) - 1) * p / 100.0
    if nearest_rank:
        return ordered[math.floor(rank + 0.5)]
    lo = math.floor(rank)
    hi = min(lo + 1, len(ordered) - 1)
    return ordered[lo] + (rank - lo) * (ordered[hi] - ordered[lo])


def brute_force_mlh(points, frame, spec, fill=-2.0, nearest_rank=False):
    """Reference MLH built from the brute-force bins, layer by layer."""
    values = np.full((spec.h, spec.w, spec.layers), fill, dtype=np.float64)
    mask = np.zeros((spec.h, spec.w), dtype=bool)
    for (bi, bj), heights in brute_force_bins(points, frame, spec).items():
        mask[bi, bj] = True
        for k in range(spec.layers):
            p = 100.0 * k / (spec.layers - 1) if spec.layers > 1 else 0.0
            values[bi, bj, k] = brute_force_percentile(heights, p, nearest_rank)
    return values, mask
