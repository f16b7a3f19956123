"""Synthetic OFF meshes for the three toy categories.

Boxes, ellipsoids and cylinders with randomized proportions; descriptor
normalization removes scale, so the classes differ purely in shape.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

CLASS_NAMES = ("box", "cylinder", "ellipsoid")


def box_mesh(extents):
    ex, ey, ez = extents
    vertices = np.array(
        [
            [-ex, -ey, -ez], [ex, -ey, -ez], [ex, ey, -ez], [-ex, ey, -ez],
            [-ex, -ey, ez], [ex, -ey, ez], [ex, ey, ez], [-ex, ey, ez],
        ]
    )
    faces = np.array(
        [
            [0, 1, 2], [0, 2, 3], [4, 6, 5], [4, 7, 6],
            [0, 4, 5], [0, 5, 1], [1, 5, 6], [1, 6, 2],
            [2, 6, 7], [2, 7, 3], [3, 7, 4], [3, 4, 0],
        ]
    )
    return vertices, faces


def ellipsoid_mesh(radii, stacks=12, segments=18):
    rx, ry, rz = radii
    vertices = [[0.0, 0.0, rz]]
    for i in range(1, stacks):
        phi = np.pi * i / stacks
        for j in range(segments):
            theta = 2 * np.pi * j / segments
            vertices.append(
                [
                    rx * np.sin(phi) * np.cos(theta),
                    ry * np.sin(phi) * np.sin(theta),
                    rz * np.cos(phi),
                ]
            )
    vertices.append([0.0, 0.0, -rz])
    top, bottom = 0, len(vertices) - 1

    def ring(i, j):
        return 1 + (i - 1) * segments + (j % segments)

    faces = []
    for j in range(segments):
        faces.append([top, ring(1, j), ring(1, j + 1)])
        faces.append([bottom, ring(stacks - 1, j + 1), ring(stacks - 1, j)])
    for i in range(1, stacks - 1):
        for j in range(segments):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            faces.append([a, c, d])
            faces.append([a, d, b])
    return np.array(vertices), np.array(faces)


def cylinder_mesh(radius, height, segments=24):
    half = height / 2
    vertices = []
    for z in (-half, half):
        for j in range(segments):
            theta = 2 * np.pi * j / segments
            vertices.append([radius * np.cos(theta), radius * np.sin(theta), z])
    lo_center = len(vertices)
    vertices.append([0.0, 0.0, -half])
    hi_center = len(vertices)
    vertices.append([0.0, 0.0, half])

    faces = []
    for j in range(segments):
        a, b = j, (j + 1) % segments
        c, d = segments + j, segments + (j + 1) % segments
        faces.append([a, c, d])
        faces.append([a, d, b])
        faces.append([lo_center, b, a])
        faces.append([hi_center, c, d])
    return np.array(vertices), np.array(faces)


def random_mesh(class_name, rng):
    if class_name == "box":
        return box_mesh(rng.uniform(0.4, 1.0, 3))
    if class_name == "cylinder":
        return cylinder_mesh(rng.uniform(0.3, 0.6), rng.uniform(0.9, 1.8))
    if class_name == "ellipsoid":
        return ellipsoid_mesh(rng.uniform(0.5, 1.0, 3))
    raise ValueError(f"unknown class {class_name!r}")


def write_off(path, vertices, faces):
    lines = ["OFF", f"{len(vertices)} {len(faces)} 0"]
    lines.extend(" ".join(f"{c:.8f}" for c in v) for v in vertices)
    lines.extend("3 " + " ".join(str(i) for i in f) for f in faces)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def make_shapes(out_dir, per_class: int, seed: int) -> int:
    """Write per_class OFF files for each toy category; returns the total."""
    rng = np.random.default_rng(seed)
    out_dir = Path(out_dir)
    total = 0
    for name in CLASS_NAMES:
        class_dir = out_dir / name
        class_dir.mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            vertices, faces = random_mesh(name, rng)
            write_off(class_dir / f"{name}_{i:03d}.off", vertices, faces)
            total += 1
    return total
