"""Batch command line: convert, segment-fuse, iou, rotnet.

Exit codes: 0 success, 1 usage error, 2 parse error (unreadable mesh,
array or manifest data), 3 validation or partial failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .descriptors import (
    DEFAULT_FILL,
    LabelMap,
    MlhDescriptor,
    compute_mlh,
    compute_slices,
    compute_volume,
)
from .formats import (
    ArrayFormatError,
    ManifestRecord,
    MeshParseError,
    ParseError,
    load_mesh,
    read_array,
    read_labels,
    write_array,
    write_labels,
    write_manifest,
)
from .fusion import backproject, fuse_views, point_iou
from .geometry import (
    GridFrame,
    GridSpec,
    PointCloud,
    axis_orientations,
    center_normalize,
    sample_mesh,
    to_grid_coords,
    z_ring_orientations,
)
from .rotnet import (
    ClassProbs,
    best_assignment,
    predict_class,
    rotnet_total_loss,
    rotnet_view_loss,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_FAILURE = 3

_MESH_SUFFIXES = {".off", ".obj"}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage by default; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _views_arg(value: str) -> str:
    if value == "axes3":
        return value
    if value.startswith("zring:"):
        try:
            m = int(value.split(":", 1)[1])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad view set {value!r}")
        if m < 1:
            raise argparse.ArgumentTypeError("zring view count must be >= 1")
        return value
    raise argparse.ArgumentTypeError(f"views must be zring:M or axes3, got {value!r}")


def make_frames(views: str) -> list[GridFrame]:
    if views == "axes3":
        return axis_orientations()
    return z_ring_orientations(int(views.split(":", 1)[1]))


def derive_seed(seed: int, shape_id: str) -> int:
    """Stable per-shape seed; keeps sampling independent of scheduling."""
    digest = hashlib.sha256(f"{seed}:{shape_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class JobConfig:
    """Validated settings of one conversion job."""

    input_dir: str
    output_dir: str
    kind: str = "mlh"
    res: int = 256
    layers: int = 5
    views: str = "zring:12"
    thickness: float | None = None  # None: depth range / layers
    points: int = 100_000
    seed: int = 0
    fill: float = DEFAULT_FILL
    workers: int = 1

    def validate(self) -> None:
        if self.kind not in ("mlh", "slice", "volume"):
            raise ValueError(f"unknown descriptor kind {self.kind!r}")
        if self.res < 1 or self.layers < 1:
            raise ValueError("resolution and layer count must be >= 1")
        if self.points < 1:
            raise ValueError("point count must be >= 1")
        if self.workers < 1:
            raise ValueError("worker count must be >= 1")
        _views_arg(self.views)

    def grid_spec(self) -> GridSpec:
        spec = GridSpec(self.res, self.res, self.layers)
        thickness = self.thickness
        if self.kind == "slice" and thickness is None:
            thickness = spec.depth_step
        if thickness is not None:
            spec = GridSpec(self.res, self.res, self.layers, thickness=thickness)
        return spec


def _descriptor_array(kind, cloud, frame, spec, fill):
    if kind == "mlh":
        return compute_mlh(cloud, frame, spec, fill=fill).values.astype(np.float32)
    if kind == "slice":
        return compute_slices(cloud, frame, spec).values
    return compute_volume(cloud, frame, spec).values


def _convert_one(cfg: JobConfig, rel: str, class_name: str, class_id: int):
    """Convert one shape: (shape id, records, dropped points, error-or-None)."""
    shape_id = rel.rsplit(".", 1)[0]
    try:
        mesh = load_mesh(Path(cfg.input_dir) / rel)
        shape_seed = derive_seed(cfg.seed, shape_id)
        cloud = center_normalize(sample_mesh(mesh, cfg.points, shape_seed))
        spec = cfg.grid_spec()
        records = []
        dropped = 0
        for k, frame in enumerate(make_frames(cfg.views)):
            dropped += int((~to_grid_coords(cloud, frame, spec).in_bounds).sum())
            array = _descriptor_array(cfg.kind, cloud, frame, spec, cfg.fill)
            array_rel = f"arrays/{shape_id}__o{k:02d}__{cfg.kind}.npy"
            out = Path(cfg.output_dir) / array_rel
            out.parent.mkdir(parents=True, exist_ok=True)
            write_array(out, array)
            records.append(
                ManifestRecord(
                    id=shape_id,
                    class_name=class_name,
                    class_id=class_id,
                    orientation=k,
                    kind=cfg.kind,
                    layers=cfg.layers,
                    array_path=array_rel,
                    seed=shape_seed,
                )
            )
        return shape_id, records, dropped, None
    except (MeshParseError, ValueError, OSError) as exc:
        return shape_id, [], 0, {"file": rel, "error": str(exc)}


def _convert_task(args):
    return _convert_one(*args)


def cmd_convert(args) -> int:
    cfg = JobConfig(
        input_dir=args.input,
        output_dir=args.output,
        kind=args.descriptor,
        res=args.res,
        layers=args.layers,
        views=args.views,
        thickness=args.thickness,
        points=args.points,
        seed=args.seed,
        fill=args.fill,
        workers=args.workers,
    )
    cfg.validate()
    root = Path(cfg.input_dir)
    if not root.is_dir():
        print(f"input directory not found: {root}", file=sys.stderr)
        return EXIT_FAILURE
    rels = sorted(
        p.relative_to(root).as_posix()
        for p in root.rglob("*")
        if p.is_file() and p.suffix.lower() in _MESH_SUFFIXES
    )
    if not rels:
        print(f"no .off/.obj shapes under {root}", file=sys.stderr)
        return EXIT_FAILURE

    def class_of(rel: str) -> str:
        parent = Path(rel).parent.as_posix()
        return "" if parent == "." else parent

    class_ids = {name: i + 1 for i, name in enumerate(sorted({class_of(r) for r in rels}))}
    tasks = [(cfg, rel, class_of(rel), class_ids[class_of(rel)]) for rel in rels]

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_convert_task, tasks))
    else:
        results = [_convert_task(t) for t in tasks]

    records = sorted(
        (rec for _, recs, _, _ in results for rec in recs),
        key=lambda r: (r.id, r.orientation, r.kind),
    )
    errors = sorted((err for _, _, _, err in results if err), key=lambda e: e["file"])
    write_manifest(records, out_dir / "manifest.jsonl")
    with open(out_dir / "errors.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(errors, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    # out-of-bounds points are silently dropped from descriptors; account
    # for them per shape so fixed-extent clipping is never invisible
    dropped = {sid: count for sid, recs, count, _ in results if recs}
    with open(out_dir / "diagnostics.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(
            {"out_of_bounds_points": dict(sorted(dropped.items()))},
            fh, indent=2, ensure_ascii=False,
        )
        fh.write("\n")

    converted = len(rels) - len(errors)
    total_dropped = sum(dropped.values())
    print(
        f"converted {converted}/{len(rels)} shapes, {len(records)} descriptor "
        f"files, {total_dropped} out-of-bounds points dropped"
    )
    for err in errors:
        print(f"failed: {err['file']}: {err['error']}", file=sys.stderr)
    return EXIT_FAILURE if errors else EXIT_OK


def _load_target_cloud(path: str) -> PointCloud:
    p = Path(path)
    if p.suffix.lower() == ".npy":
        return PointCloud(read_array(p).astype(np.float64))
    return PointCloud(np.loadtxt(p, dtype=np.float64, ndmin=2))


def cmd_segment_fuse(args) -> int:
    if len(args.descriptors) != len(args.label_maps):
        print("need one label map per descriptor", file=sys.stderr)
        return EXIT_FAILURE
    frames = make_frames(args.views)
    if len(frames) != len(args.descriptors):
        print(
            f"view set {args.views} has {len(frames)} frames but "
            f"{len(args.descriptors)} descriptor files were given",
            file=sys.stderr,
        )
        return EXIT_FAILURE

    n = args.classes
    invalid = n + 1
    target = _load_target_cloud(args.cloud)
    view_clouds = []
    for frame, dpath, lpath in zip(frames, args.descriptors, args.label_maps):
        values = read_array(dpath).astype(np.float64)
        labels = read_array(lpath).astype(np.int64)
        if values.shape != labels.shape or values.ndim != 3:
            raise ValueError(
                f"descriptor {dpath} and label map {lpath} shapes do not match"
            )
        h, w, c = values.shape
        spec = GridSpec(h, w, c)
        mlh = MlhDescriptor(values, np.any(labels != invalid, axis=2))
        view_clouds.append(backproject(mlh, LabelMap(labels, n), frame, spec))

    if all(len(c) == 0 for c in view_clouds):
        print("warning: all label maps are empty; every point gets the "
              f"invalid label {invalid}", file=sys.stderr)
        labels = np.full(len(target), invalid, dtype=np.int64)
    else:
        labels = fuse_views(view_clouds, args.res, (-1.0, 1.0), target, n_classes=n)
    write_labels(args.output, labels)
    print(f"labeled {len(labels)} points -> {args.output}")
    return EXIT_OK


def cmd_iou(args) -> int:
    pred = read_labels(args.pred)
    gt = read_labels(args.gt)
    if len(pred) != len(gt):
        print(
            f"label counts differ: {len(pred)} predicted vs {len(gt)} ground truth",
            file=sys.stderr,
        )
        return EXIT_FAILURE
    per_class, mean = point_iou(pred, gt, args.classes)
    if args.json:
        print(json.dumps({"per_class": per_class.tolist(), "mean": mean}))
    else:
        for k, value in enumerate(per_class, start=1):
            print(f"class {k}: {value:.4f}")
        print(f"mean: {mean:.4f}")
    return EXIT_OK


def cmd_rotnet(args) -> int:
    tensor = read_array(args.probs).astype(np.float64)
    if tensor.ndim != 3 or tensor.shape[0] != tensor.shape[1] or tensor.shape[2] < 2:
        raise ArrayFormatError(
            f"expected a (m, m, n + 1) probability tensor, got shape {tensor.shape}"
        )
    views = [ClassProbs(tensor[i]) for i in range(tensor.shape[0])]
    predicted, _ = predict_class(views, mode=args.mode)
    class_id = args.class_id if args.class_id is not None else predicted
    assignment = best_assignment(views, class_id, mode=args.mode)
    per_view = [
        rotnet_view_loss(probs, o, class_id)
        for probs, o in zip(views, assignment.views)
    ]
    total = rotnet_total_loss(views, assignment, class_id)
    if args.json:
        print(
            json.dumps(
                {
                    "predicted_class": predicted,
                    "class_id": class_id,
                    "mode": assignment.mode,
                    "shift": assignment.shift,
                    "assignment": list(assignment.views),
                    "per_view_loss": per_view,
                    "total_loss": total,
                }
            )
        )
    else:
        print(f"predicted class: {predicted}")
        print(f"evaluated class: {class_id}")
        if assignment.shift is not None:
            print(f"best shift: {assignment.shift}")
        print(f"assignment: {' '.join(str(o) for o in assignment.views)}")
        for i, loss in enumerate(per_view, start=1):
            print(f"view {i} loss: {loss:.6f}")
        print(f"total loss: {total:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gridshape", description=__doc__)
    parser.add_argument("--version", action="version", version=f"gridshape {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("convert", help="convert a directory of meshes to descriptors")
    p.add_argument("--input", required=True, help="directory of .off/.obj shapes")
    p.add_argument("--output", required=True, help="output directory for arrays + manifest")
    p.add_argument("--descriptor", choices=("mlh", "slice", "volume"), default="mlh")
    p.add_argument("--layers", type=int, default=5, help="layer count c (default 5)")
    p.add_argument("--res", type=int, default=256, help="grid resolution H = W (default 256)")
    p.add_argument("--views", type=_views_arg, default="zring:12", help="zring:M or axes3")
    p.add_argument("--thickness", type=float, default=None,
                   help="slice thickness (default: depth range / layers)")
    p.add_argument("--points", type=int, default=100_000, help="surface samples per shape")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fill", type=float, default=DEFAULT_FILL, help="empty-bin value for MLH")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("segment-fuse", help="fuse per-view label maps onto a point cloud")
    p.add_argument("--descriptors", nargs="+", required=True, help="MLH .npy files, one per view")
    p.add_argument("--label-maps", nargs="+", required=True, help="label-map .npy files, one per view")
    p.add_argument("--cloud", required=True, help="target cloud (.npy float32 or whitespace xyz text)")
    p.add_argument("--classes", type=int, required=True, help="number of part classes n")
    p.add_argument("--output", required=True, help="output label file (one label per line)")
    p.add_argument("--views", type=_views_arg, default="axes3")
    p.add_argument("--res", type=int, default=64, help="fusion voxel grid resolution (default 64)")
    p.set_defaults(func=cmd_segment_fuse)

    p = sub.add_parser("iou", help="point IoU between two label files")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_iou)

    p = sub.add_parser("rotnet", help="orientation assignment and loss of a probability tensor")
    p.add_argument("probs", help="(m, m, n + 1) float32 array file")
    p.add_argument("--class-id", type=int, default=None,
                   help="class to evaluate (default: predicted class)")
    p.add_argument("--mode", choices=("cyclic", "independent"), default="cyclic")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_rotnet)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
