"""Harness command line: make-shapes, verify, train."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dataset import DatasetError, load_dataset, npy_payload
from .shapes import make_shapes
from .train import toy_train


def cmd_make_shapes(args) -> int:
    total = make_shapes(args.out, args.per_class, args.seed)
    print(f"wrote {total} shapes under {args.out}")
    return 0


def cmd_verify(args) -> int:
    view = load_dataset(args.manifest)
    base = Path(args.manifest).parent
    mismatched = []
    for rec in view.records:
        payload, arr = npy_payload(base / rec["array_path"])
        if arr.tobytes() != payload:
            mismatched.append(rec["array_path"])
    report = {
        "records": len(view.records),
        "shapes": len(view.shape_ids),
        "classes": view.n_classes,
        "bitwise_mismatches": mismatched,
    }
    print(json.dumps(report, indent=2))
    return 0 if not mismatched else 1


def cmd_train(args) -> int:
    train_view = load_dataset(args.train_manifest)
    test_view = load_dataset(args.test_manifest)
    result = toy_train(
        train_view,
        test_view,
        epochs=args.epochs,
        seed=args.seed,
        shuffle_labels=args.shuffle_labels,
    )
    if args.report:
        result.write_report(args.report)
    print(
        f"test accuracy {result.accuracy:.3f} over {result.n_test} shapes "
        f"({result.n_classes} classes, {args.epochs} epochs)"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlh-harness", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-shapes", help="generate synthetic OFF shape classes")
    p.add_argument("--out", required=True)
    p.add_argument("--per-class", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_make_shapes)

    p = sub.add_parser("verify", help="validate a manifest and its array files bit for bit")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("train", help="train the toy classifier on converted descriptors")
    p.add_argument("--train-manifest", required=True)
    p.add_argument("--test-manifest", required=True)
    p.add_argument("--report", default=None, help="optional JSON metrics output")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shuffle-labels", action="store_true",
                   help="chance-level control: permute training labels")
    p.set_defaults(func=cmd_train)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
