"""Manifest-driven loading of gridshape descriptor datasets.

The loader is deliberately independent of the producing package: the
manifest is parsed as plain line-delimited JSON and arrays are read with
``np.load``.  That makes every successful load a check that the emitted
files really are the de-facto npy format and the manifest schema is what
it claims to be.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_DTYPE_OF_KIND = {"mlh": np.float32, "slice": np.uint8, "volume": np.uint8}

_REQUIRED_KEYS = {
    "id",
    "class_name",
    "class_id",
    "orientation",
    "kind",
    "layers",
    "array_path",
    "label_path",
    "seed",
    "rng",
    "tool_version",
}


class DatasetError(ValueError):
    """Manifest or array files violate the interchange contract."""


@dataclass
class DatasetView:
    """Loaded dataset: records grouped by shape, tensors keyed by view."""

    records: list[dict]
    tensors: dict[tuple[str, int], np.ndarray]
    class_id_of: dict[str, int] = field(repr=False, default_factory=dict)

    @property
    def shape_ids(self) -> list[str]:
        seen = dict.fromkeys(rec["id"] for rec in self.records)
        return list(seen)

    @property
    def n_classes(self) -> int:
        return max(rec["class_id"] for rec in self.records)

    def stacked(self, orientation: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """(N, H, W, c) feature tensor and 0-based class vector for one view."""
        ids = self.shape_ids
        features = np.stack([self.tensors[(i, orientation)] for i in ids])
        labels = np.array([self.class_id_of[i] - 1 for i in ids], dtype=np.int64)
        return features, labels


def _read_manifest(path: Path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
            if set(obj) != _REQUIRED_KEYS:
                raise DatasetError(f"{path}:{lineno}: record keys do not match the schema")
            records.append(obj)
    return records


def load_dataset(manifest_path) -> DatasetView:
    """Load every array referenced by a manifest, validating as we go.

    Shapes must match the record layer counts, dtypes must match the
    descriptor kind, and the spatial resolution must be consistent across
    the dataset; any violation is reported with the offending record.
    """
    manifest_path = Path(manifest_path)
    records = _read_manifest(manifest_path)
    base = manifest_path.parent
    tensors: dict[tuple[str, int], np.ndarray] = {}
    class_id_of: dict[str, int] = {}
    resolution = None
    for rec in records:
        key = (rec["id"], rec["orientation"])
        ref = f"record ({rec['id']!r}, orientation {rec['orientation']}, {rec['kind']})"
        path = base / rec["array_path"]
        if not path.is_file():
            raise DatasetError(f"{ref}: array file missing: {path}")
        arr = np.load(path, allow_pickle=False)
        expected_dtype = _DTYPE_OF_KIND.get(rec["kind"])
        if expected_dtype is None:
            raise DatasetError(f"{ref}: unknown descriptor kind")
        if arr.dtype != expected_dtype:
            raise DatasetError(
                f"{ref}: dtype {arr.dtype} does not match kind {rec['kind']!r}"
            )
        if arr.ndim != 3 or arr.shape[2] != rec["layers"]:
            raise DatasetError(
                f"{ref}: shape {arr.shape} does not match {rec['layers']} layers"
            )
        if resolution is None:
            resolution = arr.shape[:2]
        elif arr.shape[:2] != resolution:
            raise DatasetError(
                f"{ref}: resolution {arr.shape[:2]} differs from {resolution}"
            )
        previous = class_id_of.setdefault(rec["id"], rec["class_id"])
        if previous != rec["class_id"]:
            raise DatasetError(f"{ref}: conflicting class ids for the same shape")
        tensors[key] = arr
    return DatasetView(records, tensors, class_id_of)


def npy_payload(path) -> tuple[bytes, np.ndarray]:
    """Raw payload bytes of an npy file plus its ``np.load`` view.

    Used to check bit-level interop: the loaded values serialized back
    must equal the payload exactly (uint8 element-wise, float32 by bit
    pattern).
    """
    data = Path(path).read_bytes()
    if data[:6] != b"\x93NUMPY":
        raise DatasetError(f"{path}: not an npy file")
    (header_len,) = struct.unpack("<H", data[8:10])
    return data[10 + header_len :], np.load(path, allow_pickle=False)
