"""Interchange formats: OFF/OBJ meshes, array files, manifests, labels.

Array files use the ubiquitous ".npy" version 1.0 layout so downstream
tooling can read them directly: the 6-byte magic, version bytes (1, 0), a
little-endian uint16 header length, an ASCII header dict (descr,
fortran_order, shape) space-padded so the whole preamble is a multiple of
64 bytes and ends in a newline, then the raw row-major payload.  Writing
is fully deterministic, so re-serializing a loaded array reproduces the
file byte for byte.

Manifests are line-delimited JSON (UTF-8, LF), one record per descriptor
file, with a stable key order.  Label files are plain text with one
1-based integer label per line.
"""

from __future__ import annotations

import ast
import json
import posixpath
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .geometry import TriangleMesh

__all__ = [
    "ParseError",
    "ArrayFormatError",
    "MeshParseError",
    "ManifestError",
    "ManifestRecord",
    "DESCRIPTOR_KINDS",
    "array_to_bytes",
    "array_from_bytes",
    "write_array",
    "read_array",
    "parse_off",
    "parse_obj",
    "load_mesh",
    "write_manifest",
    "read_manifest",
    "write_labels",
    "read_labels",
]

DESCRIPTOR_KINDS = ("mlh", "slice", "volume")

_NPY_MAGIC = b"\x93NUMPY"
_NPY_ALIGN = 64
_DESCR_OF_DTYPE = {np.dtype(np.float32): "<f4", np.dtype(np.uint8): "|u1"}
_DTYPE_OF_DESCR = {descr: dt for dt, descr in _DESCR_OF_DTYPE.items()}


class ParseError(ValueError):
    """Base for all interchange-format parse failures."""


class ArrayFormatError(ParseError):
    """Array file is malformed or uses an unsupported dtype/version."""


class MeshParseError(ParseError):
    """Mesh file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ManifestError(ParseError):
    """Manifest violates the record schema or uniqueness constraints."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# ---------------------------------------------------------------------------
# array files


def array_to_bytes(array: np.ndarray) -> bytes:
    """Serialize a float32 or uint8 array to ".npy" v1.0 bytes."""
    arr = np.ascontiguousarray(array)
    descr = _DESCR_OF_DTYPE.get(arr.dtype)
    if descr is None:
        raise ArrayFormatError(
            f"unsupported dtype {arr.dtype}; only float32 and uint8 are stored"
        )
    header = "{'descr': %r, 'fortran_order': False, 'shape': %r, }" % (
        descr,
        tuple(int(s) for s in arr.shape),
    )
    raw = header.encode("latin1")
    prefix = len(_NPY_MAGIC) + 2 + 2  # magic + version + header-length field
    pad = (-(prefix + len(raw) + 1)) % _NPY_ALIGN
    raw += b" " * pad + b"\n"
    if len(raw) > 0xFFFF:
        raise ArrayFormatError("header too large for format version 1.0")
    return (
        _NPY_MAGIC
        + bytes((1, 0))
        + struct.pack("<H", len(raw))
        + raw
        + arr.tobytes(order="C")
    )


def array_from_bytes(data: bytes) -> np.ndarray:
    """Parse ".npy" v1.0 bytes; exact inverse of :func:`array_to_bytes`."""
    if len(data) < 10 or data[:6] != _NPY_MAGIC:
        raise ArrayFormatError("not an array file (bad magic)")
    major, minor = data[6], data[7]
    if (major, minor) != (1, 0):
        raise ArrayFormatError(f"unsupported format version {major}.{minor}")
    (header_len,) = struct.unpack("<H", data[8:10])
    offset = 10 + header_len
    if len(data) < offset:
        raise ArrayFormatError("truncated header")
    try:
        header = ast.literal_eval(data[10:offset].decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise ArrayFormatError(f"malformed header: {exc}") from exc
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise ArrayFormatError("header must define descr, fortran_order and shape")
    dtype = _DTYPE_OF_DESCR.get(header["descr"])
    if dtype is None:
        raise ArrayFormatError(f"unsupported dtype descriptor {header['descr']!r}")
    if header["fortran_order"] is not False:
        raise ArrayFormatError("fortran-ordered payloads are not supported")
    shape = header["shape"]
    if not isinstance(shape, tuple) or not all(
        isinstance(s, int) and s >= 0 for s in shape
    ):
        raise ArrayFormatError("shape must be a tuple of non-negative ints")
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    expected = count * dtype.itemsize
    payload = data[offset:]
    if len(payload) != expected:
        raise ArrayFormatError(
            f"payload is {len(payload)} bytes, expected {expected}"
        )
    return np.frombuffer(payload, dtype=dtype).reshape(shape).copy()


def write_array(path, array: np.ndarray) -> None:
    Path(path).write_bytes(array_to_bytes(array))


def read_array(path) -> np.ndarray:
    return array_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# mesh parsing


def _decode(data) -> str:
    if isinstance(data, bytes):
        return data.decode("utf-8", errors="replace")
    return data


def _content_lines(text: str):
    """Yield (1-based line number, tokens) skipping blanks and comments."""
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            yield lineno, body.split()


def _parse_floats(tokens, count, lineno, what):
    if len(tokens) < count:
        raise MeshParseError(f"expected {count} numbers for {what}", lineno)
    try:
        return [float(t) for t in tokens[:count]]
    except ValueError as exc:
        raise MeshParseError(f"bad number in {what}: {exc}", lineno) from exc


def _fan_triangulate(indices, lineno):
    if len(indices) < 3:
        raise MeshParseError("face needs at least 3 vertices", lineno)
    return [(indices[0], indices[t], indices[t + 1]) for t in range(1, len(indices) - 1)]


def parse_off(data) -> TriangleMesh:
    """Parse an OFF mesh; polygons are fan-triangulated.

    Accepts the malformed header variant (common in ModelNet40 files)
    where the element counts are fused onto the magic line, e.g.
    ``OFF3 1 0``.
    """
    lines = _content_lines(_decode(data))
    try:
        lineno, tokens = next(lines)
    except StopIteration:
        raise MeshParseError("empty file", 1) from None
    if not tokens[0].startswith("OFF"):
        raise MeshParseError("missing OFF magic", lineno)
    trailing = tokens[0][3:]
    count_tokens = ([trailing] if trailing else []) + tokens[1:]
    if not count_tokens:
        try:
            lineno, count_tokens = next(lines)
        except StopIteration:
            raise MeshParseError("missing element counts", lineno) from None
    if len(count_tokens) != 3:
        raise MeshParseError("expected vertex, face and edge counts", lineno)
    try:
        n_vertices, n_faces, _ = (int(t) for t in count_tokens)
    except ValueError as exc:
        raise MeshParseError(f"bad element count: {exc}", lineno) from exc

    vertices = []
    for _ in range(n_vertices):
        try:
            lineno, tokens = next(lines)
        except StopIteration:
            raise MeshParseError(
                f"file ends after {len(vertices)} of {n_vertices} vertices", lineno
            ) from None
        vertices.append(_parse_floats(tokens, 3, lineno, "vertex"))

    faces = []
    for face_no in range(n_faces):
        try:
            lineno, tokens = next(lines)
        except StopIteration:
            raise MeshParseError(
                f"file ends after {face_no} of {n_faces} faces", lineno
            ) from None
        try:
            arity = int(tokens[0])
        except ValueError as exc:
            raise MeshParseError(f"bad face arity: {exc}", lineno) from exc
        if len(tokens) < 1 + arity:
            raise MeshParseError(f"face declares {arity} vertices", lineno)
        try:
            idx = [int(t) for t in tokens[1 : 1 + arity]]
        except ValueError as exc:
            raise MeshParseError(f"bad face index: {exc}", lineno) from exc
        for i in idx:
            if not 0 <= i < n_vertices:
                raise MeshParseError(f"vertex index {i} out of range", lineno)
        faces.extend(_fan_triangulate(idx, lineno))

    verts = np.array(vertices, dtype=np.float64).reshape(len(vertices), 3)
    return TriangleMesh(verts, np.array(faces, dtype=np.int64).reshape(len(faces), 3))


def parse_obj(data) -> TriangleMesh:
    """Parse a Wavefront OBJ mesh (v/f statements only).

    Handles 1-based and negative indices and the ``v/vt/vn`` slash forms;
    texture, normal and material statements are ignored.  Polygons are
    fan-triangulated.
    """
    vertices: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    for lineno, tokens in _content_lines(_decode(data)):
        if tokens[0] == "v":
            vertices.append(_parse_floats(tokens[1:], 3, lineno, "vertex"))
        elif tokens[0] == "f":
            idx = []
            for ref in tokens[1:]:
                head = ref.split("/", 1)[0]
                try:
                    raw = int(head)
                except ValueError as exc:
                    raise MeshParseError(f"bad face index {ref!r}", lineno) from exc
                if raw == 0:
                    raise MeshParseError("face index 0 is not allowed", lineno)
                i = raw - 1 if raw > 0 else len(vertices) + raw
                if not 0 <= i < len(vertices):
                    raise MeshParseError(f"vertex index {raw} out of range", lineno)
                idx.append(i)
            faces.extend(_fan_triangulate(idx, lineno))
    verts = np.array(vertices, dtype=np.float64).reshape(len(vertices), 3)
    return TriangleMesh(verts, np.array(faces, dtype=np.int64).reshape(len(faces), 3))


def load_mesh(path) -> TriangleMesh:
    """Parse a mesh file, dispatching on its extension (.off / .obj)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".off":
        return parse_off(path.read_bytes())
    if suffix == ".obj":
        return parse_obj(path.read_bytes())
    raise MeshParseError(f"unsupported mesh format {suffix!r}")


# ---------------------------------------------------------------------------
# manifests


@dataclass(frozen=True)
class ManifestRecord:
    """One descriptor file of one shape under one orientation view."""

    id: str
    class_name: str
    class_id: int
    orientation: int
    kind: str
    layers: int
    array_path: str
    label_path: str | None = None
    seed: int = 0
    rng: str = "pcg64"
    tool_version: str = field(default=__version__)

    def __post_init__(self):
        if self.kind not in DESCRIPTOR_KINDS:
            raise ManifestError(f"unknown descriptor kind {self.kind!r}")
        if self.layers < 1:
            raise ManifestError("layers must be >= 1")
        if self.orientation < 0:
            raise ManifestError("orientation index must be >= 0")
        if self.class_id < 1:
            raise ManifestError("class_id must be >= 1")
        for p in (self.array_path, self.label_path):
            if p is not None and posixpath.isabs(p):
                raise ManifestError(f"paths must be manifest-relative, got {p!r}")

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.id, self.orientation, self.kind)


_RECORD_FIELDS = (
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
)


def _check_unique(records) -> None:
    seen = set()
    for rec in records:
        if rec.key in seen:
            raise ManifestError(f"duplicate record for {rec.key}")
        seen.add(rec.key)


def write_manifest(records, path) -> None:
    """Write records as line-delimited JSON with a stable field order."""
    records = list(records)
    _check_unique(records)
    lines = []
    for rec in records:
        data = asdict(rec)
        lines.append(json.dumps({k: data[k] for k in _RECORD_FIELDS}, ensure_ascii=False))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def read_manifest(path) -> list[ManifestRecord]:
    """Parse a manifest, validating schema and key uniqueness."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"malformed JSON: {exc.msg}", lineno) from exc
            if not isinstance(obj, dict) or set(obj) != set(_RECORD_FIELDS):
                raise ManifestError("record fields do not match the schema", lineno)
            try:
                records.append(ManifestRecord(**obj))
            except (TypeError, ManifestError) as exc:
                raise ManifestError(f"invalid record: {exc}", lineno) from exc
    _check_unique(records)
    return records


# ---------------------------------------------------------------------------
# label files


def write_labels(path, labels) -> None:
    """One 1-based integer label per line."""
    arr = np.asarray(labels, dtype=np.int64).reshape(-1)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for value in arr:
            fh.write(f"{int(value)}\n")


def read_labels(path) -> np.ndarray:
    values = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.strip()
            if not body:
                continue
            try:
                values.append(int(body))
            except ValueError as exc:
                raise ParseError(f"line {lineno}: not an integer label: {body!r}") from exc
    return np.array(values, dtype=np.int64)
