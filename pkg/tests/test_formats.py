import io
import json

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from gridshape.formats import (
    ArrayFormatError,
    ManifestError,
    ManifestRecord,
    MeshParseError,
    array_from_bytes,
    array_to_bytes,
    load_mesh,
    parse_obj,
    parse_off,
    read_array,
    read_manifest,
    write_array,
    write_manifest,
)

MINIMAL_OFF = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"
FUSED_OFF = "OFF3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"


class TestOff:
    def test_minimal_file(self):
        mesh = parse_off(MINIMAL_OFF)
        assert mesh.n_vertices == 3 and mesh.n_faces == 1
        assert mesh.faces[0].tolist() == [0, 1, 2]

    def test_fused_header_variant(self):
        normal = parse_off(MINIMAL_OFF)
        fused = parse_off(FUSED_OFF)
        assert np.array_equal(normal.vertices, fused.vertices)
        assert np.array_equal(normal.faces, fused.faces)

    def test_bytes_accepted(self):
        mesh = parse_off(MINIMAL_OFF.encode())
        assert mesh.n_vertices == 3

    def test_out_of_range_index(self):
        bad = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n"
        with pytest.raises(MeshParseError, match="line 6.*out of range"):
            parse_off(bad)

    def test_missing_magic(self):
        with pytest.raises(MeshParseError, match="magic"):
            parse_off("3 1 0\n0 0 0\n")

    def test_vertex_count_mismatch(self):
        with pytest.raises(MeshParseError, match="2 of 3 vertices"):
            parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n")

    def test_polygon_fan_triangulation(self):
        quad = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n"
        mesh = parse_off(quad)
        assert mesh.faces.tolist() == [[0, 1, 2], [0, 2, 3]]

    def test_comments_and_blank_lines_skipped(self):
        commented = "OFF\n# a comment\n\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"
        assert parse_off(commented).n_vertices == 3

    def test_vertex_color_suffix_ignored(self):
        colored = "OFF\n3 1 0\n0 0 0 255 0 0\n1 0 0 255 0 0\n0 1 0 255 0 0\n3 0 1 2\n"
        assert parse_off(colored).n_vertices == 3


class TestObj:
    def test_minimal(self):
        mesh = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
        assert mesh.n_vertices == 3 and mesh.n_faces == 1

    def test_negative_indices(self):
        a = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
        b = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n")
        assert np.array_equal(a.faces, b.faces)

    def test_quad_fan(self):
        mesh = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        assert mesh.faces.tolist() == [[0, 1, 2], [0, 2, 3]]

    def test_slash_references(self):
        mesh = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\nf 1/1/1 2/1/1 3/1/1\n")
        assert mesh.n_faces == 1

    def test_out_of_range(self):
        with pytest.raises(MeshParseError, match="out of range"):
            parse_obj("v 0 0 0\nf 1 2 3\n")

    def test_index_zero_rejected(self):
        with pytest.raises(MeshParseError, match="index 0"):
            parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n")


class TestArrayFormat:
    def test_float32_layout(self):
        data = array_to_bytes(np.zeros((2, 2), dtype=np.float32))
        # 128-byte preamble (multiple of 64, newline-terminated) + payload
        assert len(data) == 128 + 16
        assert data[:6] == b"\x93NUMPY"
        assert data[6:8] == bytes((1, 0))
        assert data[127:128] == b"\n"
        restored = array_from_bytes(data)
        assert restored.dtype == np.float32 and restored.shape == (2, 2)

    def test_matches_reference_writer(self):
        # byte-identical to numpy's own serializer for supported dtypes
        for arr in (
            np.arange(24, dtype=np.float32).reshape(2, 3, 4),
            np.arange(7, dtype=np.uint8),
            (np.arange(12, dtype=np.float32) / 7).reshape(3, 4),
        ):
            buf = io.BytesIO()
            np.save(buf, arr)
            assert array_to_bytes(arr) == buf.getvalue()

    def test_readable_by_reference_reader(self, tmp_path):
        arr = np.arange(30, dtype=np.float32).reshape(5, 6) / 3
        write_array(tmp_path / "a.npy", arr)
        loaded = np.load(tmp_path / "a.npy")
        assert loaded.dtype == arr.dtype
        assert np.array_equal(loaded, arr)

    def test_file_roundtrip_bitwise(self, tmp_path, rng):
        arr = rng.integers(0, 256, (7, 5, 3)).astype(np.uint8)
        path = tmp_path / "x.npy"
        write_array(path, arr)
        first = path.read_bytes()
        write_array(path, read_array(path))
        assert path.read_bytes() == first

    def test_truncated_payload(self):
        data = array_to_bytes(np.zeros(4, dtype=np.float32))
        with pytest.raises(ArrayFormatError, match="payload"):
            array_from_bytes(data[:-3])

    def test_bad_magic(self):
        with pytest.raises(ArrayFormatError, match="magic"):
            array_from_bytes(b"NOTNPY\x01\x00" + b"\x00" * 32)

    def test_bad_version(self):
        data = bytearray(array_to_bytes(np.zeros(1, dtype=np.uint8)))
        data[6] = 2
        with pytest.raises(ArrayFormatError, match="version"):
            array_from_bytes(bytes(data))

    def test_unsupported_dtype(self):
        with pytest.raises(ArrayFormatError, match="dtype"):
            array_to_bytes(np.zeros(3, dtype=np.float64))

    @settings(max_examples=60, deadline=None)
    @given(
        shape=st.lists(st.integers(0, 6), min_size=1, max_size=4),
        use_float=st.booleans(),
        seed=st.integers(0, 2**31),
    )
    def test_roundtrip_property(self, shape, use_float, seed):
        gen = np.random.default_rng(seed)
        if use_float:
            arr = gen.standard_normal(shape).astype(np.float32)
        else:
            arr = gen.integers(0, 256, shape).astype(np.uint8)
        data = array_to_bytes(arr)
        back = array_from_bytes(data)
        assert back.dtype == arr.dtype and back.shape == arr.shape
        assert back.tobytes() == arr.tobytes()
        assert array_to_bytes(back) == data


def record(i=0, **overrides):
    fields = dict(
        id=f"chair/chair_{i:04d}",
        class_name="chair",
        class_id=1,
        orientation=i % 12,
        kind="mlh",
        layers=5,
        array_path=f"arrays/chair_{i:04d}.npy",
        seed=1234,
    )
    fields.update(overrides)
    return ManifestRecord(**fields)


class TestManifest:
    def test_roundtrip(self, tmp_path):
        records = [record(0), record(1, kind="slice", label_path="labels/a.npy")]
        path = tmp_path / "manifest.jsonl"
        write_manifest(records, path)
        assert read_manifest(path) == records

    def test_stable_field_order(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        write_manifest([record(0)], path)
        keys = list(json.loads(path.read_text().splitlines()[0]))
        assert keys == [
            "id", "class_name", "class_id", "orientation", "kind", "layers",
            "array_path", "label_path", "seed", "rng", "tool_version",
        ]

    def test_duplicate_key_rejected(self, tmp_path):
        with pytest.raises(ManifestError, match="duplicate"):
            write_manifest([record(0), record(0)], tmp_path / "m.jsonl")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("")
        assert read_manifest(path) == []

    def test_malformed_line_numbered(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_manifest([record(0)], path)
        path.write_text(path.read_text() + "{not json\n")
        with pytest.raises(ManifestError, match="line 2"):
            read_manifest(path)

    def test_absolute_path_rejected(self):
        with pytest.raises(ManifestError, match="relative"):
            record(0, array_path="/abs/path.npy")

    def test_unknown_kind_rejected(self):
        with pytest.raises(ManifestError, match="kind"):
            record(0, kind="points")

    @settings(
        max_examples=40,
        deadline=None,
        suppress_health_check=[HealthCheck.function_scoped_fixture],
    )
    @given(
        ids=st.lists(
            st.text(st.characters(min_codepoint=48, max_codepoint=122), min_size=1, max_size=12),
            min_size=0,
            max_size=8,
            unique=True,
        ),
        kind=st.sampled_from(["mlh", "slice", "volume"]),
    )
    def test_roundtrip_property(self, tmp_path, ids, kind):
        records = [
            record(0, id=i, kind=kind, orientation=k, array_path=f"a/{k}.npy")
            for k, i in enumerate(ids)
        ]
        path = tmp_path / "m.jsonl"
        write_manifest(records, path)
        assert read_manifest(path) == records


class TestLoadMesh:
    def test_dispatch(self, tmp_path):
        off = tmp_path / "t.off"
        off.write_text(MINIMAL_OFF)
        obj = tmp_path / "t.obj"
        obj.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
        assert load_mesh(off).n_faces == 1
        assert load_mesh(obj).n_faces == 1

    def test_unknown_extension(self, tmp_path):
        ply = tmp_path / "t.ply"
        ply.write_text("ply\n")
        with pytest.raises(MeshParseError, match="unsupported"):
            load_mesh(ply)
