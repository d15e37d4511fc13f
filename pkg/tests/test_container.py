"""Container format: round trips, canonical bytes, malformed inputs."""

import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mergeforge.container import (
    HeaderSummary,
    read_checkpoint,
    validate_header,
    write_checkpoint,
)
from mergeforge.errors import (
    IoFailure,
    MalformedHeader,
    ShapeMismatch,
    UnsupportedDtype,
)
from mergeforge.tensormap import TensorMap


def write_raw(path, header: dict, payload: bytes) -> None:
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        fh.write(payload)


def test_round_trip_identity(tmp_path, rng):
    tensors = {
        "b.weight": rng.normal(size=(3, 4)).astype(np.float32),
        "a.weight": rng.normal(size=7).astype(np.float32),
        "scalar": np.float32(2.5).reshape(()),
    }
    tmap = TensorMap(tensors)
    path = tmp_path / "m.ckpt"
    write_checkpoint(tmap, path)
    back = read_checkpoint(path)
    assert back == tmap
    assert back.names == ("a.weight", "b.weight", "scalar")


def test_write_is_byte_deterministic(tmp_path, rng):
    tensors = {"x": rng.normal(size=5).astype(np.float32), "y": np.zeros(2, np.float32)}
    p1, p2 = tmp_path / "one.ckpt", tmp_path / "two.ckpt"
    write_checkpoint(TensorMap(tensors), p1)
    write_checkpoint(TensorMap(dict(reversed(list(tensors.items())))), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_empty_map_writes_empty_header(tmp_path):
    path = tmp_path / "empty.ckpt"
    write_checkpoint(TensorMap({}), path)
    data = path.read_bytes()
    n = struct.unpack("<Q", data[:8])[0]
    assert data[8 : 8 + n] == b"{}"
    assert len(data) == 8 + n
    summary = validate_header(path)
    assert summary == HeaderSummary(tensor_count=0, total_bytes=0, dtypes=())


def test_header_orders_names_lexicographically(tmp_path):
    path = tmp_path / "ordered.ckpt"
    write_checkpoint(
        TensorMap({"b": np.ones(1, np.float32), "a": np.ones(1, np.float32)}), path
    )
    raw = path.read_bytes()
    n = struct.unpack("<Q", raw[:8])[0]
    header = json.loads(raw[8 : 8 + n])
    assert list(header) == ["a", "b"]
    assert header["a"]["data_offsets"] == [0, 4]
    assert header["b"]["data_offsets"] == [4, 8]


def test_f16_upcast_is_exact(tmp_path):
    # hand-encoded IEEE 754 half precision: 0x3C00 = 1.0, 0x3800 = 0.5
    payload = struct.pack("<HH", 0x3C00, 0x3800)
    header = {"h": {"dtype": "F16", "shape": [2], "data_offsets": [0, 4]}}
    path = tmp_path / "half.ckpt"
    write_raw(path, header, payload)
    tmap = read_checkpoint(path)
    assert tmap["h"].dtype == np.float32
    assert tmap["h"].tolist() == [1.0, 0.5]
    assert validate_header(path).dtypes == ("F16",)


def test_header_length_beyond_file_is_malformed(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(struct.pack("<Q", 10_000) + b"{}")
    with pytest.raises(MalformedHeader):
        read_checkpoint(path)


def test_invalid_json_is_malformed(tmp_path):
    path = tmp_path / "bad.ckpt"
    write_raw(path, {}, b"")
    raw = bytearray(path.read_bytes())
    raw[8] = ord("[")
    path.write_bytes(bytes(raw))
    with pytest.raises(MalformedHeader):
        validate_header(path)


def test_unknown_dtype_rejected(tmp_path):
    path = tmp_path / "bad.ckpt"
    write_raw(path, {"t": {"dtype": "I8", "shape": [4], "data_offsets": [0, 4]}}, b"\0" * 4)
    with pytest.raises(UnsupportedDtype):
        read_checkpoint(path)


def test_offsets_disagreeing_with_shape(tmp_path):
    path = tmp_path / "bad.ckpt"
    write_raw(path, {"t": {"dtype": "F32", "shape": [3], "data_offsets": [0, 8]}}, b"\0" * 8)
    with pytest.raises(ShapeMismatch):
        read_checkpoint(path)


def test_truncated_payload_is_shape_mismatch(tmp_path):
    path = tmp_path / "bad.ckpt"
    write_raw(path, {"t": {"dtype": "F32", "shape": [4], "data_offsets": [0, 16]}}, b"\0" * 8)
    with pytest.raises(ShapeMismatch):
        validate_header(path)


def test_overlapping_tensors_malformed(tmp_path):
    path = tmp_path / "bad.ckpt"
    header = {
        "a": {"dtype": "F32", "shape": [2], "data_offsets": [0, 8]},
        "b": {"dtype": "F32", "shape": [2], "data_offsets": [4, 12]},
    }
    write_raw(path, header, b"\0" * 12)
    with pytest.raises(MalformedHeader):
        validate_header(path)


def test_missing_file_is_io_failure(tmp_path):
    with pytest.raises(IoFailure):
        read_checkpoint(tmp_path / "nope.ckpt")


def test_validate_header_summary(tmp_path, rng):
    tensors = {f"t{i}": rng.normal(size=4).astype(np.float32) for i in range(3)}
    path = tmp_path / "three.ckpt"
    write_checkpoint(TensorMap(tensors), path)
    summary = validate_header(path)
    assert summary.tensor_count == 3
    assert summary.total_bytes == 48
    assert summary.dtypes == ("F32",)


def test_metadata_round_trip(tmp_path):
    path = tmp_path / "meta.ckpt"
    tmap = TensorMap({"w": np.ones(2, np.float32)})
    write_checkpoint(tmap, path, metadata={"purpose": "test"})
    back = read_checkpoint(path)
    assert back.metadata == {"purpose": "test"}
    assert back == tmap  # metadata not part of equality


def test_unicode_names_round_trip(tmp_path):
    tmap = TensorMap({"重み.β": np.arange(3, dtype=np.float32)})
    path = tmp_path / "uni.ckpt"
    write_checkpoint(tmap, path)
    assert read_checkpoint(path) == tmap


def test_reserved_metadata_name_rejected(tmp_path):
    tmap = TensorMap({"__metadata__": np.ones(1, np.float32)})
    with pytest.raises(MalformedHeader, match="reserved"):
        write_checkpoint(tmap, tmp_path / "clash.ckpt")


names_strategy = st.lists(
    st.text(
        st.characters(min_codepoint=33, max_codepoint=122), min_size=1, max_size=12
    ).filter(lambda s: s != "__metadata__"),
    min_size=0,
    max_size=6,
    unique=True,
)


@settings(max_examples=60, deadline=None)
@given(names=names_strategy, data=st.data())
def test_round_trip_property(tmp_path_factory, names, data):
    tensors = {}
    for name in names:
        n = data.draw(st.integers(min_value=0, max_value=20))
        vals = data.draw(
            st.lists(
                st.floats(width=32, allow_nan=False, allow_infinity=False),
                min_size=n,
                max_size=n,
            )
        )
        tensors[name] = np.array(vals, dtype=np.float32)
    tmap = TensorMap(tensors)
    path = tmp_path_factory.mktemp("prop") / "map.ckpt"
    write_checkpoint(tmap, path)
    assert read_checkpoint(path) == tmap
