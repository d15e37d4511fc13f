"""Single-file tensor container: read, write, validate.

Layout, bit-exact:

    [8 bytes]  unsigned little-endian header length N
    [N bytes]  UTF-8 JSON: name -> {"dtype", "shape", "data_offsets"},
               plus an optional "__metadata__" object of string pairs
    [payload]  raw little-endian tensor data, offsets relative to here

Writes are canonical: header keys sorted lexicographically, tensors laid
out gaplessly in that order, compact JSON.  The same TensorMap therefore
always produces the same bytes.
"""

import json
import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from mergeforge.errors import (
    IoFailure,
    MalformedHeader,
    ShapeMismatch,
    UnsupportedDtype,
)
from mergeforge.tensormap import TensorMap

METADATA_KEY = "__metadata__"

_DTYPES = {"F32": np.dtype("<f4"), "F16": np.dtype("<f2")}
_ITEMSIZE = {"F32": 4, "F16": 2}


@dataclass
class HeaderSummary:
    tensor_count: int
    total_bytes: int
    dtypes: tuple[str, ...]


def write_checkpoint(
    tensor_map: TensorMap, path, metadata: Optional[dict[str, str]] = None
) -> None:
    """Serialize ``tensor_map`` to ``path``; byte-deterministic."""
    if metadata is None:
        metadata = tensor_map.metadata
    if METADATA_KEY in tensor_map:
        raise MalformedHeader(
            f"tensor name {METADATA_KEY!r} collides with the reserved metadata key"
        )
    header: dict = {}
    offset = 0
    for name, arr in tensor_map.items():
        nbytes = arr.size * 4
        header[name] = {
            "dtype": "F32",
            "shape": list(arr.shape),
            "data_offsets": [offset, offset + nbytes],
        }
        offset += nbytes
    if metadata:
        header[METADATA_KEY] = {str(k): str(v) for k, v in metadata.items()}
    blob = json.dumps(
        header, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")
    try:
        with open(path, "wb") as fh:
            fh.write(len(blob).to_bytes(8, "little"))
            fh.write(blob)
            for _, arr in tensor_map.items():
                fh.write(arr.astype("<f4", copy=False).tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _load_header(path):
    """Parse and bounds-check the header; returns (entries, metadata, payload_base, file_size)."""
    try:
        file_size = os.path.getsize(path)
        with open(path, "rb") as fh:
            raw_len = fh.read(8)
            if len(raw_len) < 8:
                raise MalformedHeader(f"{path}: file shorter than header length field")
            header_len = int.from_bytes(raw_len, "little")
            if 8 + header_len > file_size:
                raise MalformedHeader(
                    f"{path}: header length {header_len} exceeds file size {file_size}"
                )
            blob = fh.read(header_len)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    try:
        header = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedHeader(f"{path}: header is not valid JSON: {exc}") from exc
    if not isinstance(header, dict):
        raise MalformedHeader(f"{path}: header must be a JSON object")

    metadata = header.pop(METADATA_KEY, None)
    if metadata is not None:
        if not isinstance(metadata, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in metadata.items()
        ):
            raise MalformedHeader(f"{path}: {METADATA_KEY} must map strings to strings")

    payload_base = 8 + header_len
    payload_size = file_size - payload_base
    entries = {}
    spans = []
    for name, info in header.items():
        if not name:
            raise MalformedHeader(f"{path}: empty tensor name")
        if not isinstance(info, dict):
            raise MalformedHeader(f"{path}: entry for {name!r} must be an object")
        dtype = info.get("dtype")
        if dtype not in _DTYPES:
            raise UnsupportedDtype(f"{path}: tensor {name!r} has dtype {dtype!r}")
        shape = info.get("shape")
        if not isinstance(shape, list) or not all(
            isinstance(d, int) and d >= 0 for d in shape
        ):
            raise MalformedHeader(f"{path}: tensor {name!r} has invalid shape {shape!r}")
        offsets = info.get("data_offsets")
        if (
            not isinstance(offsets, list)
            or len(offsets) != 2
            or not all(isinstance(o, int) and o >= 0 for o in offsets)
            or offsets[0] > offsets[1]
        ):
            raise MalformedHeader(
                f"{path}: tensor {name!r} has invalid data_offsets {offsets!r}"
            )
        begin, end = offsets
        if end > payload_size:
            raise ShapeMismatch(
                f"{path}: tensor {name!r} ends at {end} but payload has "
                f"{payload_size} bytes"
            )
        expected = math.prod(shape) * _ITEMSIZE[dtype]
        if end - begin != expected:
            raise ShapeMismatch(
                f"{path}: tensor {name!r} spans {end - begin} bytes, "
                f"shape {shape} x {dtype} needs {expected}"
            )
        spans.append((begin, end, name))
        entries[name] = (dtype, tuple(shape), begin, end)

    spans.sort()
    for (b0, e0, n0), (b1, e1, n1) in zip(spans, spans[1:]):
        if b1 < e0:
            raise MalformedHeader(f"{path}: tensors {n0!r} and {n1!r} overlap")
    return entries, metadata, payload_base, file_size


def read_checkpoint(path) -> TensorMap:
    """Materialize every tensor; F16 payloads upcast losslessly to F32."""
    entries, metadata, payload_base, _ = _load_header(path)
    tensors = {}
    try:
        with open(path, "rb") as fh:
            for name in sorted(entries):
                dtype, shape, begin, end = entries[name]
                fh.seek(payload_base + begin)
                buf = fh.read(end - begin)
                if len(buf) != end - begin:
                    raise ShapeMismatch(f"{path}: truncated payload for {name!r}")
                arr = np.frombuffer(buf, dtype=_DTYPES[dtype]).reshape(shape)
                tensors[name] = arr.astype(np.float32)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return TensorMap(tensors, metadata=metadata)


def validate_header(path) -> HeaderSummary:
    """Summarize the container without materializing payloads."""
    entries, _, _, _ = _load_header(path)
    total = sum(end - begin for _, _, begin, end in entries.values())
    dtypes = tuple(sorted({dtype for dtype, _, _, _ in entries.values()}))
    return HeaderSummary(
        tensor_count=len(entries), total_bytes=total, dtypes=dtypes
    )
