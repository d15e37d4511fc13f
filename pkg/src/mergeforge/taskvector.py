"""Task vectors and layer-wise statistics.

A task vector is the elementwise difference between a fine-tuned
checkpoint and its base.  Layer grouping buckets tensor names by the
transformer-layer index so per-layer shift statistics can be computed.
"""

import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from mergeforge import container
from mergeforge.errors import (
    EmptyGroup,
    MalformedHeader,
    NameSetMismatch,
    ShapeMismatch,
)
from mergeforge.kernels import pairwise_dot
from mergeforge.tensormap import TensorMap

# Layer index = the integer following a path segment literally named
# "layers"; covers the llama/qwen/deepseek naming families.
DEFAULT_LAYER_PATTERN = r"(?:^|\.)layers\.(\d+)(?:\.|$)"


@dataclass
class TaskVector:
    """Per-tensor weight deltas (sft - base), float32, shaped like the source."""

    deltas: dict[str, np.ndarray]
    base_id: str = "base"
    sft_id: str = "sft"

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(sorted(self.deltas))

    def items(self):
        for name in self.names:
            yield name, self.deltas[name]

    def scaled(self, factor: float) -> "TaskVector":
        out = {n: (a.astype(np.float64) * factor).astype(np.float32) for n, a in self.items()}
        return TaskVector(out, self.base_id, f"{self.sft_id}*{factor}")


def _check_same_names(left: Iterable[str], right: Iterable[str], what: str) -> None:
    left, right = set(left), set(right)
    if left != right:
        missing = sorted(left - right)
        extra = sorted(right - left)
        parts = []
        if missing:
            parts.append(f"missing {missing}")
        if extra:
            parts.append(f"extra {extra}")
        raise NameSetMismatch(f"{what}: " + ", ".join(parts))


def compute_delta(base: TensorMap, sft: TensorMap, base_id="base", sft_id="sft") -> TaskVector:
    """Elementwise sft - base in exact float32 arithmetic."""
    _check_same_names(base.names, sft.names, "compute_delta")
    deltas = {}
    for name, b in base.items():
        s = sft[name]
        if b.shape != s.shape:
            raise ShapeMismatch(f"compute_delta: {name!r} shapes {b.shape} vs {s.shape}")
        deltas[name] = s - b
    return TaskVector(deltas, base_id=base_id, sft_id=sft_id)


def apply_delta(base: TensorMap, deltas: Sequence[tuple[TaskVector, float]]) -> TensorMap:
    """Task arithmetic: base + sum of scaled deltas.

    Accumulates in float64 and rounds to float32 once at the end.
    """
    out = {}
    for vec, _ in deltas:
        _check_same_names(base.names, vec.names, "apply_delta")
    for name, b in base.items():
        acc = b.astype(np.float64)
        for vec, lam in deltas:
            d = vec.deltas[name]
            if d.shape != b.shape:
                raise ShapeMismatch(f"apply_delta: {name!r} shapes {b.shape} vs {d.shape}")
            acc = acc + lam * d.astype(np.float64)
        out[name] = acc.astype(np.float32)
    return TensorMap(out)


# ---- layer grouping ---------------------------------------------------------


@dataclass
class LayerGrouping:
    """Partition of tensor names into layers.

    Numeric keys sort numerically and come first; the prefix classes
    ("embedding", "head", "other") follow alphabetically.
    """

    groups: dict[str, list[str]]
    rule: str = DEFAULT_LAYER_PATTERN

    @property
    def layer_keys(self) -> list[str]:
        return list(self.groups)

    def all_names(self) -> set[str]:
        return {n for names in self.groups.values() for n in names}


def classify_name(name: str, pattern: str = DEFAULT_LAYER_PATTERN) -> str:
    m = re.search(pattern, name)
    if m:
        return str(int(m.group(1)))
    lowered = name.lower()
    if "embed" in lowered:
        return "embedding"
    if "head" in lowered:
        return "head"
    return "other"


def group_layers(
    source: Union[TensorMap, TaskVector], pattern: str = DEFAULT_LAYER_PATTERN
) -> LayerGrouping:
    """Bucket tensor names by layer index; unmatched names go to prefix classes."""
    buckets: dict[str, list[str]] = {}
    for name in source.names:
        buckets.setdefault(classify_name(name, pattern), []).append(name)
    numeric = sorted((k for k in buckets if k.isdigit()), key=int)
    textual = sorted(k for k in buckets if not k.isdigit())
    ordered = {k: sorted(buckets[k]) for k in [*numeric, *textual]}
    return LayerGrouping(groups=ordered, rule=pattern)


def tensor_norm(arr: np.ndarray) -> float:
    """Euclidean norm of the flattened tensor, float64 pairwise accumulation."""
    flat = arr.reshape(-1)
    return math.sqrt(pairwise_dot(flat, flat))


def layer_l2(
    vector: TaskVector, grouping: LayerGrouping, reduction: str = "mean"
) -> list[tuple[str, float]]:
    """Per-layer L2 shift.

    reduction="mean": mean over the layer's tensors of per-tensor norms
    (the canonical figure); reduction="total": norm of the whole layer
    treated as one vector, emitted for transparency.
    """
    if reduction not in ("mean", "total"):
        raise ValueError(f"unknown reduction {reduction!r}")
    vector_names = set(vector.names)
    covered = grouping.all_names()
    if not vector_names <= covered:
        raise NameSetMismatch(
            f"layer_l2: grouping does not cover {sorted(vector_names - covered)}"
        )
    rows = []
    for key, names in grouping.groups.items():
        present = [n for n in names if n in vector_names]
        if not present:
            raise EmptyGroup(f"layer {key!r} has no tensors")
        if reduction == "mean":
            norms = [tensor_norm(vector.deltas[n]) for n in present]
            value = sum(norms) / len(norms)
        else:
            sumsq = sum(
                pairwise_dot(vector.deltas[n].reshape(-1), vector.deltas[n].reshape(-1))
                for n in present
            )
            value = math.sqrt(sumsq)
        rows.append((key, value))
    return rows


# ---- container round trip for task vectors ---------------------------------

_KIND_KEY = "mergeforge.kind"
_KIND_VALUE = "task_vector"


def save_task_vector(vector: TaskVector, path) -> None:
    """Serialize a task vector in the checkpoint container with a marker key."""
    meta = {
        _KIND_KEY: _KIND_VALUE,
        "mergeforge.base": vector.base_id,
        "mergeforge.sft": vector.sft_id,
    }
    container.write_checkpoint(TensorMap(vector.deltas), path, metadata=meta)


def load_task_vector(path) -> TaskVector:
    tmap = container.read_checkpoint(path)
    meta = tmap.metadata or {}
    if meta.get(_KIND_KEY) != _KIND_VALUE:
        raise MalformedHeader(f"{path}: not a task-vector container (marker missing)")
    return TaskVector(
        {n: a for n, a in tmap.items()},
        base_id=meta.get("mergeforge.base", "base"),
        sft_id=meta.get("mergeforge.sft", "sft"),
    )
