"""Deterministic corpus construction: subsampling, mixing, shuffling.

Records are opaque byte strings (one JSON object per line on disk) and
pass through every operation byte-exactly.  All shuffling is seeded
Fisher-Yates over a SplitMix64 stream, so a fixed seed reproduces the
same output file bit for bit.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from mergeforge.errors import InvalidRatio, IoFailure
from mergeforge.kernels import fisher_yates


@dataclass
class RecordDataset:
    records: list[bytes]
    source_id: str = ""

    @property
    def count(self) -> int:
        return len(self.records)


def read_jsonl(path, source_id: str | None = None) -> RecordDataset:
    """Load a JSON-lines file as opaque records (no schema validation)."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not data:
        records = []
    else:
        records = data.split(b"\n")
        if records[-1] == b"":
            records.pop()
    return RecordDataset(records, source_id=source_id or str(path))


def write_jsonl(dataset: RecordDataset, path) -> None:
    """Write records LF-terminated, byte-exact."""
    try:
        with open(path, "wb") as fh:
            for record in dataset.records:
                fh.write(record)
                fh.write(b"\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def subsample(dataset: RecordDataset, ratio: float, seed: int) -> RecordDataset:
    """Keep floor(ratio * n) records chosen by the seeded permutation,
    restoring the original relative order.

    The ratio is honored at the decimal precision it was written with
    (0.25 of 268000 is exactly 67000).
    """
    if not (0.0 < ratio <= 1.0):
        raise InvalidRatio(f"ratio must be in (0, 1], got {ratio}")
    n = dataset.count
    k = math.floor(Fraction(str(ratio)) * n)
    perm = fisher_yates(n, seed)
    chosen = sorted(int(i) for i in perm[:k])
    return RecordDataset(
        [dataset.records[i] for i in chosen], source_id=dataset.source_id
    )


def mix_datasets(parts: Sequence[RecordDataset], seed: int) -> RecordDataset:
    """Concatenate then seeded-shuffle; the record multiset is preserved."""
    if not parts:
        raise ValueError("mix_datasets needs at least one dataset")
    pooled: list[bytes] = []
    for part in parts:
        pooled.extend(part.records)
    perm = fisher_yates(len(pooled), seed)
    mixed = [pooled[int(i)] for i in perm]
    source = "+".join(p.source_id for p in parts if p.source_id)
    return RecordDataset(mixed, source_id=source)
