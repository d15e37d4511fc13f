"""In-memory checkpoint representation.

A TensorMap is an immutable ordered collection of named float32 tensors;
iteration order is always lexicographic by name, which is the canonical
order for every downstream operation (hashing, serialization, layer
concatenation).
"""

import math
from typing import Iterator, Mapping, Optional

import numpy as np


class TensorMap:
    """Named dense float32 tensors with canonical (lexicographic) order.

    All in-memory data is float32; F16 exists only on disk and is upcast
    on read.  Instances are immutable after construction and safe to share
    across threads.
    """

    def __init__(
        self,
        tensors: Mapping[str, np.ndarray],
        metadata: Optional[Mapping[str, str]] = None,
    ):
        entries: dict[str, np.ndarray] = {}
        for name in sorted(tensors):
            if not isinstance(name, str) or not name:
                raise ValueError("tensor names must be non-empty strings")
            arr = np.ascontiguousarray(tensors[name], dtype=np.float32)
            if math.prod(arr.shape) != arr.size:  # paranoia; numpy guarantees it
                raise ValueError(f"inconsistent shape for {name!r}")
            arr.flags.writeable = False
            entries[name] = arr
        self._entries = entries
        self.metadata = dict(metadata) if metadata else None

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __getitem__(self, name: str) -> np.ndarray:
        return self._entries[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def items(self):
        return self._entries.items()

    def __eq__(self, other) -> bool:
        """Bit-for-bit payload equality; metadata is not compared."""
        if not isinstance(other, TensorMap):
            return NotImplemented
        if self.names != other.names:
            return False
        for name, arr in self.items():
            theirs = other[name]
            if arr.shape != theirs.shape or arr.tobytes() != theirs.tobytes():
                return False
        return True

    def __repr__(self) -> str:
        return f"TensorMap({len(self)} tensors)"

    def total_params(self) -> int:
        return sum(arr.size for arr in self._entries.values())
