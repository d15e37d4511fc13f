"""Scalar randomness primitives shared by both kernel lanes.

All stochastic operations in mergeforge draw from SplitMix64 streams.  A
stream is keyed once and then produces draws 1, 2, 3, ...; the i-th draw is
``mix64(key + (i+1) * GOLDEN)``, which the vectorized kernels evaluate in
closed form.  Per-tensor streams are keyed by
``seed XOR fnv1a64(tensor_name) XOR task_ordinal`` so that masks are
independent of tensor visit order and decorrelated across tasks.
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 stream: returns (new_state, draw)."""
    state = (state + GOLDEN) & MASK64
    return state, mix64(state)


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a over the UTF-8 bytes of ``text``."""
    h = FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * FNV_PRIME) & MASK64
    return h


def stream_key(seed: int, tensor_name: str, task_ordinal: int = 0) -> int:
    return (seed ^ fnv1a64(tensor_name) ^ task_ordinal) & MASK64
