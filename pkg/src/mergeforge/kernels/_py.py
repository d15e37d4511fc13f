"""NumPy lane of the hot-path kernels.

Bit-compatible with the compiled lane in ``_core``: both evaluate the same
SplitMix64 stream, the same 53-bit uniforms, and the same fixed
adjacent-pair summation tree, so results agree to the last bit regardless
of which lane is selected.
"""

import numpy as np

from mergeforge.rng import GOLDEN, MASK64, splitmix64_next

_GOLDEN = np.uint64(GOLDEN)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = 2.0 ** -53


def splitmix64_raw(key: int, n: int) -> np.ndarray:
    """Draws 1..n of the SplitMix64 stream keyed by ``key``, as uint64."""
    idx = np.arange(1, n + 1, dtype=np.uint64)
    z = np.uint64(key & MASK64) + idx * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def splitmix64_uniforms(key: int, n: int) -> np.ndarray:
    """Draws mapped onto the 2^53 grid in [0, 1)."""
    return (splitmix64_raw(key, n) >> np.uint64(11)).astype(np.float64) * _U53


def pairwise_sum(x) -> float:
    """float64 sum over the fixed adjacent-pair tree.

    Level k adds elements (2i, 2i+1) and carries an odd tail unchanged,
    so the result is independent of evaluation order by construction.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.size
    while n > 1:
        half = n // 2
        y = x[0 : 2 * half : 2] + x[1 : 2 * half : 2]
        if n & 1:
            y = np.concatenate([y, x[n - 1 : n]])
        x = y
        n = x.size
    return float(x[0]) if n else 0.0


def pairwise_dot(x, y) -> float:
    prod = np.multiply(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
    )
    return pairwise_sum(prod)


def sparsify(values: np.ndarray, probs: np.ndarray, key: int) -> np.ndarray:
    """Stochastic drop-and-rescale over one tensor.

    Flat element i is kept iff the i-th uniform of the keyed stream is
    below probs[i]; kept values become float32(float64(v) / probs[i]),
    dropped values become 0.
    """
    flat = np.ascontiguousarray(values, dtype=np.float32).reshape(-1)
    p = np.ascontiguousarray(probs, dtype=np.float64).reshape(-1)
    if p.size != flat.size:
        raise ValueError("probs length must match values length")
    u = splitmix64_uniforms(key, flat.size)
    keep = u < p
    out = np.zeros(flat.size, dtype=np.float32)
    out[keep] = (flat[keep].astype(np.float64) / p[keep]).astype(np.float32)
    return out.reshape(np.asarray(values).shape)


def fisher_yates(n: int, seed: int) -> np.ndarray:
    """Seeded Fisher-Yates permutation of range(n), as int64.

    Index runs descending; the swap target at step i is draw mod (i+1).
    """
    perm = np.arange(n, dtype=np.int64)
    state = seed & MASK64
    for i in range(n - 1, 0, -1):
        state, draw = splitmix64_next(state)
        j = draw % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm
