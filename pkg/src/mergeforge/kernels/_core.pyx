# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled lane of the hot-path kernels.

Must stay bit-compatible with the NumPy lane in ``_py``: same SplitMix64
stream, same 53-bit uniforms, same adjacent-pair summation tree.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL
cdef double U53 = 1.0 / 9007199254740992.0  # 2^-53


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


def splitmix64_raw(key, n):
    cdef uint64_t k = <uint64_t> (key & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t m = n
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.empty(m, dtype=np.uint64)
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            out[i] = mix64(k + (<uint64_t> (i + 1)) * GOLDEN)
    return out


def splitmix64_uniforms(key, n):
    cdef uint64_t k = <uint64_t> (key & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t m = n
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(m, dtype=np.float64)
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            out[i] = <double> (mix64(k + (<uint64_t> (i + 1)) * GOLDEN) >> 11) * U53
    return out


cdef double _fold(double[::1] work, Py_ssize_t n) noexcept nogil:
    # In-place adjacent-pair fold; writes trail reads, so no aliasing hazard.
    cdef Py_ssize_t half, k
    while n > 1:
        half = n // 2
        for k in range(half):
            work[k] = work[2 * k] + work[2 * k + 1]
        if n & 1:
            work[half] = work[n - 1]
            n = half + 1
        else:
            n = half
    return work[0] if n else 0.0


def pairwise_sum(x):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] work = np.ascontiguousarray(
        x, dtype=np.float64
    ).reshape(-1).copy()
    cdef Py_ssize_t n = work.shape[0]
    if n == 0:
        return 0.0
    cdef double[::1] view = work
    cdef double total
    with nogil:
        total = _fold(view, n)
    return total


def pairwise_dot(x, y):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a = np.ascontiguousarray(
        x, dtype=np.float64
    ).reshape(-1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b = np.ascontiguousarray(
        y, dtype=np.float64
    ).reshape(-1)
    cdef Py_ssize_t n = a.shape[0]
    if b.shape[0] != n:
        raise ValueError("pairwise_dot: length mismatch")
    if n == 0:
        return 0.0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] work = np.empty(n, dtype=np.float64)
    cdef double[::1] wv = work
    cdef double[::1] av = a
    cdef double[::1] bv = b
    cdef Py_ssize_t i
    cdef double total
    with nogil:
        for i in range(n):
            wv[i] = av[i] * bv[i]
        total = _fold(wv, n)
    return total


def sparsify(values, probs, key):
    cdef cnp.ndarray[cnp.float32_t, ndim=1] flat = np.ascontiguousarray(
        values, dtype=np.float32
    ).reshape(-1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p = np.ascontiguousarray(
        probs, dtype=np.float64
    ).reshape(-1)
    cdef Py_ssize_t n = flat.shape[0]
    if p.shape[0] != n:
        raise ValueError("probs length must match values length")
    cdef uint64_t k = <uint64_t> (key & 0xFFFFFFFFFFFFFFFF)
    cdef cnp.ndarray[cnp.float32_t, ndim=1] out = np.zeros(n, dtype=np.float32)
    cdef float[::1] ov = out
    cdef float[::1] fv = flat
    cdef double[::1] pv = p
    cdef Py_ssize_t i
    cdef double u
    with nogil:
        for i in range(n):
            u = <double> (mix64(k + (<uint64_t> (i + 1)) * GOLDEN) >> 11) * U53
            if u < pv[i]:
                ov[i] = <float> ((<double> fv[i]) / pv[i])
    return out.reshape(np.asarray(values).shape)


def fisher_yates(n, seed):
    cdef Py_ssize_t m = n
    cdef cnp.ndarray[cnp.int64_t, ndim=1] perm = np.arange(m, dtype=np.int64)
    cdef int64_t[::1] pv = perm
    cdef uint64_t state = <uint64_t> (seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t draw
    cdef Py_ssize_t i, j
    cdef int64_t tmp
    with nogil:
        for i in range(m - 1, 0, -1):
            state = state + GOLDEN
            draw = mix64(state)
            j = <Py_ssize_t> (draw % (<uint64_t> (i + 1)))
            tmp = pv[i]
            pv[i] = pv[j]
            pv[j] = tmp
    return perm
