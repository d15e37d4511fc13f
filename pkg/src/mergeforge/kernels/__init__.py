"""Kernel dispatch: compiled lane when available, NumPy lane otherwise.

The selection happens once at import.  Set MERGEFORGE_PURE=1 to force the
NumPy lane (useful for benchmarking and for debugging the compiled code).
Both lanes are bit-identical; ``benchmarks/bench_kernels.py`` compares
their speed.
"""

import os

from mergeforge.kernels import _py

_impl = _py
BACKEND = "python"

if os.environ.get("MERGEFORGE_PURE", "0") in ("", "0"):
    try:
        from mergeforge.kernels import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        pass

splitmix64_raw = _impl.splitmix64_raw
splitmix64_uniforms = _impl.splitmix64_uniforms
pairwise_sum = _impl.pairwise_sum
pairwise_dot = _impl.pairwise_dot
sparsify = _impl.sparsify
fisher_yates = _impl.fisher_yates

__all__ = [
    "BACKEND",
    "splitmix64_raw",
    "splitmix64_uniforms",
    "pairwise_sum",
    "pairwise_dot",
    "sparsify",
    "fisher_yates",
]
