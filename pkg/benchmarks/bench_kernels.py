"""Benchmark the compiled kernel lane against the NumPy fallback.

Run:  python benchmarks/bench_kernels.py [--size N] [--repeat R]

Both lanes produce bit-identical results (asserted here before timing);
the table shows how much of that comes for free.
"""

import argparse
import time

import numpy as np

from mergeforge.kernels import _py

try:
    from mergeforge.kernels import _core
except ImportError:
    _core = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=4_000_000,
                        help="elements per tensor (default 4M)")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if _core is None:
        print("compiled lane not built; run `pip install -e .` first")
        return 1

    n = args.size
    rng = np.random.default_rng(0)
    values = rng.normal(size=n).astype(np.float32)
    probs = rng.uniform(0.2, 0.9, size=n)
    x64 = rng.normal(size=n)
    y64 = rng.normal(size=n)
    perm_n = min(n, 1_000_000)

    cases = [
        ("splitmix64_uniforms",
         lambda m: m.splitmix64_uniforms(42, n)),
        ("sparsify (drop+rescale)",
         lambda m: m.sparsify(values, probs, 42)),
        ("pairwise_sum",
         lambda m: m.pairwise_sum(x64)),
        ("pairwise_dot",
         lambda m: m.pairwise_dot(x64, y64)),
        (f"fisher_yates (n={perm_n})",
         lambda m: m.fisher_yates(perm_n, 7)),
    ]

    # sanity: identical outputs before timing anything
    assert np.array_equal(_py.splitmix64_uniforms(42, 1000),
                          _core.splitmix64_uniforms(42, 1000))
    assert _py.sparsify(values[:1000], probs[:1000], 42).tobytes() == \
        _core.sparsify(values[:1000], probs[:1000], 42).tobytes()
    assert _py.pairwise_sum(x64[:1001]) == _core.pairwise_sum(x64[:1001])
    assert np.array_equal(_py.fisher_yates(1000, 7), _core.fisher_yates(1000, 7))

    print(f"size = {n:,} elements, best of {args.repeat}\n")
    width = max(len(name) for name, _ in cases)
    print(f"{'kernel':<{width}}  {'numpy lane':>12}  {'compiled':>12}  {'speedup':>8}")
    for name, call in cases:
        t_py = best_of(lambda: call(_py), args.repeat)
        t_core = best_of(lambda: call(_core), args.repeat)
        print(
            f"{name:<{width}}  {t_py * 1e3:>10.2f}ms  {t_core * 1e3:>10.2f}ms  "
            f"{t_py / t_core:>7.1f}x"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
