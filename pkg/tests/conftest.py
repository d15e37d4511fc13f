"""Shared test fixtures and toy-checkpoint builders."""

import numpy as np
import pytest

from mergeforge.taskvector import TaskVector
from mergeforge.tensormap import TensorMap


def random_map(rng, names=None, max_elems=16, layered=False):
    """Small random float32 TensorMap on a dyadic grid (exact arithmetic)."""
    if names is None:
        if layered:
            names = [
                "model.layers.0.attn.weight",
                "model.layers.0.mlp.weight",
                "model.layers.1.attn.weight",
                "model.layers.1.mlp.weight",
                "model.embed_tokens.weight",
                "lm_head.weight",
            ]
        else:
            names = ["alpha", "beta", "gamma"]
    tensors = {}
    for name in names:
        n = int(rng.integers(1, max_elems + 1))
        tensors[name] = grid_values(rng, (n,))
    return TensorMap(tensors)


def grid_values(rng, shape):
    """float32 values that are multiples of 2^-11 in [-2, 2): differences
    and re-additions are exact in float32."""
    ints = rng.integers(-4096, 4096, size=shape)
    return (ints.astype(np.float32)) * np.float32(2.0 ** -11)


def map_like(reference: TensorMap, rng) -> TensorMap:
    return TensorMap({n: grid_values(rng, a.shape) for n, a in reference.items()})


def delta_between(base: TensorMap, sft: TensorMap) -> TaskVector:
    return TaskVector({n: sft[n] - base[n] for n in base.names})


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
