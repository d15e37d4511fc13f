"""The four checkpoint-merging strategies.

All elementwise arithmetic accumulates in float64 and rounds to float32
once per output tensor.  Stochastic masks draw from per-tensor SplitMix64
streams keyed by (seed, tensor name, task ordinal), so results are
independent of tensor visit order and thread count.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from mergeforge.errors import (
    InvalidDensity,
    InvalidSpread,
    NameSetMismatch,
    RecipeError,
    ShapeMismatch,
    ZeroWeightSum,
)
from mergeforge.kernels import sparsify
from mergeforge.rng import MASK64, stream_key
from mergeforge.taskvector import TaskVector, _check_same_names, compute_delta
from mergeforge.tensormap import TensorMap

METHODS = ("LINEAR", "TIES", "DARE_LINEAR", "DARE_TIES", "DELLA")


@dataclass
class SparsifiedDelta:
    """A task vector after stochastic or top-k sparsification."""

    values: dict[str, np.ndarray]
    method: str
    density: float
    spread: float = 0.0
    seed: int = 0

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(sorted(self.values))

    def items(self):
        for name in self.names:
            yield name, self.values[name]


def _quota(density: float, n: int) -> int:
    # ceil(d*n) at the decimal precision the density was written with,
    # so 0.3 * 10 is 3 and never 4 through float noise.
    return math.ceil(Fraction(str(density)) * n)


def _check_density(density: float) -> None:
    if not (0.0 < density <= 1.0):
        raise InvalidDensity(f"density must be in (0, 1], got {density}")


def _check_shapes(reference: TaskVector, other, what: str) -> None:
    for name, arr in other.items():
        ref = reference.deltas[name]
        if ref.shape != arr.shape:
            raise ShapeMismatch(f"{what}: {name!r} shapes {ref.shape} vs {arr.shape}")


# ---- linear -----------------------------------------------------------------


def merge_linear(
    models: Sequence[tuple[TensorMap, float]], normalize: bool = False
) -> TensorMap:
    """Weighted parameter averaging across checkpoints."""
    if not models:
        raise ZeroWeightSum("merge_linear: no models given")
    first = models[0][0]
    weights = [lam for _, lam in models]
    if normalize:
        total = float(sum(weights))
        if total <= 0.0:
            raise ZeroWeightSum(f"merge_linear: weight sum {total} is not positive")
        weights = [lam / total for lam in weights]
    for tmap, _ in models[1:]:
        _check_same_names(first.names, tmap.names, "merge_linear")
    out = {}
    for name, ref in first.items():
        acc = np.zeros(ref.shape, dtype=np.float64)
        for (tmap, _), lam in zip(models, weights):
            arr = tmap[name]
            if arr.shape != ref.shape:
                raise ShapeMismatch(
                    f"merge_linear: {name!r} shapes {ref.shape} vs {arr.shape}"
                )
            acc = acc + lam * arr.astype(np.float64)
        out[name] = acc.astype(np.float32)
    return TensorMap(out)


# ---- TIES pieces ------------------------------------------------------------


def trim_topk(delta: TaskVector, density: float) -> SparsifiedDelta:
    """Keep the ceil(d*n) largest-magnitude elements per tensor, unscaled.

    Ties at the cutoff keep the element with the smaller flat index.
    """
    _check_density(density)
    values = {}
    for name, arr in delta.items():
        flat = arr.reshape(-1)
        k = _quota(density, flat.size)
        out = np.zeros_like(flat)
        if k > 0 and flat.size:
            order = np.argsort(-np.abs(flat), kind="stable")
            keep = order[:k]
            out[keep] = flat[keep]
        values[name] = out.reshape(arr.shape)
    return SparsifiedDelta(values, method="trim_topk", density=density)


def elect_sign(
    sparsified: Sequence[tuple[SparsifiedDelta, float]],
) -> dict[str, np.ndarray]:
    """Per-element sign of the weighted delta mass; exact zero elects +1."""
    if not sparsified:
        raise NameSetMismatch("elect_sign: no deltas given")
    first = sparsified[0][0]
    for other, _ in sparsified[1:]:
        _check_same_names(first.names, other.names, "elect_sign")
    signs = {}
    for name, ref in first.items():
        total = np.zeros(ref.shape, dtype=np.float64)
        for sp, lam in sparsified:
            arr = sp.values[name]
            if arr.shape != ref.shape:
                raise ShapeMismatch(
                    f"elect_sign: {name!r} shapes {ref.shape} vs {arr.shape}"
                )
            total = total + lam * arr.astype(np.float64)
        signs[name] = np.where(total < 0.0, -1, 1).astype(np.int8)
    return signs


def _agreeing_mean(
    sparsified: Sequence[tuple[SparsifiedDelta, float]],
    signs: dict[str, np.ndarray],
) -> dict[str, np.ndarray]:
    """Weighted mean over the tasks whose element sign matches the elected one.

    Weights are normalized per element (lam / sum of agreeing lams) so a
    single agreeing task contributes its value exactly; elements nobody
    agrees on merge to zero.
    """
    merged = {}
    names = sparsified[0][0].names
    for name in names:
        s = signs[name]
        den = np.zeros(s.shape, dtype=np.float64)
        for sp, lam in sparsified:
            agree = np.sign(sp.values[name]) == s
            den = den + lam * agree
        acc = np.zeros(s.shape, dtype=np.float64)
        positive = den > 0.0
        for sp, lam in sparsified:
            v = sp.values[name]
            agree = np.sign(v) == s
            w = np.zeros(s.shape, dtype=np.float64)
            np.divide(lam, den, out=w, where=positive)
            acc = acc + w * np.where(agree, v.astype(np.float64), 0.0)
        merged[name] = acc
    return merged


def _compose(base: TensorMap, merged: dict[str, np.ndarray], scale: float) -> TensorMap:
    out = {}
    for name, b in base.items():
        m = merged[name]
        if m.shape != b.shape:
            raise ShapeMismatch(f"merge: {name!r} shapes {b.shape} vs {m.shape}")
        out[name] = (b.astype(np.float64) + scale * m).astype(np.float32)
    return TensorMap(out)


def merge_ties(
    base: TensorMap,
    deltas: Sequence[tuple[TaskVector, float]],
    density: float,
    scale: float = 1.0,
) -> TensorMap:
    """Trim each delta, elect signs, average the agreeing tasks."""
    _check_density(density)
    for vec, _ in deltas:
        _check_same_names(base.names, vec.names, "merge_ties")
        _check_shapes(deltas[0][0], vec, "merge_ties")
    sparsified = [(trim_topk(vec, density), lam) for vec, lam in deltas]
    signs = elect_sign(sparsified)
    merged = _agreeing_mean(sparsified, signs)
    return _compose(base, merged, scale)


# ---- DARE -------------------------------------------------------------------


def dare_sparsify(
    delta: TaskVector, density: float, seed: int, task_ordinal: int = 0
) -> SparsifiedDelta:
    """Drop each element with probability 1-d, rescale survivors by 1/d."""
    _check_density(density)
    values = {}
    for name, arr in delta.items():
        key = stream_key(seed, name, task_ordinal)
        probs = np.full(arr.size, float(density), dtype=np.float64)
        values[name] = sparsify(arr, probs, key)
    return SparsifiedDelta(values, method="dare", density=density, seed=seed)


def merge_dare(
    base: TensorMap,
    deltas: Sequence[tuple[TaskVector, float]],
    density: float,
    seed: int,
    variant: str = "ties",
) -> TensorMap:
    """Sparsify each delta on a decorrelated stream, then combine.

    variant="linear" composes by task arithmetic; variant="ties" by sign
    election and the agreeing weighted mean.
    """
    if variant not in ("linear", "ties"):
        raise RecipeError(f"merge_dare: unknown variant {variant!r}")
    _check_density(density)
    for vec, _ in deltas:
        _check_same_names(base.names, vec.names, "merge_dare")
        _check_shapes(deltas[0][0], vec, "merge_dare")
    sparsified = [
        (dare_sparsify(vec, density, seed, task_ordinal=t), lam)
        for t, (vec, lam) in enumerate(deltas)
    ]
    if variant == "linear":
        merged = {}
        for name in sparsified[0][0].names:
            acc = np.zeros(sparsified[0][0].values[name].shape, dtype=np.float64)
            for sp, lam in sparsified:
                acc = acc + lam * sp.values[name].astype(np.float64)
            merged[name] = acc
    else:
        signs = elect_sign(sparsified)
        merged = _agreeing_mean(sparsified, signs)
    return _compose(base, merged, 1.0)


# ---- DELLA ------------------------------------------------------------------


def magprune_probs(arr: np.ndarray, density: float, spread: float) -> np.ndarray:
    """Keep probability per flat element of one tensor.

    Within each last-axis row, elements are ranked by ascending magnitude
    (ties: smaller index ranks lower) and the keep probability rises
    linearly from d - spread/2 to d + spread/2 with rank, clamped to
    [0, 1]; single-element rows keep with probability d.
    """
    flat = arr.reshape(-1)
    row_len = arr.shape[-1] if arr.ndim else 1
    if row_len <= 1 or spread == 0.0:
        return np.full(flat.size, float(density), dtype=np.float64)
    rows = np.abs(flat.reshape(-1, row_len))
    order = np.argsort(rows, axis=1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(
        ranks, order, np.broadcast_to(np.arange(row_len), rows.shape), axis=1
    )
    probs = density - spread / 2.0 + spread * ranks / (row_len - 1)
    return np.clip(probs, 0.0, 1.0).reshape(-1)


def magprune(
    delta: TaskVector,
    density: float,
    spread: float,
    seed: int,
    task_ordinal: int = 0,
) -> SparsifiedDelta:
    """Magnitude-adaptive stochastic pruning.

    Keep probabilities follow the rank schedule of ``magprune_probs``;
    survivors are rescaled by the reciprocal of their own keep
    probability.
    """
    _check_density(density)
    if spread < 0.0:
        raise InvalidSpread(f"spread must be non-negative, got {spread}")
    if density - spread / 2.0 <= 0.0:
        raise InvalidSpread(
            f"spread {spread} leaves no keep mass at density {density}"
        )
    values = {}
    for name, arr in delta.items():
        if arr.size == 0:
            values[name] = np.zeros_like(arr)
            continue
        key = stream_key(seed, name, task_ordinal)
        probs = magprune_probs(arr, density, spread)
        values[name] = sparsify(arr, probs, key)
    return SparsifiedDelta(
        values, method="magprune", density=density, spread=spread, seed=seed
    )


def merge_della(
    base: TensorMap,
    deltas: Sequence[tuple[TaskVector, float]],
    density: float,
    spread: float,
    seed: int,
    scale: float = 1.0,
) -> TensorMap:
    """Magnitude-adaptive prune, then sign election and agreeing mean."""
    for vec, _ in deltas:
        _check_same_names(base.names, vec.names, "merge_della")
        _check_shapes(deltas[0][0], vec, "merge_della")
    sparsified = [
        (magprune(vec, density, spread, seed, task_ordinal=t), lam)
        for t, (vec, lam) in enumerate(deltas)
    ]
    signs = elect_sign(sparsified)
    merged = _agreeing_mean(sparsified, signs)
    return _compose(base, merged, scale)


# ---- recipes ----------------------------------------------------------------


@dataclass
class TaskSpec:
    task_id: str
    weight: float


@dataclass
class MergeRecipe:
    """Declarative description of one merge; mirrors the recipe JSON."""

    method: str
    tasks: list[TaskSpec]
    density: float = 1.0
    spread: float = 0.0
    seed: int = 0
    normalize_weights: bool = False
    scale: float = 1.0

    def validate(self) -> None:
        if self.method not in METHODS:
            raise RecipeError(
                f"unknown method {self.method!r}; expected one of {METHODS}"
            )
        if not self.tasks:
            raise RecipeError("recipe needs at least one task")
        for spec in self.tasks:
            if spec.weight < 0.0:
                raise RecipeError(f"task {spec.task_id!r} has negative weight")
        if self.normalize_weights and sum(t.weight for t in self.tasks) <= 0.0:
            raise ZeroWeightSum("normalize_weights set but weights sum to zero")
        if self.method != "LINEAR":
            if not (0.0 < self.density <= 1.0):
                raise InvalidDensity(f"density must be in (0, 1], got {self.density}")
        if self.method == "DELLA":
            if self.spread < 0.0:
                raise InvalidSpread(f"spread must be non-negative, got {self.spread}")
            if self.density - self.spread / 2.0 <= 0.0:
                raise InvalidSpread(
                    f"spread {self.spread} leaves no keep mass at density "
                    f"{self.density}"
                )
        if not (0 <= self.seed <= MASK64):
            raise RecipeError(f"seed must fit in 64 bits, got {self.seed}")


_RECIPE_FIELDS = {
    "method",
    "tasks",
    "density",
    "spread",
    "seed",
    "normalize_weights",
    "scale",
}
_TASK_FIELDS = {"task_id", "weight"}


def recipe_from_dict(doc: dict) -> MergeRecipe:
    """Parse a recipe document; unknown fields are hard errors."""
    if not isinstance(doc, dict):
        raise RecipeError("recipe must be a JSON object")
    unknown = set(doc) - _RECIPE_FIELDS
    if unknown:
        raise RecipeError(f"unknown recipe fields: {sorted(unknown)}")
    if "method" not in doc or "tasks" not in doc:
        raise RecipeError("recipe requires 'method' and 'tasks'")
    method = str(doc["method"]).upper()
    if method == "DARE":
        method = "DARE_TIES"  # documented default variant
    tasks = []
    raw_tasks = doc["tasks"]
    if not isinstance(raw_tasks, list):
        raise RecipeError("'tasks' must be a list")
    for i, entry in enumerate(raw_tasks):
        if not isinstance(entry, dict):
            raise RecipeError(f"task entry {i} must be an object")
        unknown = set(entry) - _TASK_FIELDS
        if unknown:
            raise RecipeError(f"unknown task fields: {sorted(unknown)}")
        if "weight" not in entry:
            raise RecipeError(f"task entry {i} missing 'weight'")
        tasks.append(
            TaskSpec(task_id=str(entry.get("task_id", f"task{i}")),
                     weight=float(entry["weight"]))
        )
    recipe = MergeRecipe(
        method=method,
        tasks=tasks,
        density=float(doc.get("density", 1.0)),
        spread=float(doc.get("spread", 0.0)),
        seed=int(doc.get("seed", 0)),
        normalize_weights=bool(doc.get("normalize_weights", False)),
        scale=float(doc.get("scale", 1.0)),
    )
    recipe.validate()
    return recipe


def run_recipe(
    recipe: MergeRecipe, base: TensorMap, task_maps: Sequence[TensorMap]
) -> TensorMap:
    """Execute a recipe over a base checkpoint and the task checkpoints."""
    recipe.validate()
    if len(task_maps) != len(recipe.tasks):
        raise RecipeError(
            f"recipe names {len(recipe.tasks)} tasks but {len(task_maps)} "
            "checkpoints were given"
        )
    weights = [t.weight for t in recipe.tasks]
    if recipe.normalize_weights:
        total = float(sum(weights))
        weights = [w / total for w in weights]
    if recipe.method == "LINEAR":
        return merge_linear(list(zip(task_maps, weights)), normalize=False)
    deltas = [
        (compute_delta(base, tmap, sft_id=spec.task_id), lam)
        for tmap, spec, lam in zip(task_maps, recipe.tasks, weights)
    ]
    if recipe.method == "TIES":
        return merge_ties(base, deltas, recipe.density, recipe.scale)
    if recipe.method == "DARE_LINEAR":
        return merge_dare(base, deltas, recipe.density, recipe.seed, variant="linear")
    if recipe.method == "DARE_TIES":
        return merge_dare(base, deltas, recipe.density, recipe.seed, variant="ties")
    return merge_della(
        base, deltas, recipe.density, recipe.spread, recipe.seed, recipe.scale
    )
