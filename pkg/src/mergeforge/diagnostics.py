"""Weight-space diagnostics: per-layer L2 profiles, inter-task update
correlation, and the data-mix vs merge recommendation.

Correlation is the plain two-pass Pearson r over a layer's concatenated
delta elements: subtract the per-layer means, then
sum(ag*as) / sqrt(sum(ag^2) * sum(as^2)).  Layers where either delta has
zero variance carry no evidence and are reported as undefined rather
than raising.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from mergeforge.errors import (
    LengthMismatch,
    NameSetMismatch,
    NoDefinedCorrelations,
    TooFewElements,
)
from mergeforge.kernels import pairwise_dot, pairwise_sum
from mergeforge.taskvector import LayerGrouping, TaskVector, layer_l2

DATA_MIX = "DATA_MIX"
MERGE = "MERGE"

DEFAULT_THRESHOLD = 0.5


@dataclass
class LayerReport:
    """One diagnostic row per layer."""

    layer_key: str
    n_params: int
    n_tensors: int
    pearson_r: Optional[float] = None
    l2_mean: Optional[float] = None
    l2_total: Optional[float] = None


@dataclass
class Recommendation:
    verdict: str  # DATA_MIX or MERGE
    mean_r: float
    threshold: float
    per_layer_evidence: list[LayerReport] = field(default_factory=list)
    notes: str = ""


def pearson_layer(dg, ds) -> Optional[float]:
    """Two-pass Pearson r; None (undefined) when either side is constant."""
    dg = np.ascontiguousarray(dg, dtype=np.float64).reshape(-1)
    ds = np.ascontiguousarray(ds, dtype=np.float64).reshape(-1)
    if dg.size != ds.size:
        raise LengthMismatch(f"pearson: lengths {dg.size} vs {ds.size}")
    if dg.size < 2:
        raise TooFewElements(f"pearson needs >= 2 elements, got {dg.size}")
    n = dg.size
    ag = dg - pairwise_sum(dg) / n
    a_s = ds - pairwise_sum(ds) / n
    ssg = pairwise_dot(ag, ag)
    sss = pairwise_dot(a_s, a_s)
    if ssg == 0.0 or sss == 0.0:
        return None
    r = pairwise_dot(ag, a_s) / math.sqrt(ssg * sss)
    return min(1.0, max(-1.0, r))


def _layer_concat(vector: TaskVector, names: Sequence[str]) -> np.ndarray:
    # Canonical (name, flat-index) order: names are already sorted in the
    # grouping; flatten row-major.
    if not names:
        return np.empty(0, dtype=np.float64)
    return np.concatenate(
        [vector.deltas[n].reshape(-1).astype(np.float64) for n in names]
    )


def correlation_profile(
    vg: TaskVector, vs: TaskVector, grouping: LayerGrouping
) -> list[LayerReport]:
    """Per-layer Pearson r between two task vectors sharing a base."""
    _names_g = set(vg.names)
    if _names_g != set(vs.names):
        raise NameSetMismatch(
            "correlation_profile: task vectors have different tensor names"
        )
    covered = grouping.all_names()
    if not _names_g <= covered:
        raise NameSetMismatch(
            f"correlation_profile: grouping misses {sorted(_names_g - covered)}"
        )
    reports = []
    for key, names in grouping.groups.items():
        present = [n for n in names if n in _names_g]
        dg = _layer_concat(vg, present)
        ds = _layer_concat(vs, present)
        r = pearson_layer(dg, ds) if dg.size >= 2 else None
        reports.append(
            LayerReport(
                layer_key=key,
                n_params=int(dg.size),
                n_tensors=len(present),
                pearson_r=r,
            )
        )
    return reports


@dataclass
class L2Profile:
    """Per-layer L2 table for several variants plus quartile summaries."""

    layer_keys: list[str]
    mean_by_label: dict[str, list[float]]
    total_by_label: dict[str, list[float]]
    summary_by_label: dict[str, dict[str, float]]


def _five_number(values: Sequence[float]) -> dict[str, float]:
    arr = np.asarray(values, dtype=np.float64)
    q = np.percentile(arr, [0, 25, 50, 75, 100], method="linear")
    return {
        "min": float(q[0]),
        "q1": float(q[1]),
        "median": float(q[2]),
        "q3": float(q[3]),
        "max": float(q[4]),
    }


def l2_profile(
    variants: Sequence[tuple[str, TaskVector]], grouping: LayerGrouping
) -> L2Profile:
    """Layer-wise L2 table across variants, with per-variant five-number
    summaries (linear-interpolation quartiles over the layer values)."""
    layer_keys = grouping.layer_keys
    mean_by, total_by, summary_by = {}, {}, {}
    for label, vector in variants:
        means = layer_l2(vector, grouping, reduction="mean")
        totals = layer_l2(vector, grouping, reduction="total")
        mean_by[label] = [v for _, v in means]
        total_by[label] = [v for _, v in totals]
        summary_by[label] = _five_number(mean_by[label])
    return L2Profile(
        layer_keys=layer_keys,
        mean_by_label=mean_by,
        total_by_label=total_by,
        summary_by_label=summary_by,
    )


def recommend_strategy(
    profile: Sequence[LayerReport],
    threshold: float = DEFAULT_THRESHOLD,
    weighting: str = "uniform",
) -> Recommendation:
    """DATA_MIX when mean correlation >= threshold, MERGE otherwise.

    Undefined layers are excluded from the mean and counted in notes.
    weighting="param-weighted" weights each layer's r by its parameter
    count.
    """
    if weighting not in ("uniform", "param-weighted"):
        raise ValueError(f"unknown weighting {weighting!r}")
    defined = [rep for rep in profile if rep.pearson_r is not None]
    if not defined:
        raise NoDefinedCorrelations("every layer has zero variance")
    if weighting == "uniform":
        mean_r = sum(rep.pearson_r for rep in defined) / len(defined)
    else:
        total = sum(rep.n_params for rep in defined)
        mean_r = sum(rep.pearson_r * rep.n_params for rep in defined) / total
    undefined = len(profile) - len(defined)
    verdict = DATA_MIX if mean_r >= threshold else MERGE
    notes = f"{len(defined)} layers with defined r; {undefined} undefined"
    return Recommendation(
        verdict=verdict,
        mean_r=mean_r,
        threshold=threshold,
        per_layer_evidence=list(profile),
        notes=notes,
    )
