"""Ablation sweeps: a grid of merge recipes over weight ratios and
densities, scored by an injected callback and compared against declared
baselines as percentage deltas.

The scorer indirection keeps the sweep runnable at desk scale; tests and
the CLI use synthetic analytic scorers instead of benchmark evaluation.
"""

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

from mergeforge.errors import RecipeError
from mergeforge.merge import METHODS, MergeRecipe, TaskSpec, run_recipe
from mergeforge.tensormap import TensorMap

Scorer = Callable[[TensorMap], dict[str, float]]


@dataclass
class SweepPlan:
    """Grid description plus the baselines percentage deltas refer to."""

    methods: list[str]
    ratios: list[tuple[float, float]]
    densities: list[float]
    seed: int
    baselines: dict[str, float]
    spread: float = 0.1  # DELLA only
    scale: float = 1.0
    normalize_weights: bool = False

    def validate(self) -> None:
        if not self.methods or not self.ratios or not self.densities:
            raise RecipeError("sweep plan needs methods, ratios, and densities")
        for method in self.methods:
            if method not in METHODS:
                raise RecipeError(f"unknown method {method!r} in plan")
        for lam_g, lam_s in self.ratios:
            if lam_g < 0 or lam_s < 0 or (lam_g == 0 and lam_s == 0):
                raise RecipeError(f"invalid ratio pair ({lam_g}, {lam_s})")
        if not self.baselines:
            raise RecipeError("sweep plan needs baseline scores")


_PLAN_FIELDS = {
    "methods",
    "ratios",
    "densities",
    "seed",
    "baselines",
    "spread",
    "scale",
    "normalize_weights",
}


def plan_from_dict(doc: dict) -> SweepPlan:
    """Parse a plan document; unknown fields are hard errors."""
    if not isinstance(doc, dict):
        raise RecipeError("sweep plan must be a JSON object")
    unknown = set(doc) - _PLAN_FIELDS
    if unknown:
        raise RecipeError(f"unknown plan fields: {sorted(unknown)}")
    for key in ("methods", "ratios", "densities", "seed", "baselines"):
        if key not in doc:
            raise RecipeError(f"sweep plan missing {key!r}")
    methods = []
    for m in doc["methods"]:
        name = str(m).upper()
        if name == "DARE":
            name = "DARE_TIES"
        methods.append(name)
    ratios = [(float(a), float(b)) for a, b in doc["ratios"]]
    plan = SweepPlan(
        methods=methods,
        ratios=ratios,
        densities=[float(d) for d in doc["densities"]],
        seed=int(doc["seed"]),
        baselines={str(k): float(v) for k, v in doc["baselines"].items()},
        spread=float(doc.get("spread", 0.1)),
        scale=float(doc.get("scale", 1.0)),
        normalize_weights=bool(doc.get("normalize_weights", False)),
    )
    plan.validate()
    return plan


@dataclass
class SweepRow:
    method: str
    weight_g: float
    weight_s: float
    density: float
    scores: dict[str, float]
    pct_delta: dict[str, float]
    avg_pct_delta: float
    best: bool = False


@dataclass
class SweepReport:
    rows: list[SweepRow]
    metrics: list[str] = field(default_factory=list)
    baselines: dict[str, float] = field(default_factory=dict)


def pct_delta(score: float, baseline: float) -> float:
    return 100.0 * (score - baseline) / baseline


def format_pct(value: float) -> str:
    """Two-decimal signed percent, the paper-table convention: +1.59%."""
    return f"{value:+.2f}%"


def run_sweep(
    plan: SweepPlan,
    base: TensorMap,
    tasks: Sequence[tuple[str, TensorMap]],
    scorer: Scorer,
) -> SweepReport:
    """One merge per (method, ratio, density) grid point, in grid order."""
    plan.validate()
    if len(tasks) != 2:
        raise RecipeError(
            f"ratio grids pair two tasks; got {len(tasks)} task checkpoints"
        )
    metrics = sorted(plan.baselines)
    rows: list[SweepRow] = []
    for method in plan.methods:
        for lam_g, lam_s in plan.ratios:
            for density in plan.densities:
                recipe = MergeRecipe(
                    method=method,
                    tasks=[
                        TaskSpec(tasks[0][0], lam_g),
                        TaskSpec(tasks[1][0], lam_s),
                    ],
                    density=density,
                    spread=plan.spread if method == "DELLA" else 0.0,
                    seed=plan.seed,
                    normalize_weights=plan.normalize_weights,
                    scale=plan.scale,
                )
                point = f"{method} {lam_g}/{lam_s} d={density}"
                try:
                    merged = run_recipe(recipe, base, [tasks[0][1], tasks[1][1]])
                    scores = scorer(merged)
                except Exception as exc:
                    raise type(exc)(f"[grid point {point}] {exc}") from exc
                missing = [m for m in metrics if m not in scores]
                if missing:
                    raise RecipeError(
                        f"[grid point {point}] scorer missing metrics {missing}"
                    )
                deltas = {m: pct_delta(scores[m], plan.baselines[m]) for m in metrics}
                avg = sum(deltas[m] for m in metrics) / len(metrics)
                rows.append(
                    SweepRow(
                        method=method,
                        weight_g=lam_g,
                        weight_s=lam_s,
                        density=density,
                        scores={m: scores[m] for m in metrics},
                        pct_delta=deltas,
                        avg_pct_delta=avg,
                    )
                )
    # best row per method: max avg pct delta, ties to the earlier row
    for method in plan.methods:
        best_idx, best_avg = None, None
        for i, row in enumerate(rows):
            if row.method != method:
                continue
            if best_avg is None or row.avg_pct_delta > best_avg:
                best_idx, best_avg = i, row.avg_pct_delta
        if best_idx is not None:
            rows[best_idx].best = True
    return SweepReport(rows=rows, metrics=metrics, baselines=dict(plan.baselines))


# ---- formatting -------------------------------------------------------------


def _row_cells(row: SweepRow, metrics: Sequence[str]) -> list[str]:
    cells = [
        row.method,
        f"{row.weight_g:g}/{row.weight_s:g}",
        f"{row.density:g}",
    ]
    for m in metrics:
        cells.append(f"{row.scores[m]:.4f}({format_pct(row.pct_delta[m])})")
    cells.append(format_pct(row.avg_pct_delta))
    return cells


def format_report(report: SweepReport, fmt: str = "markdown") -> str:
    """Render a sweep report as csv, json, or a markdown table.

    Percentage deltas are rounded to two decimals here only; the report
    object keeps full precision.
    """
    metrics = report.metrics
    if fmt == "json":
        payload = {
            "baselines": report.baselines,
            "rows": [
                {
                    "method": r.method,
                    "weight_g": r.weight_g,
                    "weight_s": r.weight_s,
                    "density": r.density,
                    "scores": r.scores,
                    "pct_delta": r.pct_delta,
                    "avg_pct_delta": r.avg_pct_delta,
                    "best": r.best,
                }
                for r in report.rows
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["method", "weight", "density"]
        for m in metrics:
            header += [m, f"{m}_pct"]
        header += ["avg_pct", "best"]
        writer.writerow(header)
        for r in report.rows:
            cells = [r.method, f"{r.weight_g:g}/{r.weight_s:g}", f"{r.density:g}"]
            for m in metrics:
                cells += [repr(r.scores[m]), format_pct(r.pct_delta[m])]
            cells += [format_pct(r.avg_pct_delta), "1" if r.best else "0"]
            writer.writerow(cells)
        return buf.getvalue()

    if fmt in ("markdown", "md"):
        header = ["Method", "Weight", "Density", *metrics, "Avg %"]
        lines = [
            "| " + " | ".join(header) + " |",
            "|" + "|".join("---" for _ in header) + "|",
        ]
        for r in report.rows:
            cells = _row_cells(r, metrics)
            if r.best:
                cells = [f"**{c}**" for c in cells]
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"

    raise ValueError(f"unknown format {fmt!r}")
