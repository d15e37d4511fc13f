"""mergeforge command-line interface.

Exit codes: 0 success, 1 domain error (typed message on stderr), 2 usage
error.  All randomness flows from the effective seed, resolved as
--seed > MERGEFORGE_SEED > recipe/plan seed > 0.  Progress lines go to
stderr; when --out is absent, reporting commands write the document to
stdout.
"""

import argparse
import json
import math
import os
import sys
from typing import Optional

from mergeforge import __version__, container, datamix, diagnostics, merge, metrics
from mergeforge import sweep as sweepmod
from mergeforge import taskvector
from mergeforge.errors import LengthMismatch, MergeForgeError, RecipeError
from mergeforge.kernels import pairwise_dot
from mergeforge.rng import splitmix64_next
from mergeforge.tensormap import TensorMap


def _progress(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message, file=sys.stderr)


def _resolve_seed(cli_value: Optional[int], document_seed: Optional[int] = None) -> int:
    if cli_value is not None:
        return cli_value
    env = os.environ.get("MERGEFORGE_SEED")
    if env is not None and env != "":
        return int(env)
    if document_seed is not None:
        return document_seed
    return 0


def _emit(document: str, out_path: Optional[str]) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(document)
    else:
        sys.stdout.write(document)


# ---- subcommand handlers ----------------------------------------------------


def _cmd_inspect(args) -> int:
    summary = container.validate_header(args.path)
    if args.format == "json":
        doc = json.dumps(
            {
                "tensors": summary.tensor_count,
                "bytes": summary.total_bytes,
                "dtypes": list(summary.dtypes),
            },
            indent=2,
        ) + "\n"
    else:
        doc = (
            f"tensors: {summary.tensor_count}\n"
            f"bytes: {summary.total_bytes}\n"
            f"dtypes: {', '.join(summary.dtypes) or '-'}\n"
        )
    _emit(doc, None)
    return 0


def _cmd_diff(args) -> int:
    _progress(args, f"reading base {args.base}")
    base = container.read_checkpoint(args.base)
    _progress(args, f"reading sft {args.sft}")
    sft = container.read_checkpoint(args.sft)
    vector = taskvector.compute_delta(base, sft, base_id=args.base, sft_id=args.sft)
    taskvector.save_task_vector(vector, args.out)
    _progress(args, f"wrote task vector with {len(vector.names)} tensors to {args.out}")
    return 0


def _cmd_merge(args) -> int:
    with open(args.recipe, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RecipeError(f"{args.recipe}: invalid JSON: {exc}") from exc
    recipe = merge.recipe_from_dict(doc)
    seed = _resolve_seed(getattr(args, "seed", None), recipe.seed)
    recipe.seed = seed
    if len(args.task) != len(recipe.tasks):
        raise RecipeError(
            f"recipe names {len(recipe.tasks)} tasks but {len(args.task)} "
            "--task checkpoints were given"
        )
    base = container.read_checkpoint(args.base)
    task_maps = []
    for path in args.task:
        _progress(args, f"reading task checkpoint {path}")
        task_maps.append(container.read_checkpoint(path))
    merged = merge.run_recipe(recipe, base, task_maps)
    container.write_checkpoint(merged, args.out)
    _progress(args, f"{recipe.method} merge (seed {seed}) written to {args.out}")
    return 0


def _cmd_diagnose(args) -> int:
    base = container.read_checkpoint(args.base)
    sft_a = container.read_checkpoint(args.sft_a)
    sft_b = container.read_checkpoint(args.sft_b)
    vec_a = taskvector.compute_delta(base, sft_a, sft_id=args.sft_a)
    vec_b = taskvector.compute_delta(base, sft_b, sft_id=args.sft_b)
    grouping = taskvector.group_layers(vec_a, pattern=args.pattern)
    profile = diagnostics.correlation_profile(vec_a, vec_b, grouping)
    l2 = diagnostics.l2_profile([("a", vec_a), ("b", vec_b)], grouping)
    recommendation = diagnostics.recommend_strategy(
        profile, threshold=args.threshold, weighting=args.weighting
    )
    _progress(
        args,
        f"verdict {recommendation.verdict} (mean r {recommendation.mean_r:.4f} "
        f"vs threshold {recommendation.threshold})",
    )

    layer_rows = []
    for i, rep in enumerate(profile):
        layer_rows.append(
            {
                "layer": rep.layer_key,
                "n_params": rep.n_params,
                "n_tensors": rep.n_tensors,
                "pearson_r": rep.pearson_r,
                "l2_mean": {
                    "a": l2.mean_by_label["a"][i],
                    "b": l2.mean_by_label["b"][i],
                },
                "l2_total": {
                    "a": l2.total_by_label["a"][i],
                    "b": l2.total_by_label["b"][i],
                },
            }
        )
    report = {
        "labels": {"a": args.sft_a, "b": args.sft_b},
        "layers": layer_rows,
        "summary": l2.summary_by_label,
        "recommendation": {
            "verdict": recommendation.verdict,
            "mean_r": recommendation.mean_r,
            "threshold": recommendation.threshold,
            "weighting": args.weighting,
            "notes": recommendation.notes,
        },
    }
    doc = json.dumps(report, indent=2) + "\n"
    if args.table:
        lines = ["layer,l2_mean_a,l2_mean_b,pearson_r"]
        for row in layer_rows:
            r = row["pearson_r"]
            lines.append(
                f"{row['layer']},{row['l2_mean']['a']!r},{row['l2_mean']['b']!r},"
                + ("" if r is None else repr(r))
            )
        with open(args.table, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    _emit(doc, args.report)
    return 0


def _cmd_mix(args) -> int:
    if args.ratio and len(args.ratio) != len(args.inputs):
        raise RecipeError(
            f"{len(args.ratio)} --ratio values for {len(args.inputs)} --in files; "
            "give one per input or none"
        )
    seed = _resolve_seed(getattr(args, "seed", None))
    parts = []
    state = seed
    for i, path in enumerate(args.inputs):
        ds = datamix.read_jsonl(path)
        ratio = args.ratio[i] if args.ratio else 1.0
        # per-part subsample seeds are successive draws of the main stream
        state, part_seed = splitmix64_next(state)
        if ratio != 1.0:
            ds = datamix.subsample(ds, ratio, part_seed)
        _progress(args, f"{path}: {ds.count} records after ratio {ratio}")
        parts.append(ds)
    mixed = datamix.mix_datasets(parts, seed)
    datamix.write_jsonl(mixed, args.out)
    _progress(args, f"wrote {mixed.count} records to {args.out}")
    return 0


def _cmd_score(args) -> int:
    with open(args.hyp, "r", encoding="utf-8") as fh:
        hyps = fh.read().splitlines()
    with open(args.ref, "r", encoding="utf-8") as fh:
        refs = fh.read().splitlines()
    if len(hyps) != len(refs):
        raise LengthMismatch(
            f"{args.hyp} has {len(hyps)} lines, {args.ref} has {len(refs)}"
        )
    names = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = set(names) - set(metrics.METRIC_NAMES)
    if unknown:
        raise RecipeError(f"unknown metrics: {sorted(unknown)}")
    scored = metrics.score_corpus(list(zip(hyps, refs)), names)
    doc = json.dumps(
        {
            "pairs": scored.pair_count,
            "aggregate": scored.aggregate,
            "per_pair": scored.per_pair,
        },
        indent=2,
    ) + "\n"
    _emit(doc, args.out)
    return 0


def _rms_distance(left: TensorMap, right: TensorMap) -> float:
    sumsq = 0.0
    total = 0
    for name, a in left.items():
        diff = a.astype("float64").reshape(-1) - right[name].astype("float64").reshape(-1)
        sumsq += pairwise_dot(diff, diff)
        total += diff.size
    return math.sqrt(sumsq / total) if total else 0.0


def make_affinity_scorer(tasks) -> sweepmod.Scorer:
    """Built-in analytic scorer: affinity_i = 1 / (1 + rms(merged - task_i)).

    Deterministic stand-in for benchmark evaluation; metric names are
    affinity_0, affinity_1, ... in task order.
    """

    def scorer(merged: TensorMap) -> dict[str, float]:
        return {
            f"affinity_{i}": 1.0 / (1.0 + _rms_distance(merged, tmap))
            for i, (_, tmap) in enumerate(tasks)
        }

    return scorer


def _cmd_sweep(args) -> int:
    with open(args.plan, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RecipeError(f"{args.plan}: invalid JSON: {exc}") from exc
    plan = sweepmod.plan_from_dict(doc)
    plan.seed = _resolve_seed(getattr(args, "seed", None), plan.seed)
    base = container.read_checkpoint(args.base)
    tasks = []
    for path in args.task:
        stem = os.path.splitext(os.path.basename(path))[0]
        tasks.append((stem, container.read_checkpoint(path)))
    scorer = make_affinity_scorer(tasks)
    report = sweepmod.run_sweep(plan, base, tasks, scorer)
    fmt = args.format
    if fmt is None:
        ext = os.path.splitext(args.out or "")[1].lstrip(".").lower()
        fmt = {"csv": "csv", "json": "json", "md": "markdown"}.get(ext, "markdown")
    _emit(sweepmod.format_report(report, fmt), args.out)
    _progress(args, f"swept {len(report.rows)} grid points")
    return 0


# ---- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mergeforge",
        description="Checkpoint merging and weight-space diagnostics toolkit",
    )
    parser.add_argument("--version", action="version", version=f"mergeforge {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="global seed override")
    parser.add_argument(
        "--threads",
        type=int,
        default=os.cpu_count(),
        help="cap internal parallelism (results are identical for any value)",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress progress lines")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="summarize a checkpoint header")
    p.add_argument("path")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(handler=_cmd_inspect)

    p = sub.add_parser("diff", help="compute and store a task vector")
    p.add_argument("--base", required=True)
    p.add_argument("--sft", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_diff)

    p = sub.add_parser("merge", help="merge task checkpoints per a recipe")
    p.add_argument("--recipe", required=True)
    p.add_argument("--base", required=True)
    p.add_argument("--task", action="append", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                   help="override the recipe seed")
    p.set_defaults(handler=_cmd_merge)

    p = sub.add_parser("diagnose", help="L2/correlation profile and strategy verdict")
    p.add_argument("--base", required=True)
    p.add_argument("--sft-a", dest="sft_a", required=True)
    p.add_argument("--sft-b", dest="sft_b", required=True)
    p.add_argument("--threshold", type=float, default=diagnostics.DEFAULT_THRESHOLD)
    p.add_argument(
        "--weighting", choices=("uniform", "param-weighted"), default="uniform"
    )
    p.add_argument("--pattern", default=taskvector.DEFAULT_LAYER_PATTERN,
                   help="regex capturing the layer index")
    p.add_argument("--report", default=None, help="JSON report path (default stdout)")
    p.add_argument("--table", default=None, help="CSV table path")
    p.set_defaults(handler=_cmd_diagnose)

    p = sub.add_parser("mix", help="subsample and mix JSONL datasets")
    p.add_argument("--in", dest="inputs", action="append", required=True)
    p.add_argument("--ratio", type=float, action="append")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_mix)

    p = sub.add_parser("score", help="score hypothesis/reference text files")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--metrics", default="bleu4,chrfpp,rougel")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_score)

    p = sub.add_parser("sweep", help="run a merge ablation grid")
    p.add_argument("--plan", required=True)
    p.add_argument("--base", required=True)
    p.add_argument("--task", action="append", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json", "markdown"), default=None)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                   help="override the plan seed")
    p.set_defaults(handler=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.handler(args)
    except MergeForgeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: IoFailure: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
