"""Serializes evaluation results: JSON reports, CSV tables, console views.

Every JSON file goes through one canonical dumper (sorted keys, fixed
indentation, trailing newline), so identical results are byte-identical
on disk regardless of when or where they were produced.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

from .bench import AblationRow, AggregateReport
from .bundles import canon_dumps, metrics_to_jsonable
from .errors import IoFailure


def means_to_jsonable(agg: AggregateReport) -> dict:
    m = agg.means
    return {
        "tp": m.tp,
        "fp": m.fp,
        "fn": m.fn_,
        "tn": m.tn,
        "precision": m.precision,
        "recall": m.recall,
        "f1": m.f1,
    }


def aggregate_to_jsonable(agg: AggregateReport, include_rounds: bool = True) -> dict:
    data = {
        "task_id": agg.task_id,
        "config": agg.config.to_dict(),
        "pool_variant_ids": list(agg.pool_variant_ids),
        "n_inputs": agg.n_inputs,
        "n_rounds": agg.n_rounds,
        "means": means_to_jsonable(agg),
        "mean_categories": dict(agg.mean_categories),
        "flags": dict(agg.flags),
    }
    if include_rounds:
        data["rounds"] = [
            {
                "round_index": r.round_index,
                "variant_ids": list(r.variant_ids),
                "n_candidates": r.n_candidates,
                "categories": dict(r.categories),
                "metrics": metrics_to_jsonable(r.metrics),
            }
            for r in agg.rounds
        ]
    return data


def ablation_row_to_jsonable(row: AblationRow, include_rounds: bool = True) -> dict:
    return {
        "pattern": row.pattern,
        "pg_mode": row.pg_mode,
        "ig_mode": row.ig_mode,
        "dt_mode": row.dt_mode,
        "k": row.k,
        "aggregate": aggregate_to_jsonable(row.aggregate, include_rounds=include_rounds),
    }


def write_json(path: Path, data) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(canon_dumps(data).encode("utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


# -- CSV ---------------------------------------------------------------------

_METRIC_FIELDS = ("tp", "fp", "fn", "tn", "precision", "recall", "f1")


def write_evaluate_csv(
    path: Path, per_task: Sequence[AggregateReport], corpus_mean: dict | None
) -> Path:
    """One row per task plus an optional corpus mean row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task_id", "n_rounds", "n_inputs", *_METRIC_FIELDS])
        for agg in per_task:
            means = means_to_jsonable(agg)
            writer.writerow(
                [agg.task_id, agg.n_rounds, agg.n_inputs]
                + [repr(means[f]) for f in _METRIC_FIELDS]
            )
        if corpus_mean is not None:
            writer.writerow(
                ["MEAN", "", ""] + [repr(corpus_mean[f]) for f in _METRIC_FIELDS]
            )
    return path


def write_ablation_csv(path: Path, rows: Sequence[AblationRow]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["task_id", "pattern", "pg_mode", "ig_mode", "dt_mode", "k", *_METRIC_FIELDS]
        )
        for row in rows:
            means = means_to_jsonable(row.aggregate)
            writer.writerow(
                [
                    row.aggregate.task_id,
                    row.pattern,
                    row.pg_mode,
                    row.ig_mode,
                    row.dt_mode,
                    row.k,
                ]
                + [repr(means[f]) for f in _METRIC_FIELDS]
            )
    return path


def write_testcases_csv(path: Path, report: dict) -> Path:
    """Flat view of one run's candidate test cases from a report dict."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["input_id", "oracle", "put_output", "category", "pass_fail", "payload"]
        )
        for tc in report["testcases"]:
            writer.writerow(
                [
                    tc["input_id"],
                    tc["oracle"],
                    tc["put_output"],
                    tc["category"] or "",
                    tc["pass_fail"] or "",
                    tc["payload"],
                ]
            )
    return path


# -- console -----------------------------------------------------------------


def _pct(x: float) -> str:
    return f"{100.0 * x:6.2f}"


def format_task_row(agg: AggregateReport) -> str:
    m = agg.means
    return (
        f"{agg.task_id:<20} rounds={agg.n_rounds:<4} "
        f"R={_pct(m.recall)}  P={_pct(m.precision)}  F1={_pct(m.f1)}"
    )


def format_evaluate_table(per_task: Sequence[AggregateReport], corpus_mean: dict | None) -> str:
    lines = [format_task_row(agg) for agg in per_task]
    if corpus_mean is not None:
        lines.append(
            f"{'MEAN':<20} {'':<12}"
            f"R={_pct(corpus_mean['recall'])}  "
            f"P={_pct(corpus_mean['precision'])}  F1={_pct(corpus_mean['f1'])}"
        )
    return "\n".join(lines)


def format_ablation_table(rows: Sequence[AblationRow]) -> str:
    lines = [
        f"{'pattern':<8}{'pg':<10}{'ig':<8}{'dt':<8}{'k':<4}"
        f"{'recall':>8} {'precision':>10} {'f1':>8}"
    ]
    for row in rows:
        m = row.aggregate.means
        lines.append(
            f"{row.pattern:<8}{row.pg_mode:<10}{row.ig_mode:<8}{row.dt_mode:<8}"
            f"{row.k:<4}{_pct(m.recall):>8} {_pct(m.precision):>10} {_pct(m.f1):>8}"
        )
    return "\n".join(lines)


def corpus_mean_of(per_task: Sequence[AggregateReport]) -> dict | None:
    """Unweighted mean of per-task mean metrics."""
    if not per_task:
        return None
    rows = [means_to_jsonable(agg) for agg in per_task]
    return {f: sum(r[f] for r in rows) / len(rows) for f in _METRIC_FIELDS}
