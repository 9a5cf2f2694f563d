"""Command line interface: run, evaluate, ablate.

run hunts for bug-revealing test cases on one task bundle. evaluate
scores pools over a corpus with the repetition protocol. ablate sweeps
the six stage-combination patterns. All three read the same config file
keys; explicit flags win over the file. Progress and decisions stream to
stderr as one JSON object per line; human summaries go to stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench, figures, reporting
from .bundles import RunRecord, load_corpus, load_task_bundle, save_run_artifacts
from .config import RunConfig, Settings, build_configs, load_config_file
from .election import run_differential
from .errors import ConfigError, DissentError
from .llm import make_gateway
from .model import Validity
from .sandbox import Sandbox
from .variants import filter_by_suite, generate_variants


def _log_printer(event: str, **fields) -> None:
    line = json.dumps({"event": event, **fields}, sort_keys=True, ensure_ascii=False)
    print(line, file=sys.stderr)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON config file; flags win")
    parser.add_argument("--input-pool", type=int, default=None, dest="input_pool")
    parser.add_argument("--variant-pool", type=int, default=None, dest="variant_pool")
    parser.add_argument("--pg", choices=("basic", "filtered", "ours"), default=None,
                        dest="pg_mode", help="variant production mode")
    parser.add_argument("--ig", choices=("basic", "ours"), default=None,
                        dest="ig_mode", help="input production mode")
    parser.add_argument("--dt", choices=("basic", "ours"), default=None,
                        dest="dt_mode", help="oracle election mode")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--max-rounds", type=int, default=None, dest="max_rounds")
    parser.add_argument("--backend", choices=("replay", "http"), default=None)
    parser.add_argument("--cache-dir", type=Path, default=None, dest="cache_dir")
    parser.add_argument("--templates-dir", type=Path, default=None, dest="templates_dir")
    parser.add_argument("--model", default=None)
    parser.add_argument("--base-url", default=None, dest="base_url")
    parser.add_argument("--record", action="store_const", const=True, default=None,
                        help="capture live responses into the cache (forces http)")
    parser.add_argument("--jobs", type=int, default=None)
    parser.add_argument("--wall-ms", type=int, default=None, dest="wall_ms")
    parser.add_argument("--quiet", action="store_const", const=True, default=None)
    parser.add_argument("--out", type=Path, default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dissent",
        description="Generate and evaluate bug-revealing test cases for plausible programs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="hunt for bug-revealing test cases on one task")
    p_run.add_argument("task_dir", type=Path)
    p_run.add_argument("--k", type=int, default=None)
    _add_common_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("evaluate", help="score the pipeline over a corpus")
    p_eval.add_argument("corpus_dir", type=Path)
    p_eval.add_argument("--k", type=int, default=None)
    p_eval.add_argument("--assume-correct-put", action="store_const", const=True,
                        default=None, dest="assume_correct_put",
                        help="treat subject programs as correct (negatives become TN)")
    _add_common_flags(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_abl = sub.add_parser("ablate", help="sweep the six stage-combination patterns")
    p_abl.add_argument("corpus_dir", type=Path)
    p_abl.add_argument("--k", default=None,
                       help="comma-separated list of subset sizes, e.g. 2,4")
    p_abl.add_argument("--assume-correct-put", action="store_const", const=True,
                       default=None, dest="assume_correct_put")
    _add_common_flags(p_abl)
    p_abl.set_defaults(func=cmd_ablate)
    return parser


def _flag_values(args: argparse.Namespace, k_value) -> dict:
    values = {
        "k": k_value,
        "input_pool": args.input_pool,
        "variant_pool": args.variant_pool,
        "pg_mode": args.pg_mode,
        "ig_mode": args.ig_mode,
        "dt_mode": args.dt_mode,
        "seed": args.seed,
        "max_rounds": args.max_rounds,
        "backend": args.backend,
        "cache_dir": args.cache_dir,
        "templates_dir": args.templates_dir,
        "model": args.model,
        "base_url": args.base_url,
        "record": args.record,
        "jobs": args.jobs,
        "quiet": args.quiet,
        "wall_ms": args.wall_ms,
    }
    if args.record:
        values["backend"] = "http"
    return values


def _setup(args: argparse.Namespace, k_value) -> tuple[RunConfig, Settings]:
    file_values = load_config_file(args.config) if args.config else {}
    return build_configs(file_values, _flag_values(args, k_value))


def _parse_k_list(raw) -> list[int]:
    if raw is None:
        return []
    try:
        ks = [int(part) for part in str(raw).split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --k list {raw!r}: {exc}") from exc
    if not ks:
        raise ConfigError(f"bad --k list {raw!r}: no values")
    return ks


def _sandbox(settings: Settings) -> Sandbox:
    return Sandbox(limits=settings.limits, jobs=settings.jobs)


# -- run ---------------------------------------------------------------------

def cmd_run(args: argparse.Namespace) -> int:
    config, settings = _setup(args, args.k)
    log = None if settings.quiet else _log_printer
    task = load_task_bundle(args.task_dir)
    out_dir = args.out or Path("runs") / task.task_id
    gateway = make_gateway(settings)

    with _sandbox(settings) as sbx:
        source = "put_guided" if config.pg_mode == "ours" else "spec_only"
        raw = generate_variants(
            task, config.k, source, gateway, sbx,
            temperature=settings.temperature,
            templates_dir=settings.templates_dir, log=log,
        )
        if config.pg_mode == "basic":
            variants = list(raw)
        else:
            variants = filter_by_suite(task, raw, sbx, log=log)

        pool = bench.materialize_input_pool(
            task, config.ig_mode, config.input_pool, gateway, sbx,
            temperature=settings.temperature,
            templates_dir=settings.templates_dir, log=log,
        )
        # bug hunting feeds only inputs the checker did not reject
        usable = [gi for gi in pool.inputs if gi.validity is not Validity.INVALID]
        dropped = len(pool.inputs) - len(usable)
        if log and dropped:
            log("invalid_inputs_dropped", task_id=task.task_id, count=dropped)

        candidates = run_differential(
            task, variants, usable, bench.strategy_for(config.dt_mode), sbx, log=log
        )

        verdicts = None
        metrics = None
        if task.canonical is not None:
            ordered = sorted(candidates, key=lambda tc: tc.input.input_id)
            verdicts = tuple(bench.classify(task, tc, sbx) for tc in ordered)
            candidates = ordered
            metrics = bench.compute_metrics(verdicts, put_is_buggy=True)

    record = RunRecord(
        task_id=task.task_id,
        config=config.to_dict(),
        variants=tuple(variants),
        inputs=pool.inputs,
        testcases=tuple(candidates),
        generator=pool.generator,
        verdicts=verdicts,
        metrics=metrics,
    )
    report_path = save_run_artifacts(record, out_dir)
    report = json.loads(report_path.read_text(encoding="utf-8"))
    reporting.write_testcases_csv(out_dir / "testcases.csv", report)
    if verdicts is not None:
        counts: dict[str, int] = {}
        for v in verdicts:
            counts[v.category.value] = counts.get(v.category.value, 0) + 1
        for name in ("Tc", "Tr", "Tw", "Terr"):
            counts.setdefault(name, 0)
        figures.save_category_breakdown(
            counts, out_dir / "categories.png",
            title=f"{task.task_id}: candidate categories",
        )

    print(f"task {task.task_id}: {len(candidates)} candidate test case(s)")
    for tc, verdict in zip(candidates, verdicts or [None] * len(candidates)):
        payload = tc.input.payload.strip().replace("\n", " | ")
        if len(payload) > 48:
            payload = payload[:45] + "..."
        tag = f"  [{verdict.category.value}]" if verdict else ""
        print(
            f"  {tc.input.input_id}: input {payload!r} -> expected {tc.oracle!r} "
            f"(subject printed {tc.election.put_output!r}){tag}"
        )
    if metrics is not None:
        print(
            f"  tp={metrics.tp} fp={metrics.fp} fn={metrics.fn_} tn={metrics.tn} "
            f"precision={metrics.precision:.4f} recall={metrics.recall:.4f} f1={metrics.f1:.4f}"
        )
    print(f"report: {report_path}")
    return 0


# -- evaluate ----------------------------------------------------------------

def _evaluate_one_task(task, config, settings, gateway, sbx, put_is_buggy, log):
    source = "put_guided" if config.pg_mode == "ours" else "spec_only"
    pools = bench.materialize_variant_pool(
        task, source, config.variant_pool, gateway, sbx,
        temperature=settings.temperature,
        templates_dir=settings.templates_dir, log=log,
    )
    pool = pools.raw if config.pg_mode == "basic" else pools.filtered
    input_pool = bench.materialize_input_pool(
        task, config.ig_mode, config.input_pool, gateway, sbx,
        temperature=settings.temperature,
        templates_dir=settings.templates_dir, log=log,
    )
    return bench.repetition_protocol(
        task, config, pool, input_pool.inputs, sbx,
        put_is_buggy=put_is_buggy, log=log,
    )


def cmd_evaluate(args: argparse.Namespace) -> int:
    config, settings = _setup(args, args.k)
    log = None if settings.quiet else _log_printer
    put_is_buggy = not args.assume_correct_put
    corpus = load_corpus(args.corpus_dir)
    out_dir = args.out or Path("eval") / corpus.corpus_id
    gateway = make_gateway(settings)

    per_task: list[bench.AggregateReport] = []
    failures: list[dict] = []
    with _sandbox(settings) as sbx:
        for task_dir in corpus.tasks:
            try:
                task = load_task_bundle(task_dir)
                agg = _evaluate_one_task(
                    task, config, settings, gateway, sbx, put_is_buggy, log
                )
            except DissentError as exc:
                failures.append(
                    {
                        "task_dir": str(task_dir),
                        "error": type(exc).__name__,
                        "message": str(exc),
                        "exit_code": exc.exit_code,
                    }
                )
                if log:
                    log("task_failed", task_dir=str(task_dir), error=type(exc).__name__)
                continue
            reporting.write_json(
                out_dir / agg.task_id / "aggregate.json",
                reporting.aggregate_to_jsonable(agg),
            )
            figures.save_category_breakdown(
                agg.mean_categories,
                out_dir / agg.task_id / "categories.png",
                title=f"{agg.task_id}: candidate categories",
            )
            per_task.append(agg)

    corpus_mean = reporting.corpus_mean_of(per_task)
    corpus_report = {
        "corpus_id": corpus.corpus_id,
        "config": config.to_dict(),
        "tasks": [
            {
                "task_id": agg.task_id,
                "n_rounds": agg.n_rounds,
                "n_inputs": agg.n_inputs,
                "means": reporting.means_to_jsonable(agg),
                "mean_categories": dict(agg.mean_categories),
                "flags": dict(agg.flags),
            }
            for agg in per_task
        ],
        "corpus_mean": corpus_mean,
        "failures": failures,
    }
    reporting.write_json(out_dir / "aggregate.json", corpus_report)
    reporting.write_evaluate_csv(out_dir / "aggregate.csv", per_task, corpus_mean)
    if per_task:
        rows = [(agg.task_id, reporting.means_to_jsonable(agg)) for agg in per_task]
        if corpus_mean is not None and len(per_task) > 1:
            rows.append(("MEAN", corpus_mean))
        figures.save_metrics_bars(
            rows, out_dir / "metrics.png", title=f"{corpus.corpus_id}: detection metrics"
        )

    print(reporting.format_evaluate_table(per_task, corpus_mean))
    if failures:
        print(f"{len(failures)} task(s) failed; see {out_dir / 'aggregate.json'}")
    print(f"reports: {out_dir}")
    if per_task:
        return 0
    return failures[0]["exit_code"] if failures else 0


# -- ablate ------------------------------------------------------------------

def cmd_ablate(args: argparse.Namespace) -> int:
    ks = _parse_k_list(args.k)
    config, settings = _setup(args, ks[0] if ks else None)
    if not ks:
        ks = [config.k]
    log = None if settings.quiet else _log_printer
    put_is_buggy = not args.assume_correct_put
    corpus = load_corpus(args.corpus_dir)
    out_dir = args.out or Path("ablation") / corpus.corpus_id
    gateway = make_gateway(settings)

    all_rows: list[bench.AblationRow] = []
    failures: list[dict] = []
    with _sandbox(settings) as sbx:
        for task_dir in corpus.tasks:
            try:
                task = load_task_bundle(task_dir)
                rows = bench.ablation_matrix(
                    task, config, gateway, sbx, ks=ks,
                    put_is_buggy=put_is_buggy,
                    temperature=settings.temperature,
                    templates_dir=settings.templates_dir, log=log,
                )
            except DissentError as exc:
                failures.append(
                    {
                        "task_dir": str(task_dir),
                        "error": type(exc).__name__,
                        "message": str(exc),
                        "exit_code": exc.exit_code,
                    }
                )
                if log:
                    log("task_failed", task_dir=str(task_dir), error=type(exc).__name__)
                continue
            reporting.write_json(
                out_dir / task.task_id / "ablation.json",
                {
                    "task_id": task.task_id,
                    "ks": ks,
                    "rows": [reporting.ablation_row_to_jsonable(r) for r in rows],
                },
            )
            all_rows.extend(rows)

    flat_rows = [
        {
            "task_id": row.aggregate.task_id,
            "pattern": row.pattern,
            "pg_mode": row.pg_mode,
            "ig_mode": row.ig_mode,
            "dt_mode": row.dt_mode,
            "k": row.k,
            **reporting.means_to_jsonable(row.aggregate),
        }
        for row in all_rows
    ]
    reporting.write_json(
        out_dir / "ablation.json",
        {
            "corpus_id": corpus.corpus_id,
            "config": config.to_dict(),
            "ks": ks,
            "rows": flat_rows,
            "failures": failures,
        },
    )
    reporting.write_ablation_csv(out_dir / "ablation.csv", all_rows)
    if flat_rows:
        figures.save_ablation_curves(flat_rows, out_dir / "ablation_f1.png", metric="f1")
        figures.save_ablation_curves(
            flat_rows, out_dir / "ablation_recall.png", metric="recall"
        )

    print(reporting.format_ablation_table(all_rows))
    if failures:
        print(f"{len(failures)} task(s) failed; see {out_dir / 'ablation.json'}")
    print(f"reports: {out_dir}")
    if all_rows:
        return 0
    return failures[0]["exit_code"] if failures else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DissentError as exc:
        _log_printer("error", kind=type(exc).__name__, message=str(exc),
                     exit_code=exc.exit_code)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
