"""On-disk formats: task bundles, corpora, and saved run artifacts.

A task bundle directory looks like:

    spec.md            problem statement (required)
    put.py | put.cpp   program under test (required)
    tests/NNN.in/.out  existing suite, paired by number (required)
    canonical.*        reference solution (evaluation corpora only)
    checker.*          input validity checker, exit 0 iff valid (optional)
    meta.json          {task_id, language_tag, difficulty?} (optional)

Saving run artifacts is deterministic: identical records produce
byte-identical trees, so reports can be diffed across runs.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import IoFailure, MissingFile, UnpairedTestFile, UnsupportedLanguageTag
from .model import (
    CandidateTestCase,
    Category,
    ElectionTrace,
    EvalVerdict,
    FilterStatus,
    GeneratedInput,
    MetricsReport,
    Origin,
    PassFail,
    ProgramVariant,
    Provenance,
    SourceProgram,
    Strategy,
    SuiteTestCase,
    TaskBundle,
    Validity,
)

EXT_TO_LANG = {".py": "python3", ".cpp": "cpp", ".cc": "cpp", ".cxx": "cpp"}
LANG_TO_EXT = {"python3": ".py", "cpp": ".cpp", "generator-script": ".py"}
SUPPORTED_TAGS = frozenset(LANG_TO_EXT)

_TEST_NAME = re.compile(r"^(\d+)\.(in|out)$")


def canon_dumps(obj) -> str:
    """The one JSON serialization used for every report file."""
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_bytes(text.encode("utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _read_text(path: Path) -> str:
    try:
        return path.read_bytes().decode("utf-8")
    except FileNotFoundError as exc:
        raise MissingFile(f"missing file: {path}") from exc
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


# -- task bundles ------------------------------------------------------------


def _find_program(task_dir: Path, stem: str) -> SourceProgram | None:
    hits = sorted(p for p in task_dir.glob(f"{stem}.*") if p.suffix != ".json")
    if not hits:
        return None
    for path in hits:
        lang = EXT_TO_LANG.get(path.suffix)
        if lang is not None:
            return SourceProgram(language_tag=lang, source=_read_text(path))
    raise UnsupportedLanguageTag(
        f"{task_dir}: {stem} has no supported extension "
        f"(found {[p.name for p in hits]}, supported {sorted(EXT_TO_LANG)})"
    )


def _load_suite(tests_dir: Path) -> tuple[SuiteTestCase, ...]:
    if not tests_dir.is_dir():
        raise MissingFile(f"missing tests directory: {tests_dir}")
    ins: dict[str, Path] = {}
    outs: dict[str, Path] = {}
    for path in sorted(tests_dir.iterdir()):
        m = _TEST_NAME.match(path.name)
        if not m:
            continue
        (ins if m.group(2) == "in" else outs)[m.group(1)] = path
    unpaired = sorted(set(ins) ^ set(outs))
    if unpaired:
        raise UnpairedTestFile(
            f"{tests_dir}: unpaired test number(s) {unpaired} "
            "(every NNN.in needs a NNN.out and vice versa)"
        )
    if not ins:
        raise MissingFile(f"{tests_dir}: no NNN.in/NNN.out pairs found")
    return tuple(
        SuiteTestCase(input=_read_text(ins[n]), expected_output=_read_text(outs[n]))
        for n in sorted(ins, key=int)
    )


def load_task_bundle(task_dir: Path) -> TaskBundle:
    """Parse one task bundle directory into an immutable TaskBundle."""
    task_dir = Path(task_dir)
    if not task_dir.is_dir():
        raise MissingFile(f"task bundle directory does not exist: {task_dir}")
    spec_path = task_dir / "spec.md"
    if not spec_path.is_file():
        raise MissingFile(f"missing file: {spec_path}")
    specification = _read_text(spec_path)

    put = _find_program(task_dir, "put")
    if put is None:
        raise MissingFile(f"{task_dir}: no put.<ext> program found")

    task_id = task_dir.name
    difficulty = None
    meta_path = task_dir / "meta.json"
    if meta_path.is_file():
        try:
            meta = json.loads(_read_text(meta_path))
        except json.JSONDecodeError as exc:
            raise IoFailure(f"{meta_path} is not valid JSON: {exc}") from exc
        task_id = meta.get("task_id", task_id)
        declared = meta.get("language_tag")
        if declared is not None and declared not in SUPPORTED_TAGS:
            raise UnsupportedLanguageTag(
                f"{meta_path}: language_tag {declared!r} is not supported "
                f"(supported: {sorted(SUPPORTED_TAGS)})"
            )
        if declared is not None and declared != put.language_tag:
            raise UnsupportedLanguageTag(
                f"{meta_path}: declared language_tag {declared!r} does not match "
                f"the put source ({put.language_tag})"
            )
        if meta.get("difficulty") is not None:
            difficulty = float(meta["difficulty"])

    return TaskBundle(
        task_id=task_id,
        specification=specification,
        put=put,
        suite=_load_suite(task_dir / "tests"),
        canonical=_find_program(task_dir, "canonical"),
        checker=_find_program(task_dir, "checker"),
        difficulty=difficulty,
    )


# -- corpora -----------------------------------------------------------------


@dataclass(frozen=True)
class CorpusManifest:
    """An ordered set of task bundle directories evaluated together."""

    corpus_id: str
    tasks: tuple[Path, ...]
    format_version: int = 1


def load_corpus(corpus_dir: Path) -> CorpusManifest:
    """Read a corpus directory, with or without an explicit manifest.

    With a corpus.json manifest, task entries are paths relative to the
    corpus directory. Without one, every immediate subdirectory holding a
    spec.md counts as a task. Task directories are not deep-validated
    here; evaluation loads each one and records per-task failures.
    """
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise MissingFile(f"corpus directory does not exist: {corpus_dir}")
    manifest_path = corpus_dir / "corpus.json"
    if manifest_path.is_file():
        try:
            data = json.loads(_read_text(manifest_path))
        except json.JSONDecodeError as exc:
            raise IoFailure(f"{manifest_path} is not valid JSON: {exc}") from exc
        tasks = tuple(corpus_dir / t for t in data.get("tasks", []))
        if not tasks:
            raise MissingFile(f"{manifest_path} lists no tasks")
        return CorpusManifest(
            corpus_id=data.get("corpus_id", corpus_dir.name),
            tasks=tasks,
            format_version=int(data.get("format_version", 1)),
        )
    tasks = tuple(
        sorted(p for p in corpus_dir.iterdir() if (p / "spec.md").is_file())
    )
    if not tasks:
        raise MissingFile(f"{corpus_dir}: no corpus.json and no task subdirectories")
    return CorpusManifest(corpus_id=corpus_dir.name, tasks=tasks)


# -- run artifacts -----------------------------------------------------------


@dataclass(frozen=True)
class RunRecord:
    """Everything one pipeline run produced, ready to persist."""

    task_id: str
    config: dict
    variants: tuple[ProgramVariant, ...]
    inputs: tuple[GeneratedInput, ...]
    testcases: tuple[CandidateTestCase, ...]
    generator: SourceProgram | None = None
    verdicts: tuple[EvalVerdict, ...] | None = None
    metrics: MetricsReport | None = None

    def __post_init__(self):
        if self.verdicts is not None and len(self.verdicts) != len(self.testcases):
            raise ValueError("verdicts must align one-to-one with testcases")


def _provenance_to_jsonable(p: Provenance) -> dict:
    return {
        "kind": p.kind,
        "script_ref": p.script_ref,
        "seed": p.seed,
        "transcript_ref": p.transcript_ref,
    }


def _election_to_jsonable(t: ElectionTrace) -> dict:
    return {
        "put_output": t.put_output,
        "variant_outputs": [[vid, out] for vid, out in t.variant_outputs],
        "diff_multiset": list(t.diff_multiset),
        "winner": t.winner,
        "strategy": t.strategy.value,
    }


def metrics_to_jsonable(m: MetricsReport) -> dict:
    return {
        "tp": m.tp,
        "fp": m.fp,
        "fn": m.fn_,
        "tn": m.tn,
        "precision": m.precision,
        "recall": m.recall,
        "f1": m.f1,
    }


def save_run_artifacts(run: RunRecord, out_dir: Path) -> Path:
    """Write one run's artifacts under out_dir; returns the report path.

    Layout: variants/ sources plus index, inputs/ payloads plus index,
    the generator script when one was used, testcases.json with full
    election traces, and report.json.
    """
    out_dir = Path(out_dir)
    try:
        (out_dir / "variants").mkdir(parents=True, exist_ok=True)
        (out_dir / "inputs").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out_dir}: {exc}") from exc

    variant_index = []
    for v in sorted(run.variants, key=lambda v: v.variant_id):
        ext = LANG_TO_EXT.get(v.source.language_tag, ".txt")
        fname = v.variant_id + ext
        _write_text(out_dir / "variants" / fname, v.source.source)
        variant_index.append(
            {
                "variant_id": v.variant_id,
                "language_tag": v.source.language_tag,
                "origin": v.origin.value,
                "llm_transcript_ref": v.llm_transcript_ref,
                "filter_status": v.filter_status.value,
                "source_file": fname,
            }
        )
    _write_text(out_dir / "variants" / "index.json", canon_dumps(variant_index))

    input_index = []
    for gi in sorted(run.inputs, key=lambda gi: gi.input_id):
        fname = gi.input_id + ".in"
        _write_text(out_dir / "inputs" / fname, gi.payload)
        input_index.append(
            {
                "input_id": gi.input_id,
                "payload_file": fname,
                "provenance": _provenance_to_jsonable(gi.provenance),
                "validity": gi.validity.value,
            }
        )
    _write_text(out_dir / "inputs" / "index.json", canon_dumps(input_index))

    if run.generator is not None:
        _write_text(out_dir / "generator.py", run.generator.source)

    cases = sorted(
        zip(run.testcases, run.verdicts or [None] * len(run.testcases)),
        key=lambda pair: pair[0].input.input_id,
    )
    _write_text(
        out_dir / "testcases.json",
        canon_dumps(
            [
                {
                    "input_id": tc.input.input_id,
                    "oracle": tc.oracle,
                    "election": _election_to_jsonable(tc.election),
                }
                for tc, _ in cases
            ]
        ),
    )

    evaluated = run.verdicts is not None
    metrics = run.metrics or MetricsReport.from_counts(0, 0, 0, 0)
    report = {
        "task_id": run.task_id,
        "config": run.config,
        "evaluated": evaluated,
        **metrics_to_jsonable(metrics),
        "testcases": [
            {
                "input_id": tc.input.input_id,
                "payload": tc.input.payload,
                "oracle": tc.oracle,
                "put_output": tc.election.put_output,
                "category": verdict.category.value if verdict else None,
                "pass_fail": verdict.pass_fail.value if verdict else None,
                "reason": verdict.reason if verdict else None,
            }
            for tc, verdict in cases
        ],
    }
    report_path = out_dir / "report.json"
    _write_text(report_path, canon_dumps(report))
    return report_path


def load_run_artifacts(out_dir: Path) -> RunRecord:
    """Reconstruct a RunRecord saved by save_run_artifacts."""
    out_dir = Path(out_dir)
    report = json.loads(_read_text(out_dir / "report.json"))
    variant_index = json.loads(_read_text(out_dir / "variants" / "index.json"))
    input_index = json.loads(_read_text(out_dir / "inputs" / "index.json"))
    case_index = json.loads(_read_text(out_dir / "testcases.json"))

    variants = tuple(
        ProgramVariant(
            variant_id=entry["variant_id"],
            source=SourceProgram(
                language_tag=entry["language_tag"],
                source=_read_text(out_dir / "variants" / entry["source_file"]),
            ),
            origin=Origin(entry["origin"]),
            llm_transcript_ref=entry["llm_transcript_ref"],
            filter_status=FilterStatus(entry["filter_status"]),
        )
        for entry in variant_index
    )
    inputs_by_id = {}
    for entry in input_index:
        prov = entry["provenance"]
        inputs_by_id[entry["input_id"]] = GeneratedInput(
            input_id=entry["input_id"],
            payload=_read_text(out_dir / "inputs" / entry["payload_file"]),
            provenance=Provenance(
                kind=prov["kind"],
                script_ref=prov.get("script_ref"),
                seed=prov.get("seed"),
                transcript_ref=prov.get("transcript_ref"),
            ),
            validity=Validity(entry["validity"]),
        )

    testcases = tuple(
        CandidateTestCase(
            input=inputs_by_id[entry["input_id"]],
            oracle=entry["oracle"],
            election=ElectionTrace(
                put_output=entry["election"]["put_output"],
                variant_outputs=tuple(
                    (vid, out) for vid, out in entry["election"]["variant_outputs"]
                ),
                diff_multiset=tuple(entry["election"]["diff_multiset"]),
                winner=entry["election"]["winner"],
                strategy=Strategy(entry["election"]["strategy"]),
            ),
        )
        for entry in case_index
    )

    verdicts = None
    metrics = None
    if report.get("evaluated"):
        verdicts = tuple(
            EvalVerdict(
                category=Category(entry["category"]),
                pass_fail=PassFail(entry["pass_fail"]),
                reason=entry.get("reason") or "",
            )
            for entry in report["testcases"]
        )
        metrics = MetricsReport.from_counts(
            report["tp"], report["fp"], report["fn"], report["tn"]
        )

    generator = None
    gen_path = out_dir / "generator.py"
    if gen_path.is_file():
        generator = SourceProgram(
            language_tag="generator-script", source=_read_text(gen_path)
        )

    return RunRecord(
        task_id=report["task_id"],
        config=report["config"],
        variants=variants,
        inputs=tuple(inputs_by_id[e["input_id"]] for e in input_index),
        testcases=testcases,
        generator=generator,
        verdicts=verdicts,
        metrics=metrics,
    )
