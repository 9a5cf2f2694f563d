"""Evaluation: scoring candidate test cases against a reference solution.

The repetition protocol re-runs the election many times over subsets of
a variant pool. Executions are the expensive part and depend only on
(program, input), so each program runs once per input into a TaskMatrix;
every round after that is pure arithmetic over the matrix.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Sequence

from .config import RunConfig
from .election import elect_candidates
from .errors import CanonicalMissing, PoolTooSmall
from .inputs import check_validity, check_validity_all, generate_direct_inputs, run_generator, synthesize_generator
from .model import (
    CandidateTestCase,
    Category,
    EvalVerdict,
    ExecStatus,
    GeneratedInput,
    MetricsReport,
    PassFail,
    ProgramVariant,
    SourceProgram,
    Strategy,
    TaskBundle,
    Validity,
)
from .variants import filter_by_suite, generate_variants

ABLATION_PATTERNS: tuple[tuple[int, str, str, str], ...] = (
    (1, "basic", "basic", "basic"),
    (2, "filtered", "basic", "basic"),
    (3, "filtered", "basic", "ours"),
    (4, "ours", "basic", "ours"),
    (5, "filtered", "ours", "ours"),
    (6, "ours", "ours", "ours"),
)


def strategy_for(dt_mode: str) -> Strategy:
    return Strategy.DIVERSITY if dt_mode == "ours" else Strategy.MAJORITY


# -- classification ----------------------------------------------------------


def categorize(
    validity: Validity,
    canonical_output: str | None,
    oracle: str,
    put_output: str,
) -> EvalVerdict:
    """Pure category decision; total over all combinations of facts.

    Precedence: an invalid input is Terr no matter what the outputs say;
    a canonical failure also lands in Terr because the reference output
    is undefined there. After that the oracle is checked against the
    reference, then the subject program against the oracle.
    """
    pass_fail = PassFail.FAILED if put_output != oracle else PassFail.PASSED
    if validity is Validity.INVALID:
        return EvalVerdict(Category.TERR, pass_fail, "checker rejected the input")
    if canonical_output is None:
        return EvalVerdict(
            Category.TERR,
            pass_fail,
            "canonical solution failed on this input; reference output undefined",
        )
    if oracle != canonical_output:
        return EvalVerdict(Category.TW, pass_fail, "oracle disagrees with canonical output")
    if put_output != oracle:
        return EvalVerdict(
            Category.TC, pass_fail, "oracle matches canonical; subject program dissents"
        )
    return EvalVerdict(
        Category.TR, pass_fail, "subject program and oracle both match canonical"
    )


def classify(task: TaskBundle, testcase: CandidateTestCase, sandbox) -> EvalVerdict:
    """Score one candidate by executing the canonical solution (and the
    checker, when the input's validity is still unknown)."""
    if task.canonical is None:
        raise CanonicalMissing(f"task {task.task_id} ships no canonical solution")
    gi = testcase.input
    if gi.validity is Validity.UNKNOWN and task.checker is not None:
        gi = check_validity(task, gi, sandbox)
    outcome = sandbox.execute(sandbox.compile(task.canonical), gi.payload)
    canonical_output = (
        outcome.normalized_output if outcome.status is ExecStatus.OK else None
    )
    return categorize(gi.validity, canonical_output, testcase.oracle, testcase.election.put_output)


def compute_metrics(verdicts: Sequence[EvalVerdict], put_is_buggy: bool = True) -> MetricsReport:
    """Confusion counts over verdicts.

    A failed Tc is a true positive; a failed Tw or Terr is a false
    positive. Every passed case is a negative: all false negatives when
    the subject program is buggy, all true negatives when it is correct.
    """
    tp = sum(
        1
        for v in verdicts
        if v.pass_fail is PassFail.FAILED and v.category is Category.TC
    )
    fp = sum(
        1
        for v in verdicts
        if v.pass_fail is PassFail.FAILED and v.category in (Category.TW, Category.TERR)
    )
    negatives = sum(1 for v in verdicts if v.pass_fail is PassFail.PASSED)
    if put_is_buggy:
        return MetricsReport.from_counts(tp=tp, fp=fp, fn_=negatives, tn=0)
    return MetricsReport.from_counts(tp=tp, fp=fp, fn_=0, tn=negatives)


# -- the execution matrix ----------------------------------------------------


@dataclass(frozen=True)
class TaskMatrix:
    """Outputs of every program on every input, computed once.

    Columns align with inputs by position; None marks a non-ok run.
    canonical_outputs is None only when built without a reference.
    """

    inputs: tuple[GeneratedInput, ...]
    put_outputs: tuple[str | None, ...]
    variant_outputs: dict[str, tuple[str | None, ...]]
    canonical_outputs: tuple[str | None, ...] | None


def build_task_matrix(
    task: TaskBundle,
    variants: Sequence[ProgramVariant],
    inputs: Sequence[GeneratedInput],
    sandbox,
    require_canonical: bool = True,
    log=None,
) -> TaskMatrix:
    """Execute subject, variants, and canonical over the whole input pool."""
    if require_canonical and task.canonical is None:
        raise CanonicalMissing(f"task {task.task_id} ships no canonical solution")
    ordered = tuple(sorted(inputs, key=lambda gi: gi.input_id))
    payloads = [gi.payload for gi in ordered]

    def column(program) -> tuple[str | None, ...]:
        artifact = sandbox.compile(program)
        return tuple(
            oc.normalized_output if oc.status is ExecStatus.OK else None
            for oc in sandbox.run_many(artifact, payloads)
        )

    variant_outputs = {}
    for v in variants:
        variant_outputs[v.variant_id] = column(v.source)
    matrix = TaskMatrix(
        inputs=ordered,
        put_outputs=column(task.put),
        variant_outputs=variant_outputs,
        canonical_outputs=column(task.canonical) if task.canonical else None,
    )
    if log:
        log(
            "matrix_built",
            task_id=task.task_id,
            inputs=len(ordered),
            variants=len(variants),
        )
    return matrix


def matrix_verdicts(
    matrix: TaskMatrix, candidates: Sequence[CandidateTestCase]
) -> list[EvalVerdict]:
    """Classify candidates from matrix facts alone; no process launches."""
    if matrix.canonical_outputs is None:
        raise CanonicalMissing("matrix was built without a canonical column")
    pos_by_id = {gi.input_id: i for i, gi in enumerate(matrix.inputs)}
    verdicts = []
    for tc in candidates:
        pos = pos_by_id[tc.input.input_id]
        verdicts.append(
            categorize(
                matrix.inputs[pos].validity,
                matrix.canonical_outputs[pos],
                tc.oracle,
                tc.election.put_output,
            )
        )
    return verdicts


# -- repetition protocol -----------------------------------------------------


def _draw_subset(rng: random.Random, n: int, k: int) -> tuple[int, ...]:
    # partial Fisher-Yates so subset draws don't depend on random.sample
    # implementation details
    idx = list(range(n))
    for i in range(k):
        j = rng.randrange(i, n)
        idx[i], idx[j] = idx[j], idx[i]
    return tuple(sorted(idx[:k]))


def enumerate_subsets(
    pool_ids: Sequence[str], k: int, max_rounds: int, seed: int
) -> list[tuple[str, ...]]:
    """All k-subsets of the pool when that count fits in max_rounds,
    otherwise max_rounds distinct subsets drawn uniformly with the seed."""
    n = len(pool_ids)
    if n < k:
        raise PoolTooSmall(f"pool has {n} variants, need at least k={k}")
    total = math.comb(n, k)
    if total <= max_rounds:
        return [tuple(combo) for combo in itertools.combinations(pool_ids, k)]
    rng = random.Random(seed)
    seen: set[tuple[int, ...]] = set()
    subsets: list[tuple[str, ...]] = []
    while len(subsets) < max_rounds:
        drawn = _draw_subset(rng, n, k)
        if drawn in seen:
            continue
        seen.add(drawn)
        subsets.append(tuple(pool_ids[i] for i in drawn))
    return subsets


@dataclass(frozen=True)
class RoundResult:
    """One subset's election sweep, scored."""

    round_index: int
    variant_ids: tuple[str, ...]
    n_candidates: int
    categories: dict[str, int]
    metrics: MetricsReport


@dataclass(frozen=True)
class AggregateMeans:
    """Arithmetic means over rounds; ratios are means of per-round ratios."""

    tp: float
    fp: float
    fn_: float
    tn: float
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class AggregateReport:
    """The repetition protocol's full result for one task."""

    task_id: str
    config: RunConfig
    pool_variant_ids: tuple[str, ...]
    n_inputs: int
    n_rounds: int
    rounds: tuple[RoundResult, ...]
    means: AggregateMeans
    mean_categories: dict[str, float]
    flags: dict


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def repetition_protocol(
    task: TaskBundle,
    config: RunConfig,
    variants: Sequence[ProgramVariant],
    inputs: Sequence[GeneratedInput],
    sandbox,
    matrix: TaskMatrix | None = None,
    put_is_buggy: bool = True,
    log=None,
) -> AggregateReport:
    """Score many election rounds over subsets of an already materialized
    variant pool.

    Each round elects over the full input pool with one k-subset, counts
    TP/FP/negatives, and computes that round's precision/recall/f1.
    Reported means average those per-round figures; they are not ratios
    of mean counts. A prebuilt matrix may carry extra variant columns
    (ablation reuses one matrix across patterns); only pool members vote.
    """
    pool_ids = [v.variant_id for v in variants]
    if len(pool_ids) < config.k:
        raise PoolTooSmall(
            f"task {task.task_id}: pool has {len(pool_ids)} variants, need k={config.k}"
        )
    if matrix is None:
        matrix = build_task_matrix(task, variants, inputs, sandbox, log=log)
    missing = [vid for vid in pool_ids if vid not in matrix.variant_outputs]
    if missing:
        raise ValueError(f"matrix lacks columns for pool variants: {missing}")

    strategy = strategy_for(config.dt_mode)
    subsets = enumerate_subsets(pool_ids, config.k, config.max_rounds, config.seed)
    rounds = []
    for round_index, subset in enumerate(subsets):
        candidates = elect_candidates(
            matrix.inputs, matrix.put_outputs, matrix.variant_outputs, subset, strategy
        )
        verdicts = matrix_verdicts(matrix, candidates)
        counts = {c.value: 0 for c in Category}
        for v in verdicts:
            counts[v.category.value] += 1
        rounds.append(
            RoundResult(
                round_index=round_index,
                variant_ids=subset,
                n_candidates=len(candidates),
                categories=counts,
                metrics=compute_metrics(verdicts, put_is_buggy=put_is_buggy),
            )
        )
        if log and (round_index + 1) % 50 == 0:
            log("rounds_progress", task_id=task.task_id, done=round_index + 1)

    means = AggregateMeans(
        tp=_mean([r.metrics.tp for r in rounds]),
        fp=_mean([r.metrics.fp for r in rounds]),
        fn_=_mean([r.metrics.fn_ for r in rounds]),
        tn=_mean([r.metrics.tn for r in rounds]),
        precision=_mean([r.metrics.precision for r in rounds]),
        recall=_mean([r.metrics.recall for r in rounds]),
        f1=_mean([r.metrics.f1 for r in rounds]),
    )
    mean_categories = {
        c.value: _mean([r.categories[c.value] for r in rounds]) for c in Category
    }
    return AggregateReport(
        task_id=task.task_id,
        config=config,
        pool_variant_ids=tuple(pool_ids),
        n_inputs=len(matrix.inputs),
        n_rounds=len(rounds),
        rounds=tuple(rounds),
        means=means,
        mean_categories=mean_categories,
        flags={
            "validity_mode": "checker" if task.checker is not None else "unknown-folded",
            "put_assumed_buggy": put_is_buggy,
        },
    )


# -- pool materialization ----------------------------------------------------


@dataclass(frozen=True)
class VariantPools:
    """One source mode's raw samples and its suite-filtered survivors."""

    raw: tuple[ProgramVariant, ...]
    filtered: tuple[ProgramVariant, ...]


def materialize_variant_pool(
    task: TaskBundle,
    source_mode: str,
    pool_size: int,
    gateway,
    sandbox,
    temperature: float = 0.8,
    templates_dir=None,
    log=None,
) -> VariantPools:
    raw = generate_variants(
        task,
        pool_size,
        source_mode,
        gateway,
        sandbox,
        temperature=temperature,
        templates_dir=templates_dir,
        log=log,
    )
    filtered = filter_by_suite(task, raw, sandbox, log=log)
    return VariantPools(raw=tuple(raw), filtered=tuple(filtered))


@dataclass(frozen=True)
class InputPool:
    """A validity-stamped input pool plus the generator that made it."""

    inputs: tuple[GeneratedInput, ...]
    generator: SourceProgram | None


def materialize_input_pool(
    task: TaskBundle,
    ig_mode: str,
    pool_size: int,
    gateway,
    sandbox,
    temperature: float = 0.8,
    templates_dir=None,
    log=None,
) -> InputPool:
    """Build the input pool for one mode; generator seeds are 1..pool_size."""
    if ig_mode == "ours":
        script = synthesize_generator(
            task,
            gateway,
            sandbox,
            temperature=temperature,
            templates_dir=templates_dir,
            log=log,
        )
        raw = run_generator(script, range(1, pool_size + 1), sandbox, log=log)
    else:
        script = None
        raw = generate_direct_inputs(
            task,
            pool_size,
            gateway,
            temperature=temperature,
            templates_dir=templates_dir,
            log=log,
        )
    stamped = check_validity_all(task, raw, sandbox, log=log)
    return InputPool(inputs=tuple(stamped), generator=script)


def pool_for_pg_mode(pg_mode: str, spec_pools: VariantPools | None, put_pools: VariantPools | None):
    """Which variant pool a combination pattern's PG mode votes with."""
    if pg_mode == "basic":
        return spec_pools.raw
    if pg_mode == "filtered":
        return spec_pools.filtered
    return put_pools.filtered


# -- ablation ----------------------------------------------------------------


@dataclass(frozen=True)
class AblationRow:
    """One (pattern, k) cell of the combination study."""

    pattern: int
    pg_mode: str
    ig_mode: str
    dt_mode: str
    k: int
    aggregate: AggregateReport


def ablation_matrix(
    task: TaskBundle,
    base_config: RunConfig,
    gateway,
    sandbox,
    ks: Sequence[int] | None = None,
    put_is_buggy: bool = True,
    temperature: float = 0.8,
    templates_dir=None,
    log=None,
) -> list[AblationRow]:
    """Run all six stage combinations, in order, for each requested k.

    Pools are materialized once and shared: both PG source pools, both
    input pools, and one execution matrix per (source pool, input pool)
    pair. The final pattern is exactly the plain pipeline configuration,
    so its row reproduces a straight evaluation bit for bit under the
    same seed and caches.
    """
    ks = list(ks) if ks else [base_config.k]
    for k in ks:
        if k < 1 or k > base_config.variant_pool:
            raise PoolTooSmall(
                f"requested k={k} outside 1..variant_pool={base_config.variant_pool}"
            )

    spec_pools = materialize_variant_pool(
        task, "spec_only", base_config.variant_pool, gateway, sandbox,
        temperature=temperature, templates_dir=templates_dir, log=log,
    )
    put_pools = materialize_variant_pool(
        task, "put_guided", base_config.variant_pool, gateway, sandbox,
        temperature=temperature, templates_dir=templates_dir, log=log,
    )
    input_pools = {
        "basic": materialize_input_pool(
            task, "basic", base_config.input_pool, gateway, sandbox,
            temperature=temperature, templates_dir=templates_dir, log=log,
        ),
        "ours": materialize_input_pool(
            task, "ours", base_config.input_pool, gateway, sandbox,
            temperature=temperature, templates_dir=templates_dir, log=log,
        ),
    }

    source_for = {"basic": "spec", "filtered": "spec", "ours": "put"}
    raw_for = {"spec": spec_pools.raw, "put": put_pools.raw}
    matrices: dict[tuple[str, str], TaskMatrix] = {}

    rows: list[AblationRow] = []
    for pattern, pg, ig, dt in ABLATION_PATTERNS:
        matrix_key = (source_for[pg], ig)
        if matrix_key not in matrices:
            matrices[matrix_key] = build_task_matrix(
                task, raw_for[matrix_key[0]], input_pools[ig].inputs, sandbox, log=log
            )
        pool = pool_for_pg_mode(pg, spec_pools, put_pools)
        for k in ks:
            config = base_config.replace(pg_mode=pg, ig_mode=ig, dt_mode=dt, k=k)
            aggregate = repetition_protocol(
                task,
                config,
                pool,
                input_pools[ig].inputs,
                sandbox,
                matrix=matrices[matrix_key],
                put_is_buggy=put_is_buggy,
                log=log,
            )
            rows.append(
                AblationRow(
                    pattern=pattern, pg_mode=pg, ig_mode=ig, dt_mode=dt, k=k,
                    aggregate=aggregate,
                )
            )
            if log:
                log("ablation_row_done", task_id=task.task_id, pattern=pattern, k=k)
    return rows
