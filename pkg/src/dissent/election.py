"""Oracle election by differential testing over a variant ensemble.

Two election rules are implemented. The diversity rule collects only the
outputs that disagree with the subject program and elects the most
frequent of those, so even a lone honest dissenter can out-vote an
inherited bug. The majority rule elects the most frequent output over
all programs including the subject, and emits nothing when the subject
itself wins. Ties break toward the lexicographically smallest output in
both rules.
"""

from __future__ import annotations

from collections import Counter
from typing import Callable, Sequence

from .errors import NoSurvivingVariants
from .model import (
    CandidateTestCase,
    ElectionTrace,
    ExecStatus,
    GeneratedInput,
    ProgramVariant,
    Strategy,
    TaskBundle,
)

VariantVotes = Sequence[tuple[str, str]]


def _most_frequent(ballots: Sequence[str]) -> str:
    counts = Counter(ballots)
    return min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def diversity_diff(put_output: str, variant_outputs: VariantVotes) -> ElectionTrace | None:
    """Elect from the multiset of outputs that disagree with the subject.

    Returns None when every voter agrees with the subject program, which
    discards the input.
    """
    diff = sorted(out for _, out in variant_outputs if out != put_output)
    if not diff:
        return None
    return ElectionTrace(
        put_output=put_output,
        variant_outputs=tuple(variant_outputs),
        diff_multiset=tuple(diff),
        winner=_most_frequent(diff),
        strategy=Strategy.DIVERSITY,
    )


def majority_diff(put_output: str, variant_outputs: VariantVotes) -> ElectionTrace | None:
    """Plain majority vote over all programs, subject included.

    Returns None when the subject's own output wins the vote.
    """
    ballots = [put_output] + [out for _, out in variant_outputs]
    winner = _most_frequent(ballots)
    if winner == put_output:
        return None
    diff = sorted(out for _, out in variant_outputs if out != put_output)
    return ElectionTrace(
        put_output=put_output,
        variant_outputs=tuple(variant_outputs),
        diff_multiset=tuple(diff),
        winner=winner,
        strategy=Strategy.MAJORITY,
    )


def elect_for_strategy(strategy: Strategy) -> Callable[[str, VariantVotes], ElectionTrace | None]:
    return diversity_diff if strategy is Strategy.DIVERSITY else majority_diff


def elect_candidates(
    inputs: Sequence[GeneratedInput],
    put_outputs: Sequence[str | None],
    variant_outputs: dict[str, Sequence[str | None]],
    voter_ids: Sequence[str],
    strategy: Strategy,
) -> list[CandidateTestCase]:
    """Pure election sweep over precomputed outputs.

    put_outputs and each variant_outputs column align with inputs by
    position; None marks a run that was not ok. Inputs whose subject run
    failed are discarded, failed variant runs abstain, and inputs with no
    winning election are discarded. At most one candidate per input.
    """
    elect = elect_for_strategy(strategy)
    candidates = []
    for pos, gi in enumerate(inputs):
        put_out = put_outputs[pos]
        if put_out is None:
            continue
        votes = []
        for vid in voter_ids:
            out = variant_outputs[vid][pos]
            if out is not None:
                votes.append((vid, out))
        trace = elect(put_out, votes)
        if trace is not None:
            candidates.append(CandidateTestCase(input=gi, oracle=trace.winner, election=trace))
    return candidates


def run_differential(
    task: TaskBundle,
    variants: Sequence[ProgramVariant],
    inputs: Sequence[GeneratedInput],
    strategy: Strategy,
    sandbox,
    log=None,
) -> list[CandidateTestCase]:
    """Execute the subject and every variant on every input, then elect.

    Results come back ordered by input_id. Variants that fail to compile
    here abstain on every input rather than sinking the whole run.
    """
    if not variants:
        raise NoSurvivingVariants("differential testing needs at least one variant")
    ordered = sorted(inputs, key=lambda gi: gi.input_id)
    payloads = [gi.payload for gi in ordered]

    put_artifact = sandbox.compile(task.put)
    put_outputs = [
        oc.normalized_output if oc.status is ExecStatus.OK else None
        for oc in sandbox.run_many(put_artifact, payloads)
    ]
    discarded = sum(1 for out in put_outputs if out is None)
    if log and discarded:
        log("put_runs_discarded", task_id=task.task_id, count=discarded)

    columns: dict[str, list[str | None]] = {}
    voter_ids = []
    for variant in variants:
        try:
            artifact = sandbox.compile(variant.source)
        except Exception as exc:
            if log:
                log("variant_uncompilable", variant_id=variant.variant_id, error=str(exc))
            columns[variant.variant_id] = [None] * len(ordered)
            voter_ids.append(variant.variant_id)
            continue
        outcomes = sandbox.run_many(artifact, payloads)
        columns[variant.variant_id] = [
            oc.normalized_output if oc.status is ExecStatus.OK else None for oc in outcomes
        ]
        voter_ids.append(variant.variant_id)

    candidates = elect_candidates(ordered, put_outputs, columns, voter_ids, strategy)
    if log:
        log(
            "differential_done",
            task_id=task.task_id,
            strategy=strategy.value,
            inputs=len(ordered),
            candidates=len(candidates),
        )
    return candidates
