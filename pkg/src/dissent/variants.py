"""Samples program variants from the model and filters them by the suite.

Two generation modes exist. put_guided shows the model both the task
statement and the subject program and asks for a repaired version, so a
sample can inherit the subject's bug. spec_only shows the statement
alone. Either way a sample only joins the pool if its code parses or
compiles; prose-only replies are dropped on the spot.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

from .errors import CompileFailed, EmptyGeneration
from .llm import LlmGateway, PromptRequest, extract_code_block, render_prompt
from .model import (
    ExecStatus,
    FilterStatus,
    Origin,
    ProgramVariant,
    SourceProgram,
    TaskBundle,
    normalize_output,
)

NO_BUGS_MARKER = "NO_BUGS_FOUND"

_MODE_TO_TEMPLATE = {
    "put_guided": "variant_put_guided",
    "spec_only": "variant_spec_only",
}
_MODE_TO_ORIGIN = {
    "put_guided": Origin.PUT_GUIDED,
    "spec_only": Origin.SPEC_ONLY,
}
_MODE_TO_PREFIX = {"put_guided": "pv", "spec_only": "sv"}


def variant_prompt(
    task: TaskBundle,
    mode: str,
    sample_index: int,
    temperature: float = 0.8,
    templates_dir=None,
) -> PromptRequest:
    """Build the exact request one variant sample sends to the backend."""
    template_id = _MODE_TO_TEMPLATE[mode]
    bindings = {"specification": task.specification}
    if mode == "put_guided":
        bindings["put_source"] = task.put.source
    return render_prompt(
        template_id,
        bindings,
        temperature=temperature,
        sample_index=sample_index,
        templates_dir=templates_dir,
    )


def generate_variants(
    task: TaskBundle,
    k: int,
    mode: str,
    gateway: LlmGateway,
    sandbox,
    temperature: float = 0.8,
    templates_dir=None,
    log=None,
) -> list[ProgramVariant]:
    """Sample k variants; returns at most k, raises EmptyGeneration on zero.

    A put_guided reply of NO_BUGS_FOUND means the model saw nothing to
    fix; it becomes the subject program itself as a no-op repair, which
    passes filtering trivially and abstains from every diff.
    """
    if mode not in _MODE_TO_TEMPLATE:
        raise ValueError(f"unknown variant mode {mode!r}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")

    prefix = _MODE_TO_PREFIX[mode]
    origin = _MODE_TO_ORIGIN[mode]
    variants: list[ProgramVariant] = []
    for i in range(k):
        req = variant_prompt(task, mode, i, temperature, templates_dir)
        resp = gateway.complete(req)
        variant_id = f"{prefix}{i:03d}"

        if mode == "put_guided" and NO_BUGS_MARKER in resp.text:
            if log:
                log("variant_noop_repair", variant_id=variant_id, sample_index=i)
            variants.append(
                ProgramVariant(
                    variant_id=variant_id,
                    source=task.put,
                    origin=origin,
                    llm_transcript_ref=resp.cache_key,
                )
            )
            continue

        code = extract_code_block(resp.text)
        if not code.strip():
            if log:
                log("variant_dropped_empty", sample_index=i, mode=mode)
            continue
        program = SourceProgram(language_tag=task.put.language_tag, source=code)
        try:
            sandbox.compile(program)
        except CompileFailed as exc:
            if log:
                log(
                    "variant_dropped_uncompilable",
                    sample_index=i,
                    mode=mode,
                    error=str(exc),
                )
            continue
        variants.append(
            ProgramVariant(
                variant_id=variant_id,
                source=program,
                origin=origin,
                llm_transcript_ref=resp.cache_key,
            )
        )

    if not variants:
        raise EmptyGeneration(
            f"all {k} {mode} samples were unusable (no compilable code extracted)"
        )
    if log:
        log("variants_generated", mode=mode, requested=k, usable=len(variants))
    return variants


def filter_by_suite(
    task: TaskBundle,
    variants: Sequence[ProgramVariant],
    sandbox,
    log=None,
) -> list[ProgramVariant]:
    """Keep only variants that pass every existing suite test.

    Order-preserving and idempotent; survivors come back marked
    passed_suite. A variant that crashes, times out, or mismatches any
    expected output (after normalization) is excluded.
    """
    survivors: list[ProgramVariant] = []
    for variant in variants:
        try:
            artifact = sandbox.compile(variant.source)
        except CompileFailed:
            if log:
                log("filter_excluded", variant_id=variant.variant_id, why="uncompilable")
            continue
        outcomes = sandbox.run_many(artifact, [t.input for t in task.suite])
        passed = all(
            oc.status is ExecStatus.OK
            and oc.normalized_output == normalize_output(t.expected_output)
            for oc, t in zip(outcomes, task.suite)
        )
        if passed:
            survivors.append(
                dataclasses.replace(variant, filter_status=FilterStatus.PASSED_SUITE)
            )
        elif log:
            log("filter_excluded", variant_id=variant.variant_id, why="failed_suite")
    if log:
        log("filter_done", kept=len(survivors), dropped=len(variants) - len(survivors))
    return survivors
