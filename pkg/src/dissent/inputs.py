"""Produces candidate test inputs, either through a synthesized generator
script or by asking the model for inputs directly.

The generator route asks for one Python script up front and then drives
it locally with seeds, so a pool of any size costs one completion. The
direct route costs one completion per input and tends to produce more
malformed inputs; it exists as the baseline input mode.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

from .errors import CompileFailed, EmptyGeneration, GeneratorAlwaysFails
from .llm import LlmGateway, PromptRequest, extract_code_block, render_prompt
from .model import (
    ExecStatus,
    GeneratedInput,
    Provenance,
    SourceProgram,
    TaskBundle,
    Validity,
)

GENERATOR_LANG = "generator-script"


def generator_prompt(
    task: TaskBundle,
    temperature: float = 0.8,
    templates_dir=None,
) -> PromptRequest:
    """The single request that asks for a seed-driven generator script."""
    return render_prompt(
        "input_generator",
        {
            "specification": task.specification,
            "helper_examples": _helper_examples(templates_dir),
        },
        temperature=temperature,
        sample_index=0,
        templates_dir=templates_dir,
    )


def _helper_examples(templates_dir) -> str:
    from importlib import resources
    from pathlib import Path

    if templates_dir is not None:
        return (Path(templates_dir) / "generator_examples.txt").read_text("utf-8")
    return (
        resources.files("dissent")
        .joinpath("templates/generator_examples.txt")
        .read_text("utf-8")
    )


def synthesize_generator(
    task: TaskBundle,
    gateway: LlmGateway,
    sandbox,
    temperature: float = 0.8,
    templates_dir=None,
    log=None,
) -> SourceProgram:
    """Ask for a generator script; EmptyGeneration when none can be parsed."""
    req = generator_prompt(task, temperature, templates_dir)
    resp = gateway.complete(req)
    code = extract_code_block(resp.text)
    if not code.strip():
        raise EmptyGeneration("generator response was empty")
    script = SourceProgram(language_tag=GENERATOR_LANG, source=code)
    try:
        sandbox.compile(script)
    except CompileFailed as exc:
        raise EmptyGeneration(
            f"generator response did not contain a parseable script: {exc}"
        ) from exc
    if log:
        log("generator_synthesized", transcript_ref=resp.cache_key)
    return script


def run_generator(
    script: SourceProgram,
    seeds: Sequence[int],
    sandbox,
    log=None,
) -> list[GeneratedInput]:
    """Run the generator once per seed; each run must print one input.

    The payload is the script's stdout byte-for-byte, so the same
    (script, seed) pair always reproduces the same input. Failed seeds
    are skipped; all seeds failing raises GeneratorAlwaysFails.
    """
    if not seeds:
        return []
    artifact = sandbox.compile(script)
    script_ref = artifact.source_hash[:16]
    outcomes = sandbox.run_seeded(artifact, seeds)
    inputs: list[GeneratedInput] = []
    for seed, outcome in zip(seeds, outcomes):
        if outcome.status is not ExecStatus.OK:
            if log:
                log("generator_seed_failed", seed=seed, status=outcome.status.value)
            continue
        inputs.append(
            GeneratedInput(
                input_id=f"g{seed:05d}",
                payload=outcome.raw_stdout,
                provenance=Provenance.generator(script_ref=script_ref, seed=seed),
            )
        )
    if not inputs:
        raise GeneratorAlwaysFails(
            f"generator failed on all {len(seeds)} seeds; see run log"
        )
    return inputs


def generate_direct_inputs(
    task: TaskBundle,
    n: int,
    gateway: LlmGateway,
    temperature: float = 0.8,
    templates_dir=None,
    log=None,
) -> list[GeneratedInput]:
    """Ask the model for n inputs, one completion each.

    Empty responses are dropped; zero usable inputs raises
    EmptyGeneration.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    inputs: list[GeneratedInput] = []
    for i in range(n):
        req = render_prompt(
            "direct_inputs",
            {"specification": task.specification},
            temperature=temperature,
            sample_index=i,
            templates_dir=templates_dir,
        )
        resp = gateway.complete(req)
        payload = extract_code_block(resp.text)
        if not payload.strip():
            if log:
                log("direct_input_empty", sample_index=i)
            continue
        inputs.append(
            GeneratedInput(
                input_id=f"d{i:05d}",
                payload=payload,
                provenance=Provenance.direct_llm(transcript_ref=resp.cache_key),
            )
        )
    if not inputs:
        raise EmptyGeneration(f"all {n} direct input samples were empty")
    return inputs


def check_validity(
    task: TaskBundle,
    gi: GeneratedInput,
    sandbox,
    log=None,
) -> GeneratedInput:
    """Stamp an input valid/invalid using the bundle's checker.

    No checker means validity stays unknown. The checker reads the input
    on stdin and exits 0 iff it is well-formed; a clean nonzero exit is a
    rejection. A checker that times out or dies on a signal cannot rule,
    so the input stays unknown and the event is logged.
    """
    if task.checker is None:
        return gi
    try:
        artifact = sandbox.compile(task.checker)
    except CompileFailed as exc:
        if log:
            log("checker_uncompilable", error=str(exc))
        return gi
    outcome = sandbox.execute(artifact, gi.payload)
    if outcome.status is ExecStatus.OK:
        return dataclasses.replace(gi, validity=Validity.VALID)
    if (
        outcome.status is ExecStatus.CRASH
        and outcome.exit_code is not None
        and outcome.exit_code > 0
    ):
        return dataclasses.replace(gi, validity=Validity.INVALID)
    if log:
        log(
            "checker_crashed",
            input_id=gi.input_id,
            status=outcome.status.value,
            exit_code=outcome.exit_code,
        )
    return gi


def check_validity_all(
    task: TaskBundle,
    inputs: Sequence[GeneratedInput],
    sandbox,
    log=None,
) -> list[GeneratedInput]:
    return [check_validity(task, gi, sandbox, log=log) for gi in inputs]
