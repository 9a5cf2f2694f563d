from __future__ import annotations

import json
from pathlib import Path

import pytest

from dissent.bundles import load_task_bundle
from dissent.llm import LlmGateway, MockBackend
from dissent.model import (
    GeneratedInput,
    Provenance,
    SourceProgram,
    SuiteTestCase,
    TaskBundle,
    Validity,
)
from dissent.sandbox import Sandbox

REPO = Path(__file__).resolve().parents[1]
DEMO_DIR = REPO / "demo"
DEMO_TASK_DIR = DEMO_DIR / "abc042a"
DEMO_CACHE_DIR = DEMO_DIR / "cache"


@pytest.fixture(scope="session")
def demo_task() -> TaskBundle:
    return load_task_bundle(DEMO_TASK_DIR)


@pytest.fixture(scope="session")
def sbx():
    # one sandbox for the whole session so compile caching pays off
    with Sandbox(jobs=4) as sandbox:
        yield sandbox


def table_program(table: dict[str, str]) -> SourceProgram:
    """A program that answers stdin lookups from a fixed table."""
    source = (
        f"TABLE = {json.dumps(table)}\n"
        "import sys\n"
        "key = sys.stdin.read().strip()\n"
        "print(TABLE.get(key, 'MISS'))\n"
    )
    return SourceProgram(language_tag="python3", source=source)


def table_task(table: dict[str, str], task_id: str = "tiny") -> TaskBundle:
    return TaskBundle(
        task_id=task_id,
        specification="Echo the table entry for the key on stdin.",
        put=table_program(table),
        suite=tuple(
            SuiteTestCase(input=k + "\n", expected_output=v + "\n")
            for k, v in sorted(table.items())
        ),
    )


def constant_program(text: str) -> SourceProgram:
    return SourceProgram(language_tag="python3", source=f"print({text!r})\n")


def scripted_gateway(by_sample: dict[tuple[str, int], str]) -> LlmGateway:
    """Mock gateway answering by (template_id, sample_index)."""

    def script(req):
        return by_sample[(req.template_id, req.sample_index)]

    return LlmGateway(MockBackend(script))


def make_input(input_id: str, payload: str, validity: Validity = Validity.UNKNOWN) -> GeneratedInput:
    return GeneratedInput(
        input_id=input_id,
        payload=payload,
        provenance=Provenance.generator(script_ref="fixture", seed=0),
        validity=validity,
    )
