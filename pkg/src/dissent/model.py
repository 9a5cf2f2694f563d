"""Domain types shared by every stage of the pipeline.

All values are immutable. Output equality anywhere in the tool means
equality of `normalize_output` results, never of raw stdout bytes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

_SPACE_RUN = re.compile(r"[ \t]+")


def normalize_output(text: str) -> str:
    """Canonical form used for all output comparisons.

    Collapses each run of spaces/tabs to a single space, strips trailing
    whitespace from every line, and drops trailing blank lines.
    """
    lines = [_SPACE_RUN.sub(" ", line).rstrip() for line in text.splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    return "\n".join(lines)


class Origin(str, Enum):
    PUT_GUIDED = "put_guided"
    SPEC_ONLY = "spec_only"
    DIRECT_CHAT = "direct_chat"


class FilterStatus(str, Enum):
    UNFILTERED = "unfiltered"
    PASSED_SUITE = "passed_suite"
    FAILED_SUITE = "failed_suite"


class Validity(str, Enum):
    UNKNOWN = "unknown"
    VALID = "valid"
    INVALID = "invalid"


class ExecStatus(str, Enum):
    OK = "ok"
    TIMEOUT = "timeout"
    CRASH = "crash"
    COMPILE_ERROR = "compile_error"


class Strategy(str, Enum):
    DIVERSITY = "diversity"
    MAJORITY = "majority"


class Category(str, Enum):
    """Test case categories relative to the reference semantics.

    Tc: oracle agrees with the reference and the subject program dissents.
    Tr: oracle and subject program both agree with the reference.
    Tw: the oracle itself is wrong.
    Terr: the input is outside the task's input domain.
    """

    TC = "Tc"
    TR = "Tr"
    TW = "Tw"
    TERR = "Terr"


class PassFail(str, Enum):
    PASSED = "passed"
    FAILED = "failed"


@dataclass(frozen=True)
class SourceProgram:
    """A runnable source text. Entry convention is always stdin -> stdout."""

    language_tag: str
    source: str
    entry_convention: str = "stdin-stdout"

    def __post_init__(self):
        if not self.source:
            raise ValueError("SourceProgram.source must be non-empty")


@dataclass(frozen=True)
class SuiteTestCase:
    """One existing test the subject program is known to pass."""

    input: str
    expected_output: str


@dataclass(frozen=True)
class TaskBundle:
    """A programming task plus the program under test and its assets.

    Attributes:
        task_id: stable identifier, defaults to the bundle directory name.
        specification: natural language problem statement.
        put: the program under test.
        suite: the existing tests; non-empty, since plausibility is defined
            relative to a suite the program passes.
        canonical: reference solution, present only in evaluation corpora.
        checker: input validity checker (exit 0 iff the input is valid).
        difficulty: optional metadata, never used in computation.
    """

    task_id: str
    specification: str
    put: SourceProgram
    suite: tuple[SuiteTestCase, ...]
    canonical: SourceProgram | None = None
    checker: SourceProgram | None = None
    difficulty: float | None = None

    def __post_init__(self):
        if not self.task_id:
            raise ValueError("TaskBundle.task_id must be non-empty")
        if not self.suite:
            raise ValueError("TaskBundle.suite must be non-empty")


@dataclass(frozen=True)
class ProgramVariant:
    """One sampled reimplementation (or repair) of the task."""

    variant_id: str
    source: SourceProgram
    origin: Origin
    llm_transcript_ref: str
    filter_status: FilterStatus = FilterStatus.UNFILTERED


@dataclass(frozen=True)
class Provenance:
    """Where a generated input came from; enough to reproduce it exactly."""

    kind: str
    script_ref: str | None = None
    seed: int | None = None
    transcript_ref: str | None = None

    def __post_init__(self):
        if self.kind not in ("generator", "direct_llm"):
            raise ValueError(f"unknown provenance kind: {self.kind!r}")
        if self.kind == "generator" and (self.script_ref is None or self.seed is None):
            raise ValueError("generator provenance needs script_ref and seed")
        if self.kind == "direct_llm" and self.transcript_ref is None:
            raise ValueError("direct_llm provenance needs transcript_ref")

    @staticmethod
    def generator(script_ref: str, seed: int) -> "Provenance":
        return Provenance(kind="generator", script_ref=script_ref, seed=seed)

    @staticmethod
    def direct_llm(transcript_ref: str) -> "Provenance":
        return Provenance(kind="direct_llm", transcript_ref=transcript_ref)


@dataclass(frozen=True)
class GeneratedInput:
    """One candidate test input, fed to programs verbatim."""

    input_id: str
    payload: str
    provenance: Provenance
    validity: Validity = Validity.UNKNOWN


@dataclass(frozen=True)
class ExecutionOutcome:
    """Result of one sandboxed run.

    normalized_output is present only for ok runs. exit_code is the raw
    process return code (negative means killed by that signal); it lets a
    checker's clean rejection be told apart from a checker crash.
    """

    status: ExecStatus
    raw_stdout: str
    normalized_output: str | None
    wall_time_ms: float
    exit_code: int | None = None
    stderr_tail: str = ""


@dataclass(frozen=True)
class ElectionTrace:
    """Everything that went into electing an oracle for one input.

    variant_outputs lists (variant_id, normalized output) for the variants
    that actually voted; crashed or timed-out variants abstain and do not
    appear. diff_multiset is the sorted multiset of outputs that disagree
    with the subject program's output.
    """

    put_output: str
    variant_outputs: tuple[tuple[str, str], ...]
    diff_multiset: tuple[str, ...]
    winner: str
    strategy: Strategy


@dataclass(frozen=True)
class CandidateTestCase:
    """A generated input paired with its elected expected output."""

    input: GeneratedInput
    oracle: str
    election: ElectionTrace


@dataclass(frozen=True)
class EvalVerdict:
    """How one candidate test case scores against the reference solution."""

    category: Category
    pass_fail: PassFail
    reason: str


@dataclass(frozen=True)
class MetricsReport:
    """Confusion counts plus derived ratios, all in [0, 1].

    Zero-denominator ratios are defined as 0.0 so reports stay total.
    """

    tp: int
    fp: int
    fn_: int
    tn: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn_: int, tn: int) -> "MetricsReport":
        for name, value in (("tp", tp), ("fp", fp), ("fn_", fn_), ("tn", tn)):
            if value < 0:
                raise ValueError(f"MetricsReport.{name} must be >= 0")
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn_) if tp + fn_ else 0.0
        if precision + recall:
            f1 = 2 * precision * recall / (precision + recall)
        else:
            f1 = 0.0
        return cls(tp=tp, fp=fp, fn_=fn_, tn=tn, precision=precision, recall=recall, f1=f1)
