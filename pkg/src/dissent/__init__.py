"""Bug-revealing test case generation for plausible programs.

A plausible program passes its existing test suite yet can still be
wrong. This package samples alternative implementations of the same
task, synthesizes input generators, and elects expected outputs from
the ensemble's dissenting votes, turning disagreement into concrete
failing test cases. An evaluation bench scores the generated cases
against reference solutions.
"""

from .bench import (
    ABLATION_PATTERNS,
    AblationRow,
    AggregateReport,
    ablation_matrix,
    classify,
    compute_metrics,
    repetition_protocol,
)
from .bundles import (
    CorpusManifest,
    RunRecord,
    load_corpus,
    load_run_artifacts,
    load_task_bundle,
    save_run_artifacts,
)
from .config import RunConfig, Settings
from .election import diversity_diff, majority_diff, run_differential
from .errors import DissentError
from .inputs import (
    check_validity,
    generate_direct_inputs,
    run_generator,
    synthesize_generator,
)
from .llm import (
    LlmGateway,
    LlmResponse,
    MockBackend,
    PromptRequest,
    ReplayBackend,
    ResponseCache,
    extract_code_block,
    render_prompt,
)
from .model import (
    CandidateTestCase,
    Category,
    ElectionTrace,
    EvalVerdict,
    ExecutionOutcome,
    GeneratedInput,
    MetricsReport,
    ProgramVariant,
    SourceProgram,
    SuiteTestCase,
    TaskBundle,
    normalize_output,
)
from .sandbox import ExecLimits, Sandbox
from .variants import filter_by_suite, generate_variants

__version__ = "0.1.0"

__all__ = [
    "ABLATION_PATTERNS",
    "AblationRow",
    "AggregateReport",
    "CandidateTestCase",
    "Category",
    "CorpusManifest",
    "DissentError",
    "ElectionTrace",
    "EvalVerdict",
    "ExecLimits",
    "ExecutionOutcome",
    "GeneratedInput",
    "LlmGateway",
    "LlmResponse",
    "MetricsReport",
    "MockBackend",
    "ProgramVariant",
    "PromptRequest",
    "ReplayBackend",
    "ResponseCache",
    "RunConfig",
    "RunRecord",
    "Sandbox",
    "Settings",
    "SourceProgram",
    "SuiteTestCase",
    "TaskBundle",
    "ablation_matrix",
    "check_validity",
    "classify",
    "compute_metrics",
    "diversity_diff",
    "extract_code_block",
    "filter_by_suite",
    "generate_direct_inputs",
    "generate_variants",
    "load_corpus",
    "load_run_artifacts",
    "load_task_bundle",
    "majority_diff",
    "normalize_output",
    "render_prompt",
    "repetition_protocol",
    "run_differential",
    "run_generator",
    "save_run_artifacts",
    "synthesize_generator",
]
