"""Exception types for the whole pipeline, grouped into exit-code families.

The CLI maps every raised error to its family's exit code, so scripts can
tell a corpus problem from a backend problem without parsing stderr.
"""

from __future__ import annotations


class DissentError(Exception):
    """Base class; exit_code groups errors by family for the CLI."""

    exit_code = 1


class ConfigError(DissentError):
    """Bad run configuration or malformed config file."""

    exit_code = 2


# -- task bundle / corpus I/O (exit 3) --------------------------------------


class BundleError(DissentError):
    exit_code = 3


class MissingFile(BundleError):
    """A required bundle file or directory is absent."""


class UnpairedTestFile(BundleError):
    """A suite test has an .in without an .out, or the reverse."""


class UnsupportedLanguageTag(BundleError):
    """The bundle declares or implies a language this build cannot run."""


class IoFailure(BundleError):
    """Filesystem trouble while reading a bundle or writing artifacts."""


# -- LLM gateway (exit 4) ----------------------------------------------------


class GatewayError(DissentError):
    exit_code = 4


class MissingBinding(GatewayError):
    """A prompt template placeholder was left without a value."""


class BackendUnavailable(GatewayError):
    """The completion backend cannot serve requests at all."""


class CacheMiss(GatewayError):
    """Replay backend found no cached response for the request key."""


class RateLimited(GatewayError):
    """The live backend kept rate-limiting after all retries."""


# -- generation (exit 5) -----------------------------------------------------


class GenerationError(DissentError):
    exit_code = 5


class EmptyGeneration(GenerationError):
    """No usable program or input came out of a generation round."""


class GeneratorAlwaysFails(GenerationError):
    """The synthesized input generator failed on every seed."""


class NoSurvivingVariants(GenerationError):
    """Differential testing was asked to run with an empty variant list."""


# -- sandbox / toolchain (exit 6) --------------------------------------------


class SandboxError(DissentError):
    exit_code = 6


class CompileFailed(SandboxError):
    """Subject program did not compile (or parse, for scripts)."""

    def __init__(self, message: str, stderr: str = ""):
        super().__init__(message)
        self.stderr = stderr


class ToolchainMissing(SandboxError):
    """No toolchain is configured or installed for the language tag."""


# -- evaluation (exit 7) -----------------------------------------------------


class EvalError(DissentError):
    exit_code = 7


class CanonicalMissing(EvalError):
    """Evaluation needs a canonical solution the bundle does not ship."""


class PoolTooSmall(EvalError):
    """The variant pool has fewer members than the subset size k."""


class CheckerCrashed(EvalError):
    """The validity checker itself timed out or died on an input."""
