"""Compiles and runs subject programs as separate processes under limits.

Isolation here is best effort, not a security boundary: every run gets a
fresh working directory, rlimits on cpu/memory/file size, no shell, and a
process group kill on timeout. The pipeline executes model-authored code,
so run the whole tool inside a container when the corpus is untrusted.
"""

from __future__ import annotations

import hashlib
import os
import resource
import shutil
import signal
import subprocess
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CompileFailed, ToolchainMissing
from .model import ExecStatus, ExecutionOutcome, SourceProgram, normalize_output

_STDERR_TAIL_BYTES = 4096


@dataclass(frozen=True)
class ExecLimits:
    """Resource limits applied to every sandboxed process."""

    cpu_ms: int = 5000
    wall_ms: int = 5000
    mem_bytes: int = 256 * 2**20
    max_output_bytes: int = 8 * 2**20


DEFAULT_LIMITS = ExecLimits()


@dataclass(frozen=True)
class Toolchain:
    """Command templates for one language. {src} and {bin} get substituted."""

    run_argv: tuple[str, ...]
    compile_argv: tuple[str, ...] | None = None
    source_suffix: str = ".txt"


def default_toolchains() -> dict[str, Toolchain]:
    python = Toolchain(run_argv=(sys.executable, "{src}"), source_suffix=".py")
    return {
        "python3": python,
        "generator-script": python,
        "cpp": Toolchain(
            run_argv=("{bin}",),
            compile_argv=("g++", "-O2", "-std=c++17", "-o", "{bin}", "{src}"),
            source_suffix=".cpp",
        ),
    }


@dataclass(frozen=True)
class CompiledArtifact:
    """A program ready to execute. run_argv is fully substituted."""

    language_tag: str
    run_argv: tuple[str, ...]
    source_hash: str
    compile_stderr: str = ""


def _substitute(argv: Iterable[str], src: str, binary: str) -> tuple[str, ...]:
    return tuple(a.replace("{src}", src).replace("{bin}", binary) for a in argv)


class Sandbox:
    """Owns a scratch tree, a compile cache, and a worker pool.

    Deterministic subjects produce identical normalized outputs across
    runs; nothing here injects randomness. Use as a context manager so
    the scratch tree is removed on exit.
    """

    def __init__(
        self,
        limits: ExecLimits = DEFAULT_LIMITS,
        jobs: int = 1,
        toolchains: dict[str, Toolchain] | None = None,
        root: Path | None = None,
    ):
        self.limits = limits
        self.jobs = max(1, jobs)
        self.toolchains = dict(toolchains or default_toolchains())
        self._owned_tmp: tempfile.TemporaryDirectory | None = None
        if root is None:
            self._owned_tmp = tempfile.TemporaryDirectory(prefix="dissent-sbx-")
            self.root = Path(self._owned_tmp.name)
        else:
            self.root = Path(root)
            self.root.mkdir(parents=True, exist_ok=True)
        self._compile_cache: dict[str, CompiledArtifact] = {}
        self._run_counter = 0

    def __enter__(self) -> "Sandbox":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        if self._owned_tmp is not None:
            self._owned_tmp.cleanup()
            self._owned_tmp = None

    # -- compilation ---------------------------------------------------------

    def compile(self, program: SourceProgram) -> CompiledArtifact:
        """Compile (or syntax-check) a program, caching by source hash."""
        tool = self.toolchains.get(program.language_tag)
        if tool is None:
            raise ToolchainMissing(f"no toolchain for language tag {program.language_tag!r}")
        digest = hashlib.sha256(
            (program.language_tag + "\x00" + program.source).encode("utf-8")
        ).hexdigest()
        cached = self._compile_cache.get(digest)
        if cached is not None:
            return cached

        build_dir = self.root / "build" / digest[:16]
        build_dir.mkdir(parents=True, exist_ok=True)
        src_path = build_dir / ("program" + tool.source_suffix)
        src_path.write_text(program.source, encoding="utf-8")
        bin_path = build_dir / "program.bin"

        if tool.compile_argv is None:
            # Interpreted languages get a parse check so garbage completions
            # are rejected at generation time, same as a compile would.
            if tool.source_suffix == ".py":
                try:
                    compile(program.source, str(src_path), "exec")
                except SyntaxError as exc:
                    raise CompileFailed(
                        f"{program.language_tag} parse error: {exc.msg} (line {exc.lineno})",
                        stderr=str(exc),
                    ) from exc
        else:
            compiler = tool.compile_argv[0]
            if shutil.which(compiler) is None:
                raise ToolchainMissing(f"compiler {compiler!r} not found on PATH")
            argv = _substitute(tool.compile_argv, str(src_path), str(bin_path))
            proc = subprocess.run(
                argv, capture_output=True, text=True, timeout=120, cwd=build_dir
            )
            if proc.returncode != 0:
                raise CompileFailed(
                    f"{program.language_tag} compile failed (exit {proc.returncode})",
                    stderr=proc.stderr[-_STDERR_TAIL_BYTES:],
                )

        artifact = CompiledArtifact(
            language_tag=program.language_tag,
            run_argv=_substitute(tool.run_argv, str(src_path), str(bin_path)),
            source_hash=digest,
        )
        self._compile_cache[digest] = artifact
        return artifact

    # -- execution -----------------------------------------------------------

    def execute(
        self,
        artifact: CompiledArtifact,
        stdin_payload: str,
        limits: ExecLimits | None = None,
        extra_args: Sequence[str] = (),
    ) -> ExecutionOutcome:
        """Run one process to completion under limits.

        Status is ok iff the process exits 0 within the wall budget and
        writes at most max_output_bytes to stdout. Oversized output and
        nonzero exits both report as crash; the exit_code field keeps the
        distinction available to callers that need it.
        """
        lim = limits or self.limits
        self._run_counter += 1
        run_dir = self.root / f"run-{self._run_counter:06d}-{os.getpid()}"
        run_dir.mkdir(parents=True)
        in_path = run_dir / "stdin.txt"
        out_path = run_dir / "stdout.txt"
        err_path = run_dir / "stderr.txt"
        in_path.write_text(stdin_payload, encoding="utf-8")

        argv = list(artifact.run_argv) + list(extra_args)
        started = time.monotonic()
        timed_out = False
        with open(in_path, "rb") as fin, open(out_path, "wb") as fout, open(
            err_path, "wb"
        ) as ferr:
            proc = subprocess.Popen(
                argv,
                stdin=fin,
                stdout=fout,
                stderr=ferr,
                cwd=run_dir,
                start_new_session=True,
            )
            self._apply_rlimits(proc.pid, lim)
            try:
                proc.wait(timeout=lim.wall_ms / 1000.0)
            except subprocess.TimeoutExpired:
                timed_out = True
                self._kill_group(proc.pid)
                proc.wait()
        wall_ms = (time.monotonic() - started) * 1000.0

        raw = out_path.read_bytes()[: lim.max_output_bytes + 1]
        oversize = len(raw) > lim.max_output_bytes
        stdout_text = raw[: lim.max_output_bytes].decode("utf-8", errors="replace")
        stderr_tail = err_path.read_bytes()[-_STDERR_TAIL_BYTES:].decode(
            "utf-8", errors="replace"
        )
        shutil.rmtree(run_dir, ignore_errors=True)

        if timed_out:
            status = ExecStatus.TIMEOUT
        elif proc.returncode == 0 and not oversize:
            status = ExecStatus.OK
        else:
            status = ExecStatus.CRASH
        normalized = normalize_output(stdout_text) if status is ExecStatus.OK else None
        return ExecutionOutcome(
            status=status,
            raw_stdout=stdout_text,
            normalized_output=normalized,
            wall_time_ms=wall_ms,
            exit_code=proc.returncode,
            stderr_tail=stderr_tail,
        )

    def run_many(
        self, artifact: CompiledArtifact, payloads: Sequence[str]
    ) -> list[ExecutionOutcome]:
        """Execute the artifact once per payload; results keep payload order."""
        if self.jobs == 1 or len(payloads) <= 1:
            return [self.execute(artifact, p) for p in payloads]
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            return list(pool.map(lambda p: self.execute(artifact, p), payloads))

    def run_seeded(
        self, artifact: CompiledArtifact, seeds: Sequence[int]
    ) -> list[ExecutionOutcome]:
        """Execute once per seed, passing the seed as the sole argument."""
        runner = lambda s: self.execute(artifact, "", extra_args=(str(s),))
        if self.jobs == 1 or len(seeds) <= 1:
            return [runner(s) for s in seeds]
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            return list(pool.map(runner, seeds))

    @staticmethod
    def _apply_rlimits(pid: int, lim: ExecLimits) -> None:
        # prlimit after spawn instead of preexec_fn: thread-safe, and the
        # microsecond window before limits land is harmless for judged code.
        cpu_s = max(1, (lim.cpu_ms + 999) // 1000)
        try:
            resource.prlimit(pid, resource.RLIMIT_CPU, (cpu_s, cpu_s + 1))
            resource.prlimit(pid, resource.RLIMIT_AS, (lim.mem_bytes, lim.mem_bytes))
            fsize = lim.max_output_bytes + 1
            resource.prlimit(pid, resource.RLIMIT_FSIZE, (fsize, fsize))
            resource.prlimit(pid, resource.RLIMIT_CORE, (0, 0))
        except (ProcessLookupError, PermissionError):
            pass

    @staticmethod
    def _kill_group(pid: int) -> None:
        try:
            os.killpg(os.getpgid(pid), signal.SIGKILL)
        except (ProcessLookupError, PermissionError):
            try:
                os.kill(pid, signal.SIGKILL)
            except ProcessLookupError:
                pass
