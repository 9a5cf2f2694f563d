"""Run configuration and tool settings.

RunConfig holds the knobs that shape an experiment and travel into every
report. Settings holds environment plumbing (backend choice, cache paths,
process limits) that affects how work is done, not what is measured.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .sandbox import DEFAULT_LIMITS, ExecLimits

PG_MODES = ("basic", "filtered", "ours")
IG_MODES = ("basic", "ours")
DT_MODES = ("basic", "ours")

# 252 = C(10, 5): every subset of the default pool is enumerable up to k=5.
DEFAULT_MAX_ROUNDS = 252


@dataclass(frozen=True)
class RunConfig:
    """Experiment shape: pool sizes, subset size, stage modes, seed."""

    k: int = 4
    input_pool: int = 100
    variant_pool: int = 10
    pg_mode: str = "ours"
    ig_mode: str = "ours"
    dt_mode: str = "ours"
    seed: int = 0
    max_rounds: int = DEFAULT_MAX_ROUNDS

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.variant_pool < self.k:
            raise ConfigError(
                f"variant_pool ({self.variant_pool}) must be >= k ({self.k})"
            )
        if self.input_pool < 1:
            raise ConfigError(f"input_pool must be >= 1, got {self.input_pool}")
        if self.max_rounds < 1:
            raise ConfigError(f"max_rounds must be >= 1, got {self.max_rounds}")
        if self.pg_mode not in PG_MODES:
            raise ConfigError(f"pg_mode must be one of {PG_MODES}, got {self.pg_mode!r}")
        if self.ig_mode not in IG_MODES:
            raise ConfigError(f"ig_mode must be one of {IG_MODES}, got {self.ig_mode!r}")
        if self.dt_mode not in DT_MODES:
            raise ConfigError(f"dt_mode must be one of {DT_MODES}, got {self.dt_mode!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def subset_count(self, pool_size: int) -> int:
        return math.comb(pool_size, self.k) if pool_size >= self.k else 0


@dataclass(frozen=True)
class Settings:
    """Environment plumbing; nothing here changes what a report means."""

    backend: str = "replay"
    cache_dir: Path | None = None
    templates_dir: Path | None = None
    model: str = "gpt-4o-mini"
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "DISSENT_API_KEY"
    temperature: float = 0.8
    record: bool = False
    jobs: int = 1
    limits: ExecLimits = field(default_factory=lambda: DEFAULT_LIMITS)
    quiet: bool = False

    def __post_init__(self):
        if self.backend not in ("replay", "http", "mock"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")


_RUN_KEYS = {f.name for f in dataclasses.fields(RunConfig)}
_LIMIT_KEYS = {f.name for f in dataclasses.fields(ExecLimits)}
_SETTINGS_KEYS = {
    "backend",
    "cache_dir",
    "templates_dir",
    "model",
    "base_url",
    "api_key_env",
    "temperature",
    "record",
    "jobs",
    "quiet",
}


def load_config_file(path: Path) -> dict:
    """Read a JSON config file whose keys mirror the CLI flags."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = set(data) - _RUN_KEYS - _SETTINGS_KEYS - _LIMIT_KEYS
    if unknown:
        raise ConfigError(f"config file {path} has unknown keys: {sorted(unknown)}")
    return data


def build_configs(file_values: dict, flag_values: dict) -> tuple[RunConfig, Settings]:
    """Merge config file values with CLI flags; flags win on conflict.

    flag_values entries that are None mean "flag not given".
    """
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})

    run_kwargs = {k: merged[k] for k in _RUN_KEYS if k in merged}
    limit_kwargs = {k: merged[k] for k in _LIMIT_KEYS if k in merged}
    settings_kwargs = {k: merged[k] for k in _SETTINGS_KEYS if k in merged}
    for key in ("cache_dir", "templates_dir"):
        if settings_kwargs.get(key) is not None:
            settings_kwargs[key] = Path(settings_kwargs[key])
    if limit_kwargs:
        settings_kwargs["limits"] = ExecLimits(**limit_kwargs)

    try:
        return RunConfig(**run_kwargs), Settings(**settings_kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad configuration: {exc}") from exc
