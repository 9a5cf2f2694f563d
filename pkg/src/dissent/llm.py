"""Prompt rendering, completion backends, and the on-disk response cache.

Every completion is addressed by a cache key derived from the exact
request, so a recorded session replays byte-identically with no network.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

from .errors import BackendUnavailable, CacheMiss, MissingBinding, RateLimited

TEMPLATE_IDS = (
    "variant_put_guided",
    "variant_spec_only",
    "input_generator",
    "direct_inputs",
    "direct_testcase",
)

_PLACEHOLDER = re.compile(r"\{\{([a-z_]+)\}\}")
_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class PromptRequest:
    template_id: str
    rendered_prompt: str
    temperature: float
    sample_index: int

    def __post_init__(self):
        if self.template_id not in TEMPLATE_IDS:
            raise ValueError(f"unknown template_id {self.template_id!r}")
        if self.sample_index < 0:
            raise ValueError("sample_index must be >= 0")


@dataclass(frozen=True)
class LlmResponse:
    text: str
    backend: str
    cache_key: str


def load_template(template_id: str, templates_dir: Path | None = None) -> str:
    """Fetch a template's text, from disk when a directory override is set."""
    if template_id not in TEMPLATE_IDS:
        raise MissingBinding(f"unknown template_id {template_id!r}")
    if templates_dir is not None:
        return (Path(templates_dir) / f"{template_id}.txt").read_text(encoding="utf-8")
    return (
        resources.files("dissent").joinpath(f"templates/{template_id}.txt").read_text("utf-8")
    )


def render_prompt(
    template_id: str,
    bindings: dict[str, str],
    temperature: float = 0.8,
    sample_index: int = 0,
    templates_dir: Path | None = None,
) -> PromptRequest:
    """Substitute bindings into a template; every placeholder must be bound."""
    template = load_template(template_id, templates_dir)
    needed = set(_PLACEHOLDER.findall(template))
    missing = needed - set(bindings)
    if missing:
        raise MissingBinding(
            f"template {template_id!r} needs bindings for: {sorted(missing)}"
        )
    rendered = _PLACEHOLDER.sub(lambda m: bindings[m.group(1)], template)
    leftover = _PLACEHOLDER.search(rendered)
    if leftover:  # a binding value re-introduced a placeholder
        raise MissingBinding(
            f"rendered prompt still contains placeholder {leftover.group(0)!r}"
        )
    return PromptRequest(
        template_id=template_id,
        rendered_prompt=rendered,
        temperature=temperature,
        sample_index=sample_index,
    )


def cache_key(req: PromptRequest) -> str:
    """Stable content address for one completion request."""
    blob = json.dumps(
        [req.template_id, req.rendered_prompt, req.temperature, req.sample_index],
        ensure_ascii=False,
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def extract_code_block(text: str) -> str:
    """Contents of the first fenced code block, else the whole text trimmed."""
    m = _FENCE.search(text)
    if m:
        return m.group(1).rstrip("\n")
    return text.strip()


class ResponseCache:
    """One UTF-8 file per cache key under a root directory."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, key: str) -> Path:
        return self.root / f"{key}.txt"

    def read(self, key: str) -> str | None:
        p = self.path(key)
        if not p.exists():
            return None
        return p.read_text(encoding="utf-8")

    def write(self, key: str, text: str) -> None:
        # write-then-rename so a crashed run never leaves a torn entry
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".part")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
            os.replace(tmp, self.path(key))
        except OSError:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise


class MockBackend:
    """Scripted backend for tests and fixture building.

    script is either a list of response texts consumed in order or a
    callable mapping a PromptRequest to a response text.
    """

    name = "mock"

    def __init__(self, script):
        if callable(script):
            self._fn = script
            self._queue = None
        else:
            self._fn = None
            self._queue = list(script)

    def complete_text(self, req: PromptRequest) -> str:
        if self._fn is not None:
            return self._fn(req)
        if not self._queue:
            raise BackendUnavailable("mock backend ran out of scripted responses")
        return self._queue.pop(0)


class ReplayBackend:
    """Serves only what the cache already holds; never touches the network."""

    name = "replay"

    def complete_text(self, req: PromptRequest) -> str:
        raise CacheMiss(
            f"no cached response for template {req.template_id!r} "
            f"sample {req.sample_index} (key {cache_key(req)[:16]}...)"
        )


class HttpBackend:
    """OpenAI-style chat completions over HTTP with capped backoff retries."""

    name = "http"

    def __init__(
        self,
        model: str,
        base_url: str,
        api_key: str | None,
        timeout_s: float = 120.0,
        max_attempts: int = 5,
        post: Callable | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if not api_key:
            raise BackendUnavailable(
                "http backend needs an API key (set the configured env var)"
            )
        self.model = model
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.max_attempts = max_attempts
        self._post = post
        self._sleep = sleep

    def _do_post(self, url, **kwargs):
        if self._post is None:
            import requests  # deferred so offline runs never need it

            self._post = requests.post
        return self._post(url, **kwargs)

    def complete_text(self, req: PromptRequest) -> str:
        url = f"{self.base_url}/chat/completions"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": req.rendered_prompt}],
            "temperature": req.temperature,
            "n": 1,
        }
        delay = 1.0
        last_status = None
        for attempt in range(self.max_attempts):
            try:
                resp = self._do_post(
                    url,
                    json=body,
                    headers={"Authorization": f"Bearer {self.api_key}"},
                    timeout=self.timeout_s,
                )
            except OSError as exc:
                raise BackendUnavailable(f"http backend unreachable: {exc}") from exc
            last_status = resp.status_code
            if resp.status_code == 200:
                payload = resp.json()
                try:
                    return payload["choices"][0]["message"]["content"]
                except (KeyError, IndexError, TypeError) as exc:
                    raise BackendUnavailable(
                        f"http backend returned an unexpected payload shape: {exc}"
                    ) from exc
            if resp.status_code == 429 or resp.status_code >= 500:
                if attempt + 1 < self.max_attempts:
                    self._sleep(delay)
                    delay = min(delay * 2, 30.0)
                continue
            raise BackendUnavailable(
                f"http backend rejected the request (status {resp.status_code})"
            )
        if last_status == 429:
            raise RateLimited(
                f"still rate-limited after {self.max_attempts} attempts"
            )
        raise BackendUnavailable(
            f"http backend kept failing (last status {last_status})"
        )


class LlmGateway:
    """Routes completion requests through a backend and the response cache.

    The http backend always records into the cache; mock records only when
    record=True (that is how replay fixtures get built); replay only reads.
    """

    def __init__(self, backend, cache: ResponseCache | None = None, record: bool = False):
        self.backend = backend
        self.cache = cache
        self.record = record

    def complete(self, req: PromptRequest) -> LlmResponse:
        key = cache_key(req)
        if self.backend.name == "replay":
            if self.cache is None:
                raise CacheMiss("replay backend configured without a cache directory")
            text = self.cache.read(key)
            if text is None:
                self.backend.complete_text(req)  # raises CacheMiss with context
            return LlmResponse(text=text, backend="replay", cache_key=key)

        text = self.backend.complete_text(req)
        should_record = self.record or self.backend.name == "http"
        if should_record and self.cache is not None:
            self.cache.write(key, text)
        return LlmResponse(text=text, backend=self.backend.name, cache_key=key)


def make_gateway(settings) -> LlmGateway:
    """Build the gateway described by a Settings value."""
    cache = ResponseCache(settings.cache_dir) if settings.cache_dir else None
    if settings.backend == "replay":
        backend = ReplayBackend()
    elif settings.backend == "http":
        backend = HttpBackend(
            model=settings.model,
            base_url=settings.base_url,
            api_key=os.environ.get(settings.api_key_env),
        )
    else:
        raise BackendUnavailable(
            "mock backend has no default script; construct LlmGateway directly"
        )
    return LlmGateway(backend, cache=cache, record=settings.record)
