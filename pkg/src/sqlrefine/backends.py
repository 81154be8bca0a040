"""Completion backends (HTTP, record/replay, echo-gold, scripted) and SQL extraction."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
import urllib.error
import urllib.request
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

from .errors import (
    FixtureWriteFailure,
    MissingFixture,
    NetworkFailure,
    NoSqlFound,
    RateLimited,
    ScriptExhausted,
)
from .lexer import top_level_semicolon

logger = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.0
DEFAULT_MAX_TOKENS = 512
DEFAULT_STOP = ("###",)


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    stop: tuple = DEFAULT_STOP

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


@dataclass(frozen=True)
class GenerationResult:
    completion: str
    backend_id: str
    latency: float = 0.0


@dataclass(frozen=True)
class SqlCandidate:
    raw_completion: str
    sql: str
    round: int


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class Backend:
    """Interface: ``generate(request) -> GenerationResult``.

    ``bind(item)`` returns the backend to use for one task item; backends that
    need per-item state (echo-gold) override it.
    """

    backend_id = "abstract"

    def generate(self, request: GenerationRequest) -> GenerationResult:
        raise NotImplementedError

    def bind(self, item) -> "Backend":
        return self


class EchoGoldBackend(Backend):
    backend_id = "echo-gold"

    def __init__(self, gold_sql: Optional[str] = None):
        self.gold_sql = gold_sql

    def bind(self, item) -> "EchoGoldBackend":
        return EchoGoldBackend(item.gold_sql)

    def generate(self, request: GenerationRequest) -> GenerationResult:
        if self.gold_sql is None:
            raise ValueError("echo-gold backend is not bound to an item with gold SQL")
        return GenerationResult(self.gold_sql, self.backend_id)


class ScriptedBackend(Backend):
    """Returns queued completions in order; thread-safe."""

    backend_id = "script"

    def __init__(self, completions: Iterable[str]):
        self._queue = deque(completions)
        self._lock = threading.Lock()

    def generate(self, request: GenerationRequest) -> GenerationResult:
        with self._lock:
            if not self._queue:
                raise ScriptExhausted("scripted backend has no completions left")
            return GenerationResult(self._queue.popleft(), self.backend_id)


class PerItemScriptBackend(Backend):
    """Maps item ids to their own scripted queues."""

    backend_id = "script"

    def __init__(self, scripts: Dict[str, List[str]]):
        self._scripts = {k: list(v) for k, v in scripts.items()}

    def bind(self, item) -> ScriptedBackend:
        return ScriptedBackend(self._scripts.get(item.item_id, []))

    def generate(self, request):
        raise ScriptExhausted("per-item script backend must be bound to an item")


def load_fixtures(path: str | os.PathLike) -> Dict[str, str]:
    table: Dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                table[obj["digest"]] = obj["completion"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad fixture line: {exc}") from exc
    return table


class ReplayBackend(Backend):
    backend_id = "replay"

    def __init__(self, fixtures: Dict[str, str] | str | os.PathLike, strict: bool = True):
        if not isinstance(fixtures, dict):
            fixtures = load_fixtures(fixtures)
        self._fixtures = dict(fixtures)
        self.strict = strict

    def generate(self, request: GenerationRequest) -> GenerationResult:
        digest = prompt_digest(request.prompt)
        try:
            return GenerationResult(self._fixtures[digest], self.backend_id)
        except KeyError:
            if self.strict:
                raise MissingFixture(digest) from None
            return GenerationResult("", self.backend_id)


def _extract_field(payload: Any, path: str) -> Any:
    value = payload
    for name, index in re.findall(r"([^.\[\]]+)|\[(\d+)\]", path):
        value = value[int(index)] if index else value[name]
    return value


class HttpBackend(Backend):
    """POSTs ``{"model", "prompt", "temperature", "max_tokens", "stop"}`` as JSON."""

    backend_id = "http"

    def __init__(
        self,
        endpoint: str,
        model: str = "llama-2-70b",
        field_path: str = "choices[0].text",
        timeout: float = 60.0,
        retries: int = 3,
        backoff: float = 1.0,
        max_in_flight: int = 4,
        headers: Optional[Dict[str, str]] = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.field_path = field_path
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.headers = {"Content-Type": "application/json", **(headers or {})}
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def _post(self, body: bytes) -> Any:
        req = urllib.request.Request(self.endpoint, data=body, headers=self.headers, method="POST")
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            return json.loads(resp.read().decode("utf-8"))

    def generate(self, request: GenerationRequest) -> GenerationResult:
        body = json.dumps(
            {
                "model": self.model,
                "prompt": request.prompt,
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
                "stop": list(request.stop),
            }
        ).encode("utf-8")
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            start = time.monotonic()
            try:
                with self._slots:
                    payload = self._post(body)
            except urllib.error.HTTPError as exc:
                if exc.code == 429:
                    last_exc = RateLimited(f"{self.endpoint} returned 429")
                elif exc.code >= 500:
                    last_exc = NetworkFailure(f"{self.endpoint} returned {exc.code}")
                else:
                    raise NetworkFailure(f"{self.endpoint} returned {exc.code}") from exc
                logger.warning("generation attempt %d failed: %s", attempt + 1, last_exc)
                continue
            except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
                last_exc = NetworkFailure(f"{self.endpoint}: {exc}")
                logger.warning("generation attempt %d failed: %s", attempt + 1, last_exc)
                continue
            try:
                text = _extract_field(payload, self.field_path)
            except (KeyError, IndexError, TypeError) as exc:
                raise NetworkFailure(
                    f"response has no field {self.field_path!r}"
                ) from exc
            latency = (time.monotonic() - start) * 1000.0
            return GenerationResult(str(text), self.backend_id, latency)
        assert last_exc is not None
        raise last_exc


class RecordingBackend(Backend):
    """Wraps a live backend and appends every completion to a JSONL fixture store."""

    def __init__(self, live: Backend, store: str | os.PathLike):
        self.live = live
        self.store = Path(store)
        self.backend_id = live.backend_id
        self._lock = threading.Lock()

    def bind(self, item) -> "RecordingBackend":
        bound = self.live.bind(item)
        if bound is self.live:
            return self
        clone = RecordingBackend(bound, self.store)
        clone._lock = self._lock
        return clone

    def generate(self, request: GenerationRequest) -> GenerationResult:
        return record_fixture(self.live, request, self.store, self._lock)


_store_locks: Dict[str, threading.Lock] = {}
_store_locks_guard = threading.Lock()


def _lock_for(store: Path) -> threading.Lock:
    key = str(store.resolve())
    with _store_locks_guard:
        return _store_locks.setdefault(key, threading.Lock())


def record_fixture(
    live: Backend,
    request: GenerationRequest,
    store: str | os.PathLike,
    lock: Optional[threading.Lock] = None,
) -> GenerationResult:
    result = live.generate(request)
    line = json.dumps(
        {
            "digest": prompt_digest(request.prompt),
            "completion": result.completion,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
    )
    store = Path(store)
    with lock or _lock_for(store):
        try:
            with open(store, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        except OSError as exc:
            raise FixtureWriteFailure(f"cannot append to {store}: {exc}") from exc
    return result


def generate(backend: Backend, request: GenerationRequest) -> GenerationResult:
    return backend.generate(request)


_FENCE = re.compile(r"```[ \t]*(?:sql|sqlite)?[ \t]*\n?(.*?)```", re.IGNORECASE | re.DOTALL)
_OPEN_FENCE = re.compile(r"```[ \t]*(?:sql|sqlite)?[ \t]*\n?(.*)", re.IGNORECASE | re.DOTALL)
_LABEL = re.compile(r"^\s*(?:sql|answer)\s*:", re.IGNORECASE)
_STARTS_SQL = re.compile(r"^(?:select|with)\b", re.IGNORECASE)


def extract_sql(completion: str, round: int = 1) -> SqlCandidate:
    text = completion
    m = _FENCE.search(text) or _OPEN_FENCE.search(text)
    if m:
        text = m.group(1)
    text = text.replace("```", "")
    while True:
        m = _LABEL.match(text)
        if not m:
            break
        text = text[m.end():]
    cut = top_level_semicolon(text)
    if cut >= 0:
        text = text[:cut]
    sql = text.strip()
    if not sql:
        raise NoSqlFound("completion contained no SQL")
    if not _STARTS_SQL.match(sql):
        raise NoSqlFound(f"completion does not start with SELECT or WITH: {sql[:60]!r}")
    return SqlCandidate(completion, sql, round)
