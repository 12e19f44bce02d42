"""Pluggable clients for the two external capabilities the pipeline needs.

Three layers, all sharing one request-digest scheme:

* live HTTP clients (chat-completion-style LLM, JSON search API) with
  exponential-backoff retries, a per-run call budget and a content-addressed
  response cache;
* a fixture store with record/replay wrappers; replay never touches the
  network and never invents a reply;
* thin protocol definitions so the rest of the pipeline stays agnostic to
  which concrete model or engine is configured.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Protocol, Union

import httpx

from .errors import (
    BackendUnavailable,
    BudgetExceeded,
    CorruptEntry,
    FixtureMiss,
)
from .jsontools import canonical_json

log = logging.getLogger(__name__)

LLM_KEY_ENV = "HALLU_LLM_KEY"
SEARCH_KEY_ENV = "HALLU_SEARCH_KEY"

RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


# --- request / response types ------------------------------------------------

@dataclass(frozen=True)
class LlmRequest:
    model_name: str
    system_prompt: str
    user_prompt: str
    temperature: float = 0.0
    max_output: int = 1024

    def __post_init__(self) -> None:
        if not self.system_prompt or not self.user_prompt:
            raise ValueError("prompts must be non-empty")
        if not (0.0 <= self.temperature <= 2.0):
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_output < 1:
            raise ValueError("max_output must be >= 1")


@dataclass(frozen=True)
class SearchRequest:
    query: str
    lang: str
    max_results: int = 10

    def __post_init__(self) -> None:
        if not self.query.strip():
            raise ValueError("query must be non-empty after trimming")
        if self.max_results < 1:
            raise ValueError("max_results must be >= 1")


@dataclass(frozen=True)
class SearchResult:
    rank: int
    url: str
    title: str
    snippet: str

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if not self.url:
            raise ValueError("url must be non-empty")


def canonical_request(kind: str, request: Union[LlmRequest, SearchRequest]) -> dict:
    if kind == "llm":
        assert isinstance(request, LlmRequest)
        body = {
            "model_name": request.model_name,
            "system_prompt": request.system_prompt,
            "user_prompt": request.user_prompt,
            "temperature": request.temperature,
            "max_output": request.max_output,
        }
    elif kind == "search":
        assert isinstance(request, SearchRequest)
        body = {
            "query": request.query,
            "lang": request.lang,
            "max_results": request.max_results,
        }
    else:
        raise ValueError(f"unknown request kind {kind!r}")
    return {"kind": kind, "request": body}


def request_digest(kind: str, request: Union[LlmRequest, SearchRequest]) -> str:
    """Stable content address of a canonicalized request."""
    return hashlib.sha256(
        canonical_json(canonical_request(kind, request)).encode("utf-8")
    ).hexdigest()


# --- backend protocols and op-level entry points -----------------------------

class LlmBackend(Protocol):
    def complete(self, request: LlmRequest) -> str: ...

    def describe(self) -> str: ...


class SearchBackend(Protocol):
    def search(self, request: SearchRequest) -> list[SearchResult]: ...

    def describe(self) -> str: ...


def llm_complete(request: LlmRequest, backend: LlmBackend) -> str:
    return backend.complete(request)


def search(request: SearchRequest, backend: SearchBackend) -> list[SearchResult]:
    return backend.search(request)


# --- spend controls ----------------------------------------------------------

class CallBudget:
    """Hard per-run cap on live backend calls; thread-safe."""

    def __init__(self, max_calls: Optional[int]):
        self.max_calls = max_calls
        self._used = 0
        self._lock = threading.Lock()

    def consume(self) -> None:
        with self._lock:
            if self.max_calls is not None and self._used >= self.max_calls:
                raise BudgetExceeded(f"per-run call budget of {self.max_calls} exhausted")
            self._used += 1

    @property
    def used(self) -> int:
        return self._used


@dataclass
class RetryPolicy:
    """Exponential backoff: base 1s doubling, capped, bounded attempts."""

    max_attempts: int = 5
    base_delay: float = 1.0
    max_delay: float = 30.0
    sleep: Callable[[float], None] = time.sleep

    def delay(self, attempt: int) -> float:
        """Backoff before attempt ``attempt + 1`` (attempts are 1-based)."""
        return min(self.base_delay * (2 ** (attempt - 1)), self.max_delay)


# --- response cache -----------------------------------------------------------

class ResponseCache:
    """Content-addressed reply store; survives runs, no TTL.

    Entries carry a checksum of the canonical reply; a mismatch means the
    file was tampered with or truncated, in which case the entry is evicted
    and treated as absent.
    """

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str):
        path = self._path(key)
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
            checksum = hashlib.sha256(
                canonical_json(payload.get("reply")).encode("utf-8")
            ).hexdigest()
            if payload.get("checksum") != checksum:
                raise CorruptEntry(f"checksum mismatch for cache entry {key}")
        except FileNotFoundError:
            return None
        except (CorruptEntry, ValueError) as exc:
            log.warning("evicting corrupt cache entry %s: %s", key, exc)
            path.unlink(missing_ok=True)
            return None
        return payload["reply"]

    def put(self, key: str, reply) -> None:
        payload = {
            "key": key,
            "reply": reply,
            "checksum": hashlib.sha256(canonical_json(reply).encode("utf-8")).hexdigest(),
        }
        _atomic_write(self._path(key), json.dumps(payload, ensure_ascii=False, indent=1))

    def stats(self) -> dict:
        files = list(self.directory.glob("*.json"))
        return {"entries": len(files), "bytes": sum(f.stat().st_size for f in files)}

    def clear(self) -> int:
        files = list(self.directory.glob("*.json"))
        for f in files:
            f.unlink(missing_ok=True)
        return len(files)


def cache_get(cache: ResponseCache, key: str):
    return cache.get(key)


def cache_put(cache: ResponseCache, key: str, reply) -> None:
    cache.put(key, reply)


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


# --- fixture store: record / replay -------------------------------------------

class FixtureStore:
    """One file per request digest, holding canonical request + response."""

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)

    def _path(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def save(self, kind: str, request, response) -> str:
        self.directory.mkdir(parents=True, exist_ok=True)
        digest = request_digest(kind, request)
        payload = canonical_request(kind, request)
        payload["response"] = response
        payload["checksum"] = hashlib.sha256(
            canonical_json(response).encode("utf-8")
        ).hexdigest()
        _atomic_write(self._path(digest), json.dumps(payload, ensure_ascii=False, indent=1))
        return digest

    def load(self, kind: str, request):
        digest = request_digest(kind, request)
        path = self._path(digest)
        if not path.exists():
            raise FixtureMiss(f"no recorded fixture for {kind} request digest {digest}")
        payload = json.loads(path.read_text(encoding="utf-8"))
        response = payload.get("response")
        checksum = hashlib.sha256(canonical_json(response).encode("utf-8")).hexdigest()
        if payload.get("checksum") != checksum:
            raise FixtureMiss(f"fixture {digest} is corrupt (checksum mismatch)")
        return response


class FixtureLlmBackend:
    """Replay-only LLM backend; raises FixtureMiss on unseen requests."""

    def __init__(self, store: FixtureStore):
        self.store = store

    def complete(self, request: LlmRequest) -> str:
        response = self.store.load("llm", request)
        if not isinstance(response, str):
            raise FixtureMiss("llm fixture holds a non-text response")
        return response

    def describe(self) -> str:
        return f"fixture:{self.store.directory.name}"


class FixtureSearchBackend:
    def __init__(self, store: FixtureStore):
        self.store = store

    def search(self, request: SearchRequest) -> list[SearchResult]:
        response = self.store.load("search", request)
        return [
            SearchResult(
                rank=item["rank"], url=item["url"],
                title=item.get("title", ""), snippet=item.get("snippet", ""),
            )
            for item in response
        ]

    def describe(self) -> str:
        return f"fixture:{self.store.directory.name}"


class RecordingLlmBackend:
    """Pass-through wrapper that persists every reply as a fixture."""

    def __init__(self, inner: LlmBackend, store: FixtureStore):
        self.inner = inner
        self.store = store

    def complete(self, request: LlmRequest) -> str:
        response = self.inner.complete(request)
        self.store.save("llm", request, response)
        return response

    def describe(self) -> str:
        return f"record({self.inner.describe()})"


class RecordingSearchBackend:
    def __init__(self, inner: SearchBackend, store: FixtureStore):
        self.inner = inner
        self.store = store

    def search(self, request: SearchRequest) -> list[SearchResult]:
        results = self.inner.search(request)
        self.store.save(
            "search",
            request,
            [
                {"rank": r.rank, "url": r.url, "title": r.title, "snippet": r.snippet}
                for r in results
            ],
        )
        return results

    def describe(self) -> str:
        return f"record({self.inner.describe()})"


# --- live HTTP clients ---------------------------------------------------------

class _HttpClientBase:
    def __init__(
        self,
        *,
        retry: Optional[RetryPolicy] = None,
        budget: Optional[CallBudget] = None,
        cache: Optional[ResponseCache] = None,
        transport: Optional[httpx.BaseTransport] = None,
        timeout: float = 30.0,
    ):
        self.retry = retry or RetryPolicy()
        self.budget = budget
        self.cache = cache
        self._client = httpx.Client(transport=transport, timeout=timeout)

    def _send_with_retry(self, build_request: Callable[[], httpx.Request]) -> httpx.Response:
        last_error: Optional[str] = None
        for attempt in range(1, self.retry.max_attempts + 1):
            try:
                response = self._client.send(build_request())
            except httpx.TransportError as exc:
                last_error = f"transport error: {exc}"
            else:
                if response.status_code < 400:
                    return response
                if response.status_code in RETRYABLE_STATUS:
                    last_error = f"HTTP {response.status_code}"
                else:
                    raise BackendUnavailable(
                        f"backend rejected request: HTTP {response.status_code}"
                    )
            if attempt < self.retry.max_attempts:
                self.retry.sleep(self.retry.delay(attempt))
        raise BackendUnavailable(
            f"backend unavailable after {self.retry.max_attempts} attempts ({last_error})"
        )

    def close(self) -> None:
        self._client.close()


class HttpLlmBackend(_HttpClientBase):
    """Chat-completion-style JSON protocol over HTTP."""

    def __init__(self, endpoint: str, api_key: str, **kwargs):
        super().__init__(**kwargs)
        self.endpoint = endpoint
        self.api_key = api_key

    def complete(self, request: LlmRequest) -> str:
        digest = request_digest("llm", request)
        if self.cache is not None:
            hit = self.cache.get(digest)
            if hit is not None:
                return hit
        if self.budget is not None:
            self.budget.consume()

        def build() -> httpx.Request:
            return self._client.build_request(
                "POST",
                self.endpoint,
                headers={"Authorization": f"Bearer {self.api_key}"},
                json={
                    "model": request.model_name,
                    "messages": [
                        {"role": "system", "content": request.system_prompt},
                        {"role": "user", "content": request.user_prompt},
                    ],
                    "temperature": request.temperature,
                    "max_tokens": request.max_output,
                },
            )

        response = self._send_with_retry(build)
        try:
            text = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"malformed completion payload: {exc}") from exc
        if not isinstance(text, str):
            raise BackendUnavailable("completion content is not text")
        if self.cache is not None:
            self.cache.put(digest, text)
        return text

    def describe(self) -> str:
        return f"http:{self.endpoint}"


class HttpSearchBackend(_HttpClientBase):
    """JSON search API (Custom-Search-style query parameters)."""

    def __init__(self, endpoint: str, api_key: str, engine_id: str, **kwargs):
        super().__init__(**kwargs)
        self.endpoint = endpoint
        self.api_key = api_key
        self.engine_id = engine_id

    def search(self, request: SearchRequest) -> list[SearchResult]:
        digest = request_digest("search", request)
        if self.cache is not None:
            hit = self.cache.get(digest)
            if hit is not None:
                return [SearchResult(**item) for item in hit]
        if self.budget is not None:
            self.budget.consume()

        params = {
            "key": self.api_key,
            "cx": self.engine_id,
            "q": request.query,
            "num": str(request.max_results),
        }
        if len(request.lang) == 2:
            params["lr"] = f"lang_{request.lang.lower()}"

        def build() -> httpx.Request:
            return self._client.build_request("GET", self.endpoint, params=params)

        response = self._send_with_retry(build)
        try:
            items = response.json().get("items", [])
        except ValueError as exc:
            raise BackendUnavailable(f"malformed search payload: {exc}") from exc
        results = []
        for item in items:
            url = item.get("link")
            if not url:
                continue
            results.append(
                SearchResult(
                    rank=len(results) + 1,
                    url=url,
                    title=item.get("title", ""),
                    snippet=item.get("snippet", ""),
                )
            )
        if self.cache is not None:
            self.cache.put(
                digest,
                [
                    {"rank": r.rank, "url": r.url, "title": r.title, "snippet": r.snippet}
                    for r in results
                ],
            )
        return results

    def describe(self) -> str:
        return f"http:{self.endpoint}"
