from __future__ import annotations

import json

import httpx
import pytest

from halluspan.backends import (
    CallBudget,
    FixtureLlmBackend,
    FixtureSearchBackend,
    FixtureStore,
    HttpLlmBackend,
    HttpSearchBackend,
    LlmRequest,
    RecordingLlmBackend,
    RecordingSearchBackend,
    ResponseCache,
    RetryPolicy,
    SearchRequest,
    SearchResult,
    request_digest,
)
from halluspan.errors import BackendUnavailable, BudgetExceeded, FixtureMiss


def _llm_request(**overrides) -> LlmRequest:
    fields = {
        "model_name": "answer-checker",
        "system_prompt": "system",
        "user_prompt": "user",
    }
    fields.update(overrides)
    return LlmRequest(**fields)


def _completion_response(text: str) -> httpx.Response:
    return httpx.Response(200, json={"choices": [{"message": {"content": text}}]})


def test_llm_request_validation():
    with pytest.raises(ValueError):
        _llm_request(system_prompt="")
    with pytest.raises(ValueError):
        _llm_request(temperature=3.0)
    with pytest.raises(ValueError):
        SearchRequest(query="   ", lang="en")
    with pytest.raises(ValueError):
        SearchResult(rank=0, url="https://x", title="", snippet="")


def test_request_digest_is_stable_and_sensitive():
    a = request_digest("llm", _llm_request())
    assert a == request_digest("llm", _llm_request())
    assert a != request_digest("llm", _llm_request(user_prompt="other"))
    assert a != request_digest("llm", _llm_request(model_name="another-model"))
    s = SearchRequest(query="kaspiysk", lang="en")
    assert request_digest("search", s) == request_digest("search", s)
    assert request_digest("search", s) != a


def test_fixture_store_round_trip(tmp_path):
    store = FixtureStore(tmp_path / "fixtures")
    request = _llm_request()
    digest = store.save("llm", request, "the reply")
    assert (tmp_path / "fixtures" / f"{digest}.json").exists()
    assert store.load("llm", request) == "the reply"


def test_fixture_store_miss(tmp_path):
    store = FixtureStore(tmp_path / "fixtures")
    with pytest.raises(FixtureMiss):
        store.load("llm", _llm_request())


def test_fixture_store_detects_tampering(tmp_path):
    store = FixtureStore(tmp_path / "fixtures")
    request = _llm_request()
    digest = store.save("llm", request, "the reply")
    path = tmp_path / "fixtures" / f"{digest}.json"
    payload = json.loads(path.read_text(encoding="utf-8"))
    payload["response"] = "someone edited this"
    path.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(FixtureMiss):
        store.load("llm", request)


def test_fixture_backends_replay(tmp_path):
    store = FixtureStore(tmp_path / "fixtures")
    llm_request = _llm_request()
    store.save("llm", llm_request, "recorded text")
    assert FixtureLlmBackend(store).complete(llm_request) == "recorded text"

    search_request = SearchRequest(query="q", lang="en")
    store.save(
        "search",
        search_request,
        [{"rank": 1, "url": "https://en.wikipedia.org/wiki/Q", "title": "Q", "snippet": "s"}],
    )
    results = FixtureSearchBackend(store).search(search_request)
    assert results == [
        SearchResult(rank=1, url="https://en.wikipedia.org/wiki/Q", title="Q", snippet="s")
    ]
    with pytest.raises(FixtureMiss):
        FixtureSearchBackend(store).search(SearchRequest(query="unseen", lang="en"))


class _OneReplyLlm:
    def __init__(self, reply: str):
        self.reply = reply
        self.calls = 0

    def complete(self, request: LlmRequest) -> str:
        self.calls += 1
        return self.reply

    def describe(self) -> str:
        return "canned"


def test_recording_backends_persist_then_replay(tmp_path):
    store = FixtureStore(tmp_path / "fixtures")
    recorder = RecordingLlmBackend(_OneReplyLlm("live reply"), store)
    request = _llm_request()
    assert recorder.complete(request) == "live reply"
    assert FixtureLlmBackend(store).complete(request) == "live reply"

    class _OneResultSearch:
        def search(self, req):
            return [SearchResult(rank=1, url="https://a.example/x", title="t", snippet="s")]

        def describe(self):
            return "canned"

    search_recorder = RecordingSearchBackend(_OneResultSearch(), store)
    search_request = SearchRequest(query="q2", lang="en")
    live = search_recorder.search(search_request)
    assert FixtureSearchBackend(store).search(search_request) == live


def test_response_cache_round_trip_and_eviction(tmp_path):
    cache = ResponseCache(tmp_path / "cache")
    assert cache.get("k") is None
    cache.put("k", {"answer": 42})
    assert cache.get("k") == {"answer": 42}

    victim = tmp_path / "cache" / "k.json"
    payload = json.loads(victim.read_text(encoding="utf-8"))
    payload["reply"] = {"answer": 43}
    victim.write_text(json.dumps(payload), encoding="utf-8")
    assert cache.get("k") is None
    assert not victim.exists()


def test_response_cache_stats_and_clear(tmp_path):
    cache = ResponseCache(tmp_path / "cache")
    cache.put("a", "x")
    cache.put("b", "y")
    stats = cache.stats()
    assert stats["entries"] == 2
    assert stats["bytes"] > 0
    assert cache.clear() == 2
    assert cache.stats()["entries"] == 0


def test_retry_policy_delays_double_and_cap():
    policy = RetryPolicy()
    assert [policy.delay(n) for n in (1, 2, 3, 4)] == [1.0, 2.0, 4.0, 8.0]
    assert policy.delay(10) == 30.0


def _llm_backend(handler, **kwargs) -> HttpLlmBackend:
    sleeps: list[float] = []
    backend = HttpLlmBackend(
        "https://llm.test/v1/chat/completions",
        "test-key",
        retry=RetryPolicy(sleep=sleeps.append),
        transport=httpx.MockTransport(handler),
        **kwargs,
    )
    backend.recorded_sleeps = sleeps
    return backend


def test_http_llm_backend_happy_path():
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return _completion_response("hello")

    backend = _llm_backend(handler)
    text = backend.complete(_llm_request(model_name="answer-checker", user_prompt="ping"))
    assert text == "hello"
    assert seen["auth"] == "Bearer test-key"
    assert seen["body"]["model"] == "answer-checker"
    assert seen["body"]["messages"][0]["role"] == "system"
    assert seen["body"]["messages"][1] == {"role": "user", "content": "ping"}


def test_http_llm_backend_retries_429_with_backoff():
    attempts = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        attempts["n"] += 1
        if attempts["n"] <= 3:
            return httpx.Response(429)
        return _completion_response("finally")

    backend = _llm_backend(handler)
    assert backend.complete(_llm_request()) == "finally"
    assert attempts["n"] == 4
    assert backend.recorded_sleeps == [1.0, 2.0, 4.0]


def test_http_llm_backend_gives_up_after_max_attempts():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(503)

    backend = _llm_backend(handler)
    with pytest.raises(BackendUnavailable):
        backend.complete(_llm_request())
    assert backend.recorded_sleeps == [1.0, 2.0, 4.0, 8.0]


def test_http_llm_backend_fails_fast_on_other_4xx():
    attempts = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        attempts["n"] += 1
        return httpx.Response(400)

    backend = _llm_backend(handler)
    with pytest.raises(BackendUnavailable):
        backend.complete(_llm_request())
    assert attempts["n"] == 1
    assert backend.recorded_sleeps == []


def test_http_llm_backend_retries_transport_errors():
    attempts = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        attempts["n"] += 1
        if attempts["n"] == 1:
            raise httpx.ConnectError("boom")
        return _completion_response("ok")

    backend = _llm_backend(handler)
    assert backend.complete(_llm_request()) == "ok"
    assert backend.recorded_sleeps == [1.0]


def test_http_llm_backend_consumes_budget():
    def handler(request: httpx.Request) -> httpx.Response:
        return _completion_response("ok")

    backend = _llm_backend(handler, budget=CallBudget(2))
    backend.complete(_llm_request(user_prompt="one"))
    backend.complete(_llm_request(user_prompt="two"))
    with pytest.raises(BudgetExceeded):
        backend.complete(_llm_request(user_prompt="three"))


def test_http_llm_backend_serves_cache_hits_without_calls(tmp_path):
    attempts = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        attempts["n"] += 1
        return _completion_response("cached me")

    backend = _llm_backend(handler, cache=ResponseCache(tmp_path / "cache"))
    request = _llm_request()
    assert backend.complete(request) == "cached me"
    assert backend.complete(request) == "cached me"
    assert attempts["n"] == 1


def test_http_search_backend_parses_items():
    def handler(request: httpx.Request) -> httpx.Response:
        assert request.url.params["key"] == "s-key"
        assert request.url.params["cx"] == "engine"
        assert request.url.params["q"] == "kaspiysk founded"
        assert request.url.params["lr"] == "lang_en"
        return httpx.Response(
            200,
            json={
                "items": [
                    {"link": "https://a.example/1", "title": "A", "snippet": "sa"},
                    {"title": "no link, skipped"},
                    {"link": "https://b.example/2", "title": "B", "snippet": "sb"},
                ]
            },
        )

    backend = HttpSearchBackend(
        "https://search.test/v1",
        "s-key",
        "engine",
        retry=RetryPolicy(sleep=lambda s: None),
        transport=httpx.MockTransport(handler),
    )
    results = backend.search(SearchRequest(query="kaspiysk founded", lang="en"))
    assert [r.rank for r in results] == [1, 2]
    assert results[0].url == "https://a.example/1"
    assert results[1].snippet == "sb"


def test_http_search_backend_handles_no_items():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json={"searchInformation": {"totalResults": "0"}})

    backend = HttpSearchBackend(
        "https://search.test/v1",
        "s-key",
        "engine",
        transport=httpx.MockTransport(handler),
    )
    assert backend.search(SearchRequest(query="nothing", lang="en")) == []


def test_call_budget_counts():
    budget = CallBudget(1)
    budget.consume()
    assert budget.used == 1
    with pytest.raises(BudgetExceeded):
        budget.consume()
    unlimited = CallBudget(None)
    for _ in range(10):
        unlimited.consume()
    assert unlimited.used == 10
