from __future__ import annotations

import socket

import pytest

from halluspan.backends import LlmRequest, SearchRequest, SearchResult


class SocketBlocked(RuntimeError):
    pass


@pytest.fixture(autouse=True)
def forbid_sockets(monkeypatch):
    """No test may touch the network; HTTP tests use in-process transports."""

    def blocked(*args, **kwargs):
        raise SocketBlocked("test attempted to open a network connection")

    monkeypatch.setattr(socket.socket, "connect", blocked)
    monkeypatch.setattr(socket, "create_connection", blocked)
    yield


class ScriptedLlm:
    """Maps substrings of the user prompt to canned replies, in order."""

    def __init__(self, rules: list[tuple[str, str]]):
        self.rules = rules
        self.calls: list[LlmRequest] = []

    def complete(self, request: LlmRequest) -> str:
        self.calls.append(request)
        for needle, reply in self.rules:
            if needle in request.user_prompt:
                return reply
        raise AssertionError(
            f"no scripted reply matches prompt: {request.user_prompt[:120]!r}"
        )

    def describe(self) -> str:
        return "scripted-llm"


class ScriptedSearch:
    """Maps exact query strings to canned result lists."""

    def __init__(self, by_query: dict[str, list[SearchResult]]):
        self.by_query = by_query
        self.calls: list[SearchRequest] = []

    def search(self, request: SearchRequest) -> list[SearchResult]:
        self.calls.append(request)
        if request.query not in self.by_query:
            raise AssertionError(f"no scripted results for query {request.query!r}")
        return self.by_query[request.query]

    def describe(self) -> str:
        return "scripted-search"


def make_result(rank: int, url: str, snippet: str = "a snippet", title: str = "a title") -> SearchResult:
    return SearchResult(rank=rank, url=url, title=title, snippet=snippet)
