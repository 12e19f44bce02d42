"""Grounding-context acquisition with a fixed three-tier fallback cascade.

Tier one searches the web with the original question. Tier two retries the
search with the question stripped down to content keywords. Tier three asks
an LLM to write the reference passage itself. The first tier that yields a
usable bundle wins; a bundle is usable when its search snippet was non-blank
and its assembled text is non-empty.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from html.parser import HTMLParser
from importlib import resources
from typing import Callable, Optional
from urllib.parse import urlsplit

from .backends import (
    LlmBackend,
    LlmRequest,
    SearchBackend,
    SearchRequest,
    SearchResult,
    llm_complete,
    search,
)
from .errors import (
    BackendUnavailable,
    BudgetExceeded,
    FetchFailed,
    FixtureMiss,
)
from .jsontools import parse_reply_json
from .templates import PromptTemplate

log = logging.getLogger(__name__)

KEYWORDS_SYSTEM = (
    "You compress questions into search keywords. You reply with JSON only."
)
CONTEXT_SYSTEM = (
    "You write concise factual reference passages. "
    "You reply with the passage text only."
)

PAGE_TEXT_BUDGET = 6000

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


class ContextTier(str, Enum):
    PRIMARY_SEARCH = "primary_search"
    KEYWORD_RETRY = "keyword_retry"
    LLM_GENERATED = "llm_generated"


@dataclass(frozen=True)
class ContextBundle:
    """Reference text plus where it came from.

    ``source_url`` is set exactly when the text came from a search result;
    LLM-written passages have no source.
    """

    tier: ContextTier
    text: str
    query_used: str
    source_url: Optional[str] = None

    def __post_init__(self) -> None:
        has_url = bool(self.source_url)
        if self.tier is ContextTier.LLM_GENERATED and has_url:
            raise ValueError("generated context cannot carry a source url")
        if self.tier is not ContextTier.LLM_GENERATED and not has_url:
            raise ValueError(f"{self.tier.value} context requires a source url")


def _is_wikipedia(url: str) -> bool:
    host = urlsplit(url).hostname or ""
    host = host.lower()
    return host == "wikipedia.org" or host.endswith(".wikipedia.org")


def rank_results(results: list[SearchResult]) -> Optional[SearchResult]:
    """Pick the result to ground against.

    Wikipedia pages win at their best rank; otherwise the top-ranked
    result is used. Returns None for an empty result list.
    """
    if not results:
        return None
    wiki = [r for r in results if _is_wikipedia(r.url)]
    pool = wiki if wiki else results
    return min(pool, key=lambda r: r.rank)


@lru_cache(maxsize=None)
def load_stopwords(lang: str) -> frozenset[str]:
    path = resources.files("halluspan").joinpath("stopwords").joinpath(f"{lang.lower()}.txt")
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        return frozenset()
    return frozenset(line.strip().lower() for line in raw.splitlines() if line.strip())


def heuristic_keywords(query: str, lang: str) -> str:
    """Strip function words from the query, keeping content tokens in order.

    Falls back to the original query when stripping would leave nothing.
    """
    stop = load_stopwords(lang)
    kept = [tok for tok in _TOKEN_RE.findall(query) if tok.lower() not in stop]
    if not kept:
        return query
    return " ".join(kept)


def extract_keywords(
    query: str,
    lang: str,
    *,
    mode: str = "heuristic",
    template: Optional[PromptTemplate] = None,
    model_name: Optional[str] = None,
    backend: Optional[LlmBackend] = None,
) -> str:
    """Reduce a query to its content keywords, by rule or by model.

    The LLM path degrades to the heuristic on backend outages and on
    malformed replies; fixture misses and budget exhaustion are run-level
    conditions and propagate unchanged.
    """
    if mode == "heuristic":
        return heuristic_keywords(query, lang)
    if mode != "llm":
        raise ValueError(f"unknown keyword mode {mode!r}")
    if template is None or model_name is None or backend is None:
        raise ValueError("llm keyword mode requires template, model_name and backend")
    request = LlmRequest(
        model_name=model_name,
        system_prompt=KEYWORDS_SYSTEM,
        user_prompt=template.render(query=query, lang=lang),
    )
    try:
        raw = llm_complete(request, backend)
        payload = parse_reply_json(raw)
    except (FixtureMiss, BudgetExceeded):
        raise
    except (BackendUnavailable, ValueError) as exc:
        log.warning("keyword extraction degraded to heuristic: %s", exc)
        return heuristic_keywords(query, lang)
    words = [w for w in payload if isinstance(w, str) and w.strip()] \
        if isinstance(payload, list) else []
    if not words:
        log.warning("keyword reply held no usable strings; using heuristic")
        return heuristic_keywords(query, lang)
    return " ".join(w.strip() for w in words)


# --- page text extraction ------------------------------------------------------

class _TextCollector(HTMLParser):
    SKIP = frozenset({"script", "style", "head", "noscript", "template", "svg"})

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.chunks: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs) -> None:
        if tag in self.SKIP:
            self._skip_depth += 1

    def handle_endtag(self, tag) -> None:
        if tag in self.SKIP and self._skip_depth > 0:
            self._skip_depth -= 1

    def handle_data(self, data) -> None:
        if self._skip_depth == 0 and data.strip():
            self.chunks.append(data)


def extract_main_text(html: str) -> str:
    collector = _TextCollector()
    collector.feed(html)
    text = " ".join(" ".join(chunk.split()) for chunk in collector.chunks)
    return text[:PAGE_TEXT_BUDGET]


Fetcher = Callable[[str], str]


def bundle_text(
    result: SearchResult,
    *,
    page_mode: bool = False,
    fetcher: Optional[Fetcher] = None,
) -> str:
    """Assemble the reference text for a chosen search result.

    Snippet mode concatenates title and snippet. Page mode additionally
    pulls the page body through ``fetcher``; fetch failures degrade to the
    snippet text rather than losing the datapoint.
    """
    parts = [p for p in (result.title, result.snippet) if p]
    base = "\n".join(parts)
    if not page_mode:
        return base
    if fetcher is None:
        log.warning("page mode requested without a fetcher; using snippet only")
        return base
    try:
        body = extract_main_text(fetcher(result.url))
    except FetchFailed as exc:
        log.warning("page fetch failed for %s: %s", result.url, exc)
        return base
    if body:
        return f"{base}\n{body}" if base else body
    return base


def _usable(result: Optional[SearchResult]) -> bool:
    return result is not None and bool(result.snippet.strip())


def retrieve_context(
    query: str,
    lang: str,
    *,
    search_backend: SearchBackend,
    llm_backend: LlmBackend,
    context_template: PromptTemplate,
    model_name: str,
    keyword_mode: str = "heuristic",
    keywords_template: Optional[PromptTemplate] = None,
    max_results: int = 10,
    page_mode: bool = False,
    fetcher: Optional[Fetcher] = None,
) -> ContextBundle:
    """Run the fallback cascade until a usable context bundle appears.

    Search backend failures at tiers one and two count as empty result
    lists; only fixture misses and budget exhaustion abort the cascade.
    If tier three also fails, no context exists for this datapoint and
    the datapoint-level error handling takes over.
    """
    for tier, current_query in _cascade_queries(query, lang, keyword_mode,
                                                keywords_template, model_name,
                                                llm_backend):
        try:
            results = search(SearchRequest(query=current_query, lang=lang,
                                           max_results=max_results),
                             search_backend)
        except (FixtureMiss, BudgetExceeded):
            raise
        except BackendUnavailable as exc:
            log.warning("%s search failed, falling through: %s", tier.value, exc)
            results = []
        chosen = rank_results(results)
        if not _usable(chosen):
            log.info("no usable result at tier %s for query %r", tier.value,
                     current_query)
            continue
        assert chosen is not None
        text = bundle_text(chosen, page_mode=page_mode, fetcher=fetcher)
        if not text.strip():
            continue
        return ContextBundle(tier=tier, text=text, query_used=current_query,
                             source_url=chosen.url)

    log.info("search tiers exhausted; generating context for query %r", query)
    request = LlmRequest(
        model_name=model_name,
        system_prompt=CONTEXT_SYSTEM,
        user_prompt=context_template.render(query=query, lang=lang),
    )
    passage = llm_complete(request, llm_backend).strip()
    if not passage:
        raise BackendUnavailable("generated context came back empty")
    return ContextBundle(tier=ContextTier.LLM_GENERATED, text=passage,
                         query_used=query)


def _cascade_queries(query, lang, keyword_mode, keywords_template, model_name,
                     llm_backend):
    yield ContextTier.PRIMARY_SEARCH, query
    keywords = extract_keywords(query, lang, mode=keyword_mode,
                                template=keywords_template,
                                model_name=model_name, backend=llm_backend)
    yield ContextTier.KEYWORD_RETRY, keywords
