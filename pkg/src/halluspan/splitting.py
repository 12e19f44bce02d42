"""Decompose a model response into atomic claims anchored to exact offsets.

The splitting itself is delegated to an LLM, which is told to copy spans
verbatim. Everything the model returns is re-validated here: each claim
text must occur in the response left to right, and its character offset is
recomputed locally rather than trusted. Claims that cannot be matched are
dropped; if nothing survives the response is unusable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .backends import LlmBackend, LlmRequest, llm_complete
from .datamodel import Claim
from .errors import SplitterParseError, SplitterValidationError
from .jsontools import parse_reply_json
from .templates import PromptTemplate

log = logging.getLogger(__name__)

SPLITTER_SYSTEM = (
    "You segment text into self-contained factual claims. "
    "You reply with JSON only."
)


@dataclass(frozen=True)
class SplitterOutput:
    """Validated splitter result: claims with verified offsets."""

    claims: tuple[Claim, ...]
    dropped: tuple[str, ...] = field(default_factory=tuple)


def build_splitter_request(
    response_text: str, lang: str, template: PromptTemplate, model_name: str
) -> LlmRequest:
    return LlmRequest(
        model_name=model_name,
        system_prompt=SPLITTER_SYSTEM,
        user_prompt=template.render(response=response_text, lang=lang),
    )


def parse_splitter_output(raw_reply: str) -> list[dict]:
    """Decode the splitter reply into a list of claim dicts.

    Accepts either a top-level array or an object with a ``claims`` array.
    Each item must be an object with a non-empty string ``text``; an
    optional integer ``start`` is kept as a hint only.
    """
    try:
        payload = parse_reply_json(raw_reply)
    except ValueError as exc:
        raise SplitterParseError(str(exc), raw_reply=raw_reply) from exc

    if isinstance(payload, dict):
        payload = payload.get("claims")
    if not isinstance(payload, list):
        raise SplitterParseError(
            "splitter reply is not an array of claims", raw_reply=raw_reply
        )

    items: list[dict] = []
    for pos, item in enumerate(payload):
        if not isinstance(item, dict):
            raise SplitterParseError(
                f"claim {pos} is not an object", raw_reply=raw_reply
            )
        text = item.get("text")
        if not isinstance(text, str) or not text:
            raise SplitterParseError(
                f"claim {pos} lacks a non-empty text field", raw_reply=raw_reply
            )
        start = item.get("start")
        if start is not None and not isinstance(start, int):
            start = None
        items.append({"text": text, "start": start})
    return items


def validate_claims(items: list[dict], response_text: str) -> SplitterOutput:
    """Re-anchor claim texts in the response, scanning left to right.

    The cursor advances past each matched claim so that repeated text maps
    to successive occurrences. Claimed ``start`` values are ignored for
    anchoring; only the local search result counts.
    """
    claims: list[Claim] = []
    dropped: list[str] = []
    cursor = 0
    for item in items:
        text = item["text"]
        found = response_text.find(text, cursor)
        if found < 0:
            dropped.append(text)
            log.warning("dropping unmatched claim text %r", text[:80])
            continue
        claims.append(Claim(index=len(claims), text=text, hint_start=found))
        cursor = found + len(text)
    if items and not claims:
        raise SplitterValidationError(
            "no claim text could be matched against the response"
        )
    return SplitterOutput(claims=tuple(claims), dropped=tuple(dropped))


def split_into_claims(
    response_text: str,
    lang: str,
    template: PromptTemplate,
    model_name: str,
    backend: LlmBackend,
) -> SplitterOutput:
    request = build_splitter_request(response_text, lang, template, model_name)
    raw = llm_complete(request, backend)
    items = parse_splitter_output(raw)
    if not items:
        raise SplitterValidationError("splitter returned an empty claim list")
    return validate_claims(items, response_text)
