"""Claim verification: one batched LLM call, heavily validated reply.

All claims of a datapoint go to the verifier in a single request together
with the retrieved context. The reply assigns each claim one of three
verdicts and, for contradicted claims, the minimal substrings that clash
with the context. Flags that are not verbatim substrings of their claim
are discarded; a contradicted claim that loses every flag falls back to
flagging its whole text, because the verdict itself is the stronger signal.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum

from .backends import LlmBackend, LlmRequest, llm_complete
from .datamodel import Claim
from .errors import VerifierParseError
from .jsontools import parse_reply_json
from .templates import PromptTemplate

log = logging.getLogger(__name__)

VERIFIER_SYSTEM = (
    "You are a meticulous fact checker. You reply with JSON only."
)


class Verdict(str, Enum):
    SUPPORTED = "supported"
    CONTRADICTED = "contradicted"
    UNVERIFIABLE = "unverifiable"


@dataclass(frozen=True)
class VerificationResult:
    """Per-claim verdict; ``flagged`` is non-empty iff contradicted."""

    claim: Claim
    verdict: Verdict
    flagged: tuple[str, ...] = field(default_factory=tuple)
    notes: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if (self.verdict is Verdict.CONTRADICTED) != bool(self.flagged):
            raise ValueError(
                "flagged substrings must be present exactly for contradicted claims"
            )
        for flag in self.flagged:
            if flag not in self.claim.text:
                raise ValueError(f"flag {flag!r} is not a substring of the claim")


def build_verifier_request(
    claims: list[Claim],
    context_text: str,
    lang: str,
    template: PromptTemplate,
    model_name: str,
) -> LlmRequest:
    claims_json = json.dumps(
        [{"index": c.index, "text": c.text} for c in claims],
        ensure_ascii=False,
    )
    return LlmRequest(
        model_name=model_name,
        system_prompt=VERIFIER_SYSTEM,
        user_prompt=template.render(
            context=context_text, claims_json=claims_json, lang=lang
        ),
        max_output=2048,
    )


def parse_verifier_output(raw_reply: str, claims: list[Claim]) -> list[VerificationResult]:
    """Decode and sanitize the verifier reply against the claims sent.

    The reply must be an array of objects with integer ``index`` and string
    ``verdict``. Unknown indexes are dropped, duplicates keep the first
    occurrence, missing claims come back unverifiable, and unknown verdict
    strings are downgraded to unverifiable with a note.
    """
    try:
        payload = parse_reply_json(raw_reply)
    except ValueError as exc:
        raise VerifierParseError(str(exc), raw_reply=raw_reply) from exc
    if not isinstance(payload, list):
        raise VerifierParseError(
            "verifier reply is not an array", raw_reply=raw_reply
        )

    by_index: dict[int, dict] = {}
    valid = {c.index for c in claims}
    for pos, item in enumerate(payload):
        if not isinstance(item, dict):
            raise VerifierParseError(
                f"verdict {pos} is not an object", raw_reply=raw_reply
            )
        index = item.get("index")
        if not isinstance(index, int) or isinstance(index, bool):
            raise VerifierParseError(
                f"verdict {pos} lacks an integer index", raw_reply=raw_reply
            )
        verdict = item.get("verdict")
        if not isinstance(verdict, str):
            raise VerifierParseError(
                f"verdict {pos} lacks a verdict string", raw_reply=raw_reply
            )
        if index not in valid:
            log.warning("dropping verdict for unknown claim index %d", index)
            continue
        if index in by_index:
            log.warning("duplicate verdict for claim %d; keeping the first", index)
            continue
        by_index[index] = item

    results = []
    for claim in claims:
        item = by_index.get(claim.index)
        if item is None:
            results.append(
                VerificationResult(
                    claim=claim,
                    verdict=Verdict.UNVERIFIABLE,
                    notes=("no verdict returned for this claim",),
                )
            )
            continue
        results.append(_sanitize(claim, item))
    return results


def _sanitize(claim: Claim, item: dict) -> VerificationResult:
    notes: list[str] = []
    try:
        verdict = Verdict(item["verdict"].strip().lower())
    except ValueError:
        notes.append(f"unknown verdict {item['verdict']!r} treated as unverifiable")
        verdict = Verdict.UNVERIFIABLE

    raw_flags = item.get("flagged", [])
    if not isinstance(raw_flags, list):
        notes.append("flagged field was not a list; ignored")
        raw_flags = []
    flags: list[str] = []
    for flag in raw_flags:
        if not isinstance(flag, str) or not flag:
            notes.append("dropped empty or non-text flag")
            continue
        if flag not in claim.text:
            notes.append(f"dropped flag not found in claim: {flag!r}")
            continue
        flags.append(flag)

    if verdict is Verdict.CONTRADICTED and not flags:
        notes.append("no usable flags; flagging the whole claim")
        flags = [claim.text]
    if verdict is not Verdict.CONTRADICTED and flags:
        notes.append("flags on a non-contradicted claim were ignored")
        flags = []

    return VerificationResult(
        claim=claim, verdict=verdict, flagged=tuple(flags), notes=tuple(notes)
    )


def verify_claims(
    claims: list[Claim],
    context_text: str,
    lang: str,
    template: PromptTemplate,
    model_name: str,
    backend: LlmBackend,
) -> list[VerificationResult]:
    if not claims:
        return []
    request = build_verifier_request(claims, context_text, lang, template, model_name)
    raw = llm_complete(request, backend)
    return parse_verifier_output(raw, claims)
