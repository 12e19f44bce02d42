"""Turn flagged substrings into character-exact span labels.

Flags arrive as verbatim fragments of a claim. Each is re-anchored in the
full response text, searching first inside the claim's own window and only
then across the whole response; fragments that cannot be found anywhere are
dropped. Located spans become binary per-character probabilities, and hard
spans are recovered as maximal runs above threshold.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

from .datamodel import CharSpan, HardLabelSet, SoftLabelVector, charlen
from .verification import VerificationResult

log = logging.getLogger(__name__)

HARD_THRESHOLD = 0.5


@dataclass(frozen=True)
class LocatedFlag:
    text: str
    span: CharSpan
    claim_index: int


def locate_flags(
    results: Iterable[VerificationResult], response_text: str
) -> list[LocatedFlag]:
    """Anchor every flagged fragment to exact offsets in the response.

    The claim's window (its hint offset plus its own length) is searched
    first so that a fragment repeated elsewhere in the response resolves to
    the occurrence inside the claim that produced it.
    """
    located: list[LocatedFlag] = []
    for result in results:
        claim = result.claim
        for flag in result.flagged:
            start = -1
            if claim.hint_start is not None:
                window_end = claim.hint_start + charlen(claim.text)
                start = response_text.find(flag, claim.hint_start, window_end)
            if start < 0:
                start = response_text.find(flag)
            if start < 0:
                log.warning(
                    "dropping flag %r: not present in the response", flag[:80]
                )
                continue
            located.append(
                LocatedFlag(
                    text=flag,
                    span=CharSpan(start, start + charlen(flag)),
                    claim_index=claim.index,
                )
            )
    return located


def merge_spans(spans: Iterable[CharSpan]) -> HardLabelSet:
    """Canonical span set: sorted, with overlapping and adjacent runs fused."""
    return HardLabelSet.from_spans(spans)


def build_soft_labels(flags: Iterable[LocatedFlag], length: int) -> SoftLabelVector:
    """Binary per-character vector: 1.0 inside any flagged span, else 0.0."""
    probs = [0.0] * length
    for flag in flags:
        if flag.span.end > length:
            raise ValueError(
                f"flag span {flag.span.as_pair()} exceeds response length {length}"
            )
        for i in range(flag.span.start, flag.span.end):
            probs[i] = 1.0
    return SoftLabelVector(tuple(probs))


def build_hard_labels(
    probs: Sequence[float] | SoftLabelVector, threshold: float = HARD_THRESHOLD
) -> HardLabelSet:
    """Maximal runs of characters whose probability reaches the threshold.

    The comparison is inclusive: a probability exactly at the threshold
    counts as hallucinated.
    """
    values = probs.probs if isinstance(probs, SoftLabelVector) else probs
    spans: list[CharSpan] = []
    run_start = None
    for i, p in enumerate(values):
        if p >= threshold:
            if run_start is None:
                run_start = i
        elif run_start is not None:
            spans.append(CharSpan(run_start, i))
            run_start = None
    if run_start is not None:
        spans.append(CharSpan(run_start, len(values)))
    return HardLabelSet(tuple(spans))
