"""Core domain types and the Unicode indexing rules every module shares.

All character offsets in this package count Unicode scalar values (what
Python's ``str`` indexes expose): never bytes, never grapheme clusters.
Spans are half-open ``[start, end)`` and therefore never empty.  Input text
is used exactly as given; there is no normalization step anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import OutOfRange

#: The 14 task languages. Unknown codes are accepted with a warning elsewhere.
TASK_LANGUAGES = (
    "AR", "CA", "CS", "DE", "EN", "ES", "EU", "FA", "FI", "FR", "HI", "IT", "SV", "ZH",
)


def charlen(text: str) -> int:
    """Number of Unicode scalar values in ``text``."""
    return len(text)


@dataclass(frozen=True, order=True)
class CharSpan:
    """Half-open character span ``[start, end)``; always non-empty."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span ({self.start}, {self.end}): need 0 <= start < end")

    def __len__(self) -> int:
        return self.end - self.start

    def as_pair(self) -> list[int]:
        return [self.start, self.end]


def slice_chars(text: str, span: CharSpan) -> str:
    """Substring covering exactly the scalar values in ``[span.start, span.end)``.

    Raises OutOfRange when the span reaches past the end of ``text``.
    """
    if span.end > len(text):
        raise OutOfRange(f"span ({span.start}, {span.end}) exceeds text of length {len(text)}")
    return text[span.start:span.end]


@dataclass(frozen=True)
class HardLabelSet:
    """Discrete labeled spans: sorted, pairwise disjoint, non-adjacent.

    Use :meth:`from_spans` to build one from arbitrary spans; the direct
    constructor insists the input is already canonical.
    """

    spans: tuple[CharSpan, ...] = ()

    def __post_init__(self) -> None:
        prev_end = None
        for span in self.spans:
            if prev_end is not None and span.start <= prev_end:
                raise ValueError("spans must be sorted, disjoint, and non-adjacent")
            prev_end = span.end

    @classmethod
    def from_spans(cls, spans: Iterable[CharSpan]) -> "HardLabelSet":
        """Canonicalize: sort by start and coalesce overlapping or adjacent spans."""
        ordered = sorted(spans, key=lambda s: (s.start, s.end))
        merged: list[CharSpan] = []
        for span in ordered:
            if merged and span.start <= merged[-1].end:
                if span.end > merged[-1].end:
                    merged[-1] = CharSpan(merged[-1].start, span.end)
            else:
                merged.append(span)
        return cls(tuple(merged))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[int]]) -> "HardLabelSet":
        return cls.from_spans(CharSpan(int(a), int(b)) for a, b in pairs)

    def to_pairs(self) -> list[list[int]]:
        return [s.as_pair() for s in self.spans]

    def char_count(self) -> int:
        return sum(len(s) for s in self.spans)

    def max_end(self) -> int:
        return self.spans[-1].end if self.spans else 0

    def __iter__(self):
        return iter(self.spans)

    def __len__(self) -> int:
        return len(self.spans)


@dataclass(frozen=True)
class SoftLabelVector:
    """Per-character probabilities over a target text, every entry in [0, 1]."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        for p in self.probs:
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"probability {p!r} outside [0, 1]")

    @classmethod
    def zeros(cls, length: int) -> "SoftLabelVector":
        return cls((0.0,) * length)

    @classmethod
    def from_runs(cls, runs: Iterable[tuple[int, int, float]], length: int) -> "SoftLabelVector":
        """Densify sorted, disjoint ``(start, end, prob)`` runs; gaps get 0.0."""
        probs = [0.0] * length
        for start, end, prob in runs:
            if not (0 <= start < end <= length):
                raise OutOfRange(f"run ({start}, {end}) exceeds vector of length {length}")
            for i in range(start, end):
                probs[i] = prob
        return cls(tuple(probs))

    def to_runs(self) -> list[dict]:
        """Serialize as maximal runs of equal nonzero probability."""
        runs: list[dict] = []
        i, n = 0, len(self.probs)
        while i < n:
            p = self.probs[i]
            j = i + 1
            while j < n and self.probs[j] == p:
                j += 1
            if p != 0.0:
                runs.append({"start": i, "end": j, "prob": p})
            i = j
        return runs

    def __len__(self) -> int:
        return len(self.probs)

    def __iter__(self):
        return iter(self.probs)


@dataclass(frozen=True)
class Claim:
    """An atomic verifiable proposition, verbatim from the model output."""

    index: int
    text: str
    hint_start: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("claim text must be non-empty")

    def window(self) -> Optional[CharSpan]:
        """The claim's occurrence span in the response, when the hint is known."""
        if self.hint_start is None:
            return None
        return CharSpan(self.hint_start, self.hint_start + len(self.text))


@dataclass(frozen=True)
class DataPoint:
    """One task instance: a user query and the model response to annotate."""

    id: str
    lang: str
    model_input: str
    model_output_text: str
    gold_hard: Optional[HardLabelSet] = None
    gold_soft: Optional[SoftLabelVector] = None


@dataclass
class PipelineRecord:
    """Final per-datapoint prediction plus the trace needed to audit it."""

    id: str
    lang: str
    predicted_hard: HardLabelSet
    predicted_soft: SoftLabelVector
    provenance: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "lang": self.lang,
            "text_len": len(self.predicted_soft),
            "hard_labels": self.predicted_hard.to_pairs(),
            "soft_labels": [
                {"start": r["start"], "end": r["end"], "prob": r["prob"]}
                for r in self.predicted_soft.to_runs()
            ],
            "provenance": self.provenance,
        }
