"""JSONL (de)serialization for datapoints and prediction records.

Input lines carry ``id``, ``lang``, ``model_input``, ``model_output_text``
and optionally ``hard_labels`` (``[[start, end], ...]``) and ``soft_labels``
(sorted disjoint runs ``{"start": int, "end": int, "prob": float}``; unlisted
characters have probability 0.0).  Prediction lines use the same label shapes
plus ``id``; this package also writes ``lang``, ``text_len`` and
``provenance`` for downstream convenience.  Encoding is UTF-8 without BOM.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from .datamodel import (
    TASK_LANGUAGES,
    CharSpan,
    DataPoint,
    HardLabelSet,
    PipelineRecord,
    SoftLabelVector,
    charlen,
)
from .errors import InvariantViolation, MalformedLine, OutOfRange

log = logging.getLogger(__name__)

_REQUIRED_FIELDS = ("id", "lang", "model_input", "model_output_text")


def _parse_hard_labels(raw, text_len: int, line_no: int) -> HardLabelSet:
    if not isinstance(raw, list):
        raise MalformedLine(line_no, "hard_labels must be a list of [start, end] pairs")
    spans = []
    for pair in raw:
        if (
            not isinstance(pair, (list, tuple))
            or len(pair) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in pair)
        ):
            raise MalformedLine(line_no, f"bad hard label entry {pair!r}")
        start, end = pair
        if not (0 <= start < end):
            raise InvariantViolation(line_no, f"invalid hard span [{start}, {end}]")
        if end > text_len:
            raise InvariantViolation(
                line_no, f"hard span [{start}, {end}] exceeds text of length {text_len}"
            )
        spans.append(CharSpan(start, end))
    # Overlapping/adjacent gold spans are semantically a single region; coalesce.
    return HardLabelSet.from_spans(spans)


def _parse_soft_labels(raw, text_len: int, line_no: int) -> SoftLabelVector:
    if not isinstance(raw, list):
        raise MalformedLine(line_no, "soft_labels must be a list of run objects")
    runs: list[tuple[int, int, float]] = []
    prev_end = -1
    for entry in raw:
        if not isinstance(entry, dict) or not {"start", "end", "prob"} <= set(entry):
            raise MalformedLine(line_no, f"bad soft label entry {entry!r}")
        start, end, prob = entry["start"], entry["end"], entry["prob"]
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (start, end)):
            raise MalformedLine(line_no, f"bad soft label bounds {entry!r}")
        if not isinstance(prob, (int, float)) or isinstance(prob, bool):
            raise MalformedLine(line_no, f"bad soft label prob {entry!r}")
        if not (0 <= start < end <= text_len):
            raise InvariantViolation(
                line_no, f"soft run [{start}, {end}] exceeds text of length {text_len}"
            )
        if not (0.0 <= prob <= 1.0):
            raise InvariantViolation(line_no, f"soft run probability {prob!r} outside [0, 1]")
        if start < prev_end:
            raise InvariantViolation(line_no, "soft runs must be sorted and disjoint")
        prev_end = end
        runs.append((start, end, float(prob)))
    return SoftLabelVector.from_runs(runs, text_len)


def datapoint_from_dict(obj: dict, line_no: int = 0) -> DataPoint:
    """Validate one parsed JSONL object into a DataPoint."""
    for name in _REQUIRED_FIELDS:
        if name not in obj:
            raise MalformedLine(line_no, f"missing required field {name!r}")
        if not isinstance(obj[name], str):
            raise MalformedLine(line_no, f"field {name!r} must be a string")
    lang = obj["lang"]
    if lang not in TASK_LANGUAGES:
        log.warning("line %d: unknown language code %r (accepted)", line_no, lang)
    text = obj["model_output_text"]
    text_len = charlen(text)
    gold_hard = None
    if "hard_labels" in obj and obj["hard_labels"] is not None:
        gold_hard = _parse_hard_labels(obj["hard_labels"], text_len, line_no)
    gold_soft = None
    if "soft_labels" in obj and obj["soft_labels"] is not None:
        gold_soft = _parse_soft_labels(obj["soft_labels"], text_len, line_no)
    return DataPoint(
        id=obj["id"],
        lang=lang,
        model_input=obj["model_input"],
        model_output_text=text,
        gold_hard=gold_hard,
        gold_soft=gold_soft,
    )


def read_dataset(path: Union[str, Path]) -> list[DataPoint]:
    """Parse a JSONL dataset file; violations are reported with line numbers."""
    points: list[DataPoint] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise MalformedLine(line_no, "line is not a JSON object")
            points.append(datapoint_from_dict(obj, line_no))
    return points


def datapoint_to_dict(point: DataPoint) -> dict:
    obj: dict = {
        "id": point.id,
        "lang": point.lang,
        "model_input": point.model_input,
        "model_output_text": point.model_output_text,
    }
    if point.gold_hard is not None:
        obj["hard_labels"] = point.gold_hard.to_pairs()
    if point.gold_soft is not None:
        obj["soft_labels"] = point.gold_soft.to_runs()
    return obj


def write_dataset(points: Iterable[DataPoint], path: Union[str, Path]) -> None:
    write_jsonl((datapoint_to_dict(p) for p in points), path)


def write_jsonl(objs: Iterable[dict], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for obj in objs:
            fh.write(json.dumps(obj, ensure_ascii=False))
            fh.write("\n")


@dataclass
class PredictionRow:
    """One prediction line as read back from disk (labels still in wire shape)."""

    id: str
    lang: Optional[str] = None
    text_len: Optional[int] = None
    hard_pairs: Optional[list[list[int]]] = None
    soft_runs: Optional[list[dict]] = None
    provenance: dict = field(default_factory=dict)
    error: Optional[dict] = None

    def is_error(self) -> bool:
        return self.error is not None

    def dense_soft(self, length: int) -> SoftLabelVector:
        """Densify the stored soft runs against a known text length."""
        runs = [(r["start"], r["end"], float(r["prob"])) for r in self.soft_runs or []]
        try:
            return SoftLabelVector.from_runs(runs, length)
        except OutOfRange as exc:
            raise OutOfRange(f"prediction {self.id!r}: {exc}") from exc

    def hard_set(self) -> HardLabelSet:
        return HardLabelSet.from_pairs(self.hard_pairs or [])

    def min_length(self) -> int:
        """Smallest text length consistent with the stored labels."""
        ends = [r["end"] for r in self.soft_runs or []]
        ends += [pair[1] for pair in self.hard_pairs or []]
        return max(ends, default=0)


def read_predictions(path: Union[str, Path]) -> list[PredictionRow]:
    rows: list[PredictionRow] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict) or "id" not in obj:
                raise MalformedLine(line_no, "prediction line must be an object with an 'id'")
            error = None
            if "error" in obj or "stage" in obj:
                error = {"stage": obj.get("stage"), "error": obj.get("error")}
            rows.append(
                PredictionRow(
                    id=obj["id"],
                    lang=obj.get("lang"),
                    text_len=obj.get("text_len"),
                    hard_pairs=obj.get("hard_labels"),
                    soft_runs=obj.get("soft_labels"),
                    provenance=obj.get("provenance") or {},
                    error=error,
                )
            )
    return rows


def record_to_line(record: Union[PipelineRecord, dict]) -> dict:
    if isinstance(record, PipelineRecord):
        return record.to_json_dict()
    return record
