"""Evaluation: span overlap and soft-probability rank agreement.

Two numbers per datapoint. Hard spans are compared as character sets via
interval arithmetic (intersection over union, with two empty sets counting
as perfect agreement). Soft vectors are compared by Spearman rank
correlation with average ranks on ties; a constant vector makes rank
correlation undefined, so those pairs score 1.0 when the vectors agree
everywhere and 0.0 otherwise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

from .datamodel import DataPoint, HardLabelSet, SoftLabelVector, charlen
from .dataset_io import PredictionRow
from .errors import LengthMismatch, MissingPrediction

log = logging.getLogger(__name__)


def char_iou(pred: HardLabelSet, gold: HardLabelSet) -> float:
    """Intersection over union of the flagged character sets."""
    pred_total = pred.char_count()
    gold_total = gold.char_count()
    inter = _intersection_size(pred.spans, gold.spans)
    union = pred_total + gold_total - inter
    if union == 0:
        return 1.0
    return inter / union


def _intersection_size(a, b) -> int:
    total = 0
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i].start, b[j].start)
        hi = min(a[i].end, b[j].end)
        if lo < hi:
            total += hi - lo
        if a[i].end <= b[j].end:
            i += 1
        else:
            j += 1
    return total


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def soft_correlation(
    pred: Sequence[float] | SoftLabelVector,
    gold: Sequence[float] | SoftLabelVector,
) -> float:
    """Spearman correlation between two probability vectors.

    Ties share their average rank. When either vector is constant the
    correlation is undefined, so the score degrades to exact agreement:
    1.0 if the vectors are elementwise equal, 0.0 otherwise.
    """
    x = list(pred.probs if isinstance(pred, SoftLabelVector) else pred)
    y = list(gold.probs if isinstance(gold, SoftLabelVector) else gold)
    if len(x) != len(y):
        raise LengthMismatch(f"vector lengths differ: {len(x)} vs {len(y)}")
    if _is_constant(x) or _is_constant(y):
        return 1.0 if x == y else 0.0
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    mx = math.fsum(rx) / len(rx)
    my = math.fsum(ry) / len(ry)
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(rx, ry))
    sxx = math.fsum((a - mx) ** 2 for a in rx)
    syy = math.fsum((b - my) ** 2 for b in ry)
    return sxy / math.sqrt(sxx * syy)


def _is_constant(values: list[float]) -> bool:
    return len(values) < 2 or all(v == values[0] for v in values)


@dataclass(frozen=True)
class DataPointScore:
    id: str
    lang: str
    iou: float
    cor: float


@dataclass(frozen=True)
class ScoreReport:
    scores: tuple[DataPointScore, ...]
    by_language: dict[str, dict[str, float]] = field(default_factory=dict)
    overall: dict[str, float] = field(default_factory=dict)

    def to_table(self) -> str:
        """Plain-text summary with Language, IoU and Cor columns."""
        rows = [("Language", "IoU", "Cor")]
        for lang in sorted(self.by_language):
            stats = self.by_language[lang]
            rows.append((lang, f"{stats['iou']:.4f}", f"{stats['cor']:.4f}"))
        rows.append(("all", f"{self.overall['iou']:.4f}", f"{self.overall['cor']:.4f}"))
        widths = [max(len(r[c]) for r in rows) for c in range(3)]
        lines = []
        for idx, row in enumerate(rows):
            lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip())
            if idx == 0:
                lines.append("  ".join("-" * widths[c] for c in range(3)))
        return "\n".join(lines)


def _gold_labels(point: DataPoint) -> tuple[HardLabelSet, SoftLabelVector]:
    length = charlen(point.model_output_text)
    hard = point.gold_hard if point.gold_hard is not None else HardLabelSet(())
    if point.gold_soft is not None:
        soft = point.gold_soft
        if len(soft.probs) != length:
            soft = SoftLabelVector(
                tuple(soft.probs[:length]) + (0.0,) * max(0, length - len(soft.probs))
            )
    else:
        probs = [0.0] * length
        for span in hard:
            for i in range(span.start, min(span.end, length)):
                probs[i] = 1.0
        soft = SoftLabelVector(tuple(probs))
    return hard, soft


def score_datapoint(pred: PredictionRow, gold: DataPoint) -> DataPointScore:
    length = charlen(gold.model_output_text)
    if pred.text_len is not None and pred.text_len != length:
        raise LengthMismatch(
            f"prediction for {gold.id} reports length {pred.text_len}, "
            f"gold text has {length}"
        )
    gold_hard, gold_soft = _gold_labels(gold)
    pred_hard = pred.hard_set()
    pred_soft = pred.dense_soft(length)
    return DataPointScore(
        id=gold.id,
        lang=gold.lang,
        iou=char_iou(pred_hard, gold_hard),
        cor=soft_correlation(pred_soft, gold_soft),
    )


def score_corpus(
    predictions: list[PredictionRow], golds: list[DataPoint]
) -> ScoreReport:
    """Score a prediction file against its gold dataset.

    Every gold datapoint must have a prediction; error rows count as empty
    predictions because the system produced no spans for them. Predictions
    for unknown ids are skipped with a warning.
    """
    by_id: dict[str, PredictionRow] = {}
    for row in predictions:
        if row.id in by_id:
            log.warning("duplicate prediction for id %s; keeping the first", row.id)
            continue
        by_id[row.id] = row

    gold_ids = {g.id for g in golds}
    for extra in sorted(set(by_id) - gold_ids):
        log.warning("prediction for unknown id %s skipped", extra)

    missing = sorted(gold_ids - set(by_id))
    if missing:
        raise MissingPrediction(missing)

    scores = []
    for gold in golds:
        row = by_id[gold.id]
        if row.is_error():
            row = PredictionRow(id=row.id, lang=row.lang, text_len=None,
                                hard_pairs=[], soft_runs=[])
        scores.append(score_datapoint(row, gold))

    by_language: dict[str, dict[str, float]] = {}
    for lang in sorted({s.lang for s in scores}):
        group = [s for s in scores if s.lang == lang]
        by_language[lang] = _means(group)
    return ScoreReport(
        scores=tuple(scores),
        by_language=by_language,
        overall=_means(scores),
    )


def _means(scores: Sequence[DataPointScore]) -> dict[str, float]:
    n = len(scores)
    return {
        "iou": math.fsum(s.iou for s in scores) / n,
        "cor": math.fsum(s.cor for s in scores) / n,
        "count": float(n),
    }


def ensure_covered(predictions: list[PredictionRow], golds: list[DataPoint]) -> None:
    missing = sorted({g.id for g in golds} - {p.id for p in predictions})
    if missing:
        raise MissingPrediction(missing)
