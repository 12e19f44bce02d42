from __future__ import annotations

import random

import pytest

from halluspan.datamodel import (
    CharSpan,
    Claim,
    HardLabelSet,
    SoftLabelVector,
    charlen,
    slice_chars,
)
from halluspan.errors import OutOfRange

MIXED_ALPHABET = (
    "ab cd"
    "éüñß"
    "法国首都巴黎"
    "ثعاصمة"
    "राजधानी"
    "αβγ"
    "🇫🇷🎉"
    "́̈"
)


def _random_text(rng: random.Random, max_len: int = 40) -> str:
    return "".join(rng.choice(MIXED_ALPHABET) for _ in range(rng.randint(0, max_len)))


def test_charlen_counts_code_points():
    assert charlen("") == 0
    assert charlen("法国") == 2
    assert charlen("Paris") == 5
    assert charlen("🇫🇷") == 2
    assert charlen("é") == 2


def test_charlen_agrees_with_utf32_oracle():
    rng = random.Random(1234)
    for _ in range(300):
        text = _random_text(rng)
        assert charlen(text) == len(text.encode("utf-32-be")) // 4


def test_slice_chars_examples():
    assert slice_chars("巴黎是法国的首都", CharSpan(3, 5)) == "法国"
    assert slice_chars("abcdef", CharSpan(0, 3)) == "abc"
    assert slice_chars("abc", CharSpan(2, 3)) == "c"


def test_slice_chars_agrees_with_utf32_oracle():
    rng = random.Random(99)
    for _ in range(300):
        text = _random_text(rng, max_len=30)
        if len(text) < 1:
            continue
        start = rng.randrange(0, len(text))
        end = rng.randrange(start + 1, len(text) + 1)
        encoded = text.encode("utf-32-be")
        expected = encoded[4 * start : 4 * end].decode("utf-32-be")
        assert slice_chars(text, CharSpan(start, end)) == expected


def test_slice_chars_rejects_out_of_range():
    with pytest.raises(OutOfRange):
        slice_chars("abc", CharSpan(1, 4))


@pytest.mark.parametrize("start,end", [(-1, 2), (3, 3), (5, 2)])
def test_char_span_rejects_bad_bounds(start, end):
    with pytest.raises(ValueError):
        CharSpan(start, end)


def test_char_span_length_and_pair():
    span = CharSpan(3, 7)
    assert len(span) == 4
    assert span.as_pair() == [3, 7]


def test_hard_label_set_requires_canonical_input():
    HardLabelSet((CharSpan(0, 2), CharSpan(5, 6)))
    with pytest.raises(ValueError):
        HardLabelSet((CharSpan(0, 3), CharSpan(2, 5)))
    with pytest.raises(ValueError):
        HardLabelSet((CharSpan(0, 3), CharSpan(3, 5)))
    with pytest.raises(ValueError):
        HardLabelSet((CharSpan(4, 6), CharSpan(0, 2)))


def test_from_spans_coalesces_overlap_and_adjacency():
    merged = HardLabelSet.from_spans([CharSpan(0, 3), CharSpan(2, 5), CharSpan(7, 8)])
    assert merged.to_pairs() == [[0, 5], [7, 8]]
    adjacent = HardLabelSet.from_spans([CharSpan(0, 3), CharSpan(3, 6)])
    assert adjacent.to_pairs() == [[0, 6]]
    contained = HardLabelSet.from_spans([CharSpan(0, 10), CharSpan(2, 4)])
    assert contained.to_pairs() == [[0, 10]]


def test_hard_label_set_char_count():
    labels = HardLabelSet.from_pairs([[0, 5], [7, 8]])
    assert labels.char_count() == 6
    assert labels.max_end() == 8
    assert HardLabelSet(()).char_count() == 0


def test_soft_label_vector_bounds():
    SoftLabelVector((0.0, 0.5, 1.0))
    with pytest.raises(ValueError):
        SoftLabelVector((0.0, 1.5))
    with pytest.raises(ValueError):
        SoftLabelVector((-0.1,))


def test_soft_label_vector_run_round_trip():
    vec = SoftLabelVector.from_runs([(2, 5, 1.0), (7, 8, 0.5)], 10)
    assert vec.probs == (0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.5, 0.0, 0.0)
    runs = vec.to_runs()
    assert runs == [
        {"start": 2, "end": 5, "prob": 1.0},
        {"start": 7, "end": 8, "prob": 0.5},
    ]
    again = SoftLabelVector.from_runs([(r["start"], r["end"], r["prob"]) for r in runs], 10)
    assert again == vec


def test_soft_label_vector_from_runs_out_of_range():
    with pytest.raises(OutOfRange):
        SoftLabelVector.from_runs([(8, 12, 1.0)], 10)


def test_claim_window():
    claim = Claim(index=0, text="法国", hint_start=3)
    assert claim.window() == CharSpan(3, 5)
    assert Claim(index=0, text="x").window() is None
    with pytest.raises(ValueError):
        Claim(index=0, text="")
