from __future__ import annotations

import json

import pytest

from conftest import ScriptedLlm
from halluspan.errors import SplitterParseError, SplitterValidationError
from halluspan.splitting import (
    parse_splitter_output,
    split_into_claims,
    validate_claims,
)
from halluspan.templates import load_template


def _items(*texts: str) -> list[dict]:
    return [{"text": t, "start": None} for t in texts]


def test_parse_accepts_top_level_array():
    raw = '[{"text": "Yes.", "start": 0}, {"text": "It rains."}]'
    items = parse_splitter_output(raw)
    assert items == [{"text": "Yes.", "start": 0}, {"text": "It rains.", "start": None}]


def test_parse_accepts_claims_object():
    raw = '{"claims": [{"text": "Yes."}]}'
    assert parse_splitter_output(raw) == [{"text": "Yes.", "start": None}]


def test_parse_repairs_prose_wrapped_json():
    raw = 'Sure, here you go:\n[{"text": "Yes."}]\nHope that helps!'
    assert parse_splitter_output(raw) == [{"text": "Yes.", "start": None}]


def test_parse_rejects_plain_prose():
    with pytest.raises(SplitterParseError):
        parse_splitter_output("I cannot split this text, sorry.")


def test_parse_rejects_non_object_items():
    with pytest.raises(SplitterParseError):
        parse_splitter_output('["just a string"]')


def test_parse_rejects_missing_text():
    with pytest.raises(SplitterParseError):
        parse_splitter_output('[{"start": 3}]')
    with pytest.raises(SplitterParseError):
        parse_splitter_output('[{"text": ""}]')


def test_parse_ignores_non_integer_start():
    items = parse_splitter_output('[{"text": "Yes.", "start": "0"}]')
    assert items[0]["start"] is None


def test_validate_claims_recomputes_offsets():
    response = "Yes. Kaspiisk was founded in 1932."
    output = validate_claims(_items("Yes.", "Kaspiisk was founded in 1932."), response)
    assert [(c.text, c.hint_start) for c in output.claims] == [
        ("Yes.", 0),
        ("Kaspiisk was founded in 1932.", 5),
    ]
    assert [c.index for c in output.claims] == [0, 1]


def test_validate_claims_repeated_sentence():
    output = validate_claims(_items("Paris.", "Paris."), "Paris. Paris.")
    assert [c.hint_start for c in output.claims] == [0, 7]


def test_validate_claims_repeated_token_advances_cursor():
    output = validate_claims(_items("aa", "aa"), "aa bb aa")
    assert [c.hint_start for c in output.claims] == [0, 6]


def test_validate_claims_ignores_lying_start_hints():
    response = "Yes. Kaspiisk was founded in 1932."
    items = [{"text": "Kaspiisk was founded in 1932.", "start": 0}]
    output = validate_claims(items, response)
    assert output.claims[0].hint_start == 5


def test_validate_claims_drops_unmatched_text():
    response = "Paris is the capital."
    output = validate_claims(_items("Paris is the capital.", "Berlin is nice."), response)
    assert [c.text for c in output.claims] == ["Paris is the capital."]
    assert output.dropped == ("Berlin is nice.",)
    assert output.claims[0].index == 0


def test_validate_claims_requires_at_least_one_match():
    with pytest.raises(SplitterValidationError):
        validate_claims(_items("Nothing matches."), "A completely different text.")


def test_split_into_claims_end_to_end():
    response = "Yes. Kaspiisk was founded in 1932."
    reply = json.dumps(
        [{"text": "Yes."}, {"text": "Kaspiisk was founded in 1932."}]
    )
    backend = ScriptedLlm([(response, reply)])
    output = split_into_claims(
        response, "EN", load_template("splitter"), "answer-checker", backend
    )
    assert len(output.claims) == 2
    assert backend.calls[0].model_name == "answer-checker"
    assert response in backend.calls[0].user_prompt


def test_split_into_claims_rejects_empty_list():
    backend = ScriptedLlm([("", "[]")])
    with pytest.raises(SplitterValidationError):
        split_into_claims("Some text.", "EN", load_template("splitter"),
                          "answer-checker", backend)
