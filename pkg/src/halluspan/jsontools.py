"""Strict-then-repair JSON parsing for model replies.

Backends are instructed to answer with bare JSON, but real replies sometimes
arrive wrapped in code fences or prose.  The policy is bounded: one strict
parse, then exactly one repair pass that extracts the first parseable
top-level JSON array or object, then strict parse again.  Nothing beyond
that, because unbounded repair would hide backend drift.
"""

from __future__ import annotations

import json
import re

_OPENERS = re.compile(r"[\[{]")


def extract_json_block(text: str):
    """Return the first parseable top-level JSON array/object in ``text``.

    Returns the decoded value, or None when no candidate parses.
    """
    decoder = json.JSONDecoder()
    for match in _OPENERS.finditer(text):
        try:
            value, _ = decoder.raw_decode(text, match.start())
        except ValueError:
            continue
        return value
    return None


def parse_reply_json(raw: str):
    """Parse a model reply as JSON with the single documented repair pass.

    Raises ValueError when neither the strict parse nor the repair pass
    yields a JSON value.
    """
    try:
        return json.loads(raw)
    except ValueError:
        pass
    value = extract_json_block(raw)
    if value is None:
        raise ValueError("reply contains no parseable JSON value")
    return value


def canonical_json(value) -> str:
    """Deterministic JSON text: sorted keys, no whitespace, raw unicode."""
    return json.dumps(value, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
