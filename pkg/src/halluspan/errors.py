"""Exception hierarchy shared across the pipeline.

Exit-code mapping for the CLI lives in ``halluspan.cli``; the classes here
only classify failures (usage/config, data, backend) so callers can react
without string matching.
"""

from __future__ import annotations


class HalluSpanError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(HalluSpanError):
    """Unusable configuration or CLI usage (exit code 1)."""


# --- data errors (exit code 2) ---------------------------------------------

class DataError(HalluSpanError):
    """Base class for malformed or inconsistent data."""


class OutOfRange(DataError):
    """A character span exceeds the bounds of its text."""


class MalformedLine(DataError):
    """A JSONL line is not valid JSON or misses a required field."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class InvariantViolation(DataError):
    """A parsed record violates a documented invariant (e.g. span bounds)."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class LengthMismatch(DataError):
    """Two per-character vectors (or a vector and its text) differ in length."""


class NonBinaryVoter(DataError):
    """An ensemble voter vector contains values other than 0.0 and 1.0."""


class MissingPrediction(DataError):
    """A gold datapoint has no matching prediction."""

    def __init__(self, ids: list[str]):
        super().__init__("missing predictions for ids: " + ", ".join(ids))
        self.ids = list(ids)


class IdSetMismatch(DataError):
    """Prediction files being aggregated do not share the same id set."""


class SplitterParseError(DataError):
    """The splitter reply is not contract-valid JSON after one repair pass."""

    def __init__(self, message: str, raw_reply: str = ""):
        super().__init__(message)
        self.raw_reply = raw_reply


class SplitterValidationError(DataError):
    """No splitter candidate survived the verbatim-substring check."""


class VerifierParseError(DataError):
    """The verifier reply is not schema-valid JSON after one repair pass."""

    def __init__(self, message: str, raw_reply: str = ""):
        super().__init__(message)
        self.raw_reply = raw_reply


# --- backend errors (exit code 3) -------------------------------------------

class BackendError(HalluSpanError):
    """Base class for external-capability failures."""


class BackendUnavailable(BackendError):
    """Network/auth/protocol failure after the retry policy is exhausted."""


class FixtureMiss(BackendError):
    """Replay mode was asked for a request that has no stored fixture."""


class BudgetExceeded(BackendError):
    """The per-run cap on live backend calls was hit."""


class CorruptEntry(BackendError):
    """A stored cache entry failed its checksum (treated as absent by callers)."""


class FetchFailed(BackendError):
    """A page fetch failed; callers degrade to snippet mode."""
