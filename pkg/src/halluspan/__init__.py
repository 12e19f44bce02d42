"""Character-exact hallucination span detection for model answers.

The package splits an answer into verbatim claims, grounds them in
retrieved or generated reference text, asks a verifier model to flag the
contradicted fragments, and realigns those fragments to exact character
offsets. It also ships the scorer and the vote-based run combinator.
"""

from .backends import (
    CallBudget,
    FixtureLlmBackend,
    FixtureSearchBackend,
    FixtureStore,
    HttpLlmBackend,
    HttpSearchBackend,
    LlmRequest,
    ResponseCache,
    RetryPolicy,
    SearchRequest,
    SearchResult,
    llm_complete,
    request_digest,
    search,
)
from .datamodel import (
    CharSpan,
    Claim,
    DataPoint,
    HardLabelSet,
    PipelineRecord,
    SoftLabelVector,
    TASK_LANGUAGES,
    charlen,
    slice_chars,
)
from .dataset_io import read_dataset, read_predictions, write_dataset, write_jsonl
from .ensemble import VoteStack, aggregate_votes
from .errors import (
    BackendError,
    BackendUnavailable,
    BudgetExceeded,
    ConfigError,
    CorruptEntry,
    DataError,
    FixtureMiss,
    HalluSpanError,
    IdSetMismatch,
    LengthMismatch,
    MissingPrediction,
    OutOfRange,
    SplitterParseError,
    SplitterValidationError,
    VerifierParseError,
)
from .labeling import build_hard_labels, build_soft_labels, locate_flags, merge_spans
from .pipeline import PipelineConfig, detect, run_aggregate, run_score
from .retrieval import (
    ContextBundle,
    ContextTier,
    extract_keywords,
    rank_results,
    retrieve_context,
)
from .scoring import char_iou, score_corpus, soft_correlation
from .splitting import split_into_claims, validate_claims
from .verification import Verdict, VerificationResult, verify_claims

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "BackendUnavailable",
    "BudgetExceeded",
    "CallBudget",
    "CharSpan",
    "Claim",
    "ConfigError",
    "ContextBundle",
    "ContextTier",
    "CorruptEntry",
    "DataError",
    "DataPoint",
    "FixtureLlmBackend",
    "FixtureMiss",
    "FixtureSearchBackend",
    "FixtureStore",
    "HalluSpanError",
    "HardLabelSet",
    "HttpLlmBackend",
    "HttpSearchBackend",
    "IdSetMismatch",
    "LengthMismatch",
    "LlmRequest",
    "MissingPrediction",
    "OutOfRange",
    "PipelineConfig",
    "PipelineRecord",
    "ResponseCache",
    "RetryPolicy",
    "SearchRequest",
    "SearchResult",
    "SoftLabelVector",
    "SplitterParseError",
    "SplitterValidationError",
    "TASK_LANGUAGES",
    "Verdict",
    "VerificationResult",
    "VerifierParseError",
    "VoteStack",
    "aggregate_votes",
    "build_hard_labels",
    "build_soft_labels",
    "char_iou",
    "charlen",
    "detect",
    "extract_keywords",
    "llm_complete",
    "locate_flags",
    "merge_spans",
    "rank_results",
    "read_dataset",
    "read_predictions",
    "request_digest",
    "retrieve_context",
    "run_aggregate",
    "run_score",
    "score_corpus",
    "search",
    "slice_chars",
    "soft_correlation",
    "split_into_claims",
    "validate_claims",
    "verify_claims",
    "write_dataset",
    "write_jsonl",
]
