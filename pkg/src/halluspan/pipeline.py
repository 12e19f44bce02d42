"""End-to-end runs: configuration, backend wiring, detection, scoring.

A detection run maps every input datapoint to either a prediction record or
an error record; one bad datapoint never aborts the run. The only run-fatal
condition is an exhausted call budget, because past that point every
remaining datapoint would burn spend just to fail. Work is spread over a
thread pool but output order always follows input order, so a run is
byte-for-byte reproducible at any worker count as long as the backends
answer deterministically (replay mode guarantees that).
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import yaml

from .backends import (
    CallBudget,
    FixtureLlmBackend,
    FixtureSearchBackend,
    FixtureStore,
    HttpLlmBackend,
    HttpSearchBackend,
    LLM_KEY_ENV,
    LlmBackend,
    RecordingLlmBackend,
    RecordingSearchBackend,
    ResponseCache,
    SEARCH_KEY_ENV,
    SearchBackend,
)
from .datamodel import DataPoint, PipelineRecord, charlen
from .dataset_io import PredictionRow, read_dataset, read_predictions, write_jsonl
from .ensemble import VoteStack, aggregate_votes
from .errors import (
    BudgetExceeded,
    ConfigError,
    DataError,
    HalluSpanError,
    IdSetMismatch,
    LengthMismatch,
)
from .labeling import HARD_THRESHOLD, build_hard_labels, build_soft_labels, locate_flags
from .retrieval import retrieve_context
from .scoring import ScoreReport, score_corpus
from .splitting import split_into_claims
from .templates import DEFAULT_TEMPLATES, PromptTemplate, load_template
from .verification import verify_claims

log = logging.getLogger(__name__)

MODES = ("live", "record", "replay")


@dataclass
class PipelineConfig:
    llm_endpoint: str = ""
    llm_model: str = ""
    llm_models_by_lang: dict[str, str] = field(default_factory=dict)
    llm_temperature: float = 0.0
    llm_max_output: int = 1024
    search_endpoint: str = ""
    search_engine_id: str = ""
    search_max_results: int = 10
    keyword_mode: str = "heuristic"
    retrieval_mode: str = "snippet"
    workers: int = 4
    threshold: float = HARD_THRESHOLD
    budget: Optional[int] = None
    fixtures_dir: Optional[Path] = None
    cache_dir: Optional[Path] = None
    templates_dir: Optional[Path] = None

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file is not valid YAML: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a mapping")

        llm = raw.get("llm", {}) or {}
        search = raw.get("search", {}) or {}
        retrieval = raw.get("retrieval", {}) or {}
        run = raw.get("run", {}) or {}
        base = path.parent

        def _path(section: dict, key: str) -> Optional[Path]:
            value = section.get(key)
            if value is None:
                return None
            p = Path(value)
            return p if p.is_absolute() else base / p

        try:
            config = cls(
                llm_endpoint=str(llm.get("endpoint", "")),
                llm_model=str(llm.get("model", "")),
                llm_models_by_lang={
                    str(k).lower(): str(v)
                    for k, v in (llm.get("models") or {}).items()
                },
                llm_temperature=float(llm.get("temperature", 0.0)),
                llm_max_output=int(llm.get("max_output", 1024)),
                search_endpoint=str(search.get("endpoint", "")),
                search_engine_id=str(search.get("engine_id", "")),
                search_max_results=int(search.get("max_results", 10)),
                keyword_mode=str(retrieval.get("keyword_mode", "heuristic")),
                retrieval_mode=str(retrieval.get("mode", "snippet")),
                workers=int(run.get("workers", 4)),
                threshold=float(run.get("threshold", HARD_THRESHOLD)),
                budget=None if run.get("budget") is None else int(run["budget"]),
                fixtures_dir=_path(run, "fixtures_dir"),
                cache_dir=_path(run, "cache_dir"),
                templates_dir=_path(run, "templates_dir"),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc
        config.validate()
        return config

    def validate(self) -> None:
        if self.keyword_mode not in ("heuristic", "llm"):
            raise ConfigError(f"unknown keyword_mode {self.keyword_mode!r}")
        if self.retrieval_mode not in ("snippet", "page"):
            raise ConfigError(f"unknown retrieval mode {self.retrieval_mode!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not (0.0 <= self.threshold <= 1.0):
            raise ConfigError("threshold must lie in [0, 1]")
        if self.budget is not None and self.budget < 1:
            raise ConfigError("budget must be >= 1 when set")

    def model_for(self, lang: str) -> str:
        return self.llm_models_by_lang.get(lang.lower(), self.llm_model)


def _require_env(name: str) -> str:
    value = os.environ.get(name, "")
    if not value:
        raise ConfigError(f"environment variable {name} is required for this mode")
    return value


def build_backends(
    config: PipelineConfig, mode: str
) -> tuple[LlmBackend, SearchBackend]:
    """Wire the LLM and search clients for the requested mode.

    Replay needs only the fixture directory and never asks for credentials.
    Live and record read API keys from the environment; record additionally
    persists every reply as a fixture.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")

    if mode == "replay":
        if config.fixtures_dir is None:
            raise ConfigError("replay mode requires run.fixtures_dir")
        store = FixtureStore(config.fixtures_dir)
        return FixtureLlmBackend(store), FixtureSearchBackend(store)

    if not config.llm_endpoint or not config.llm_model:
        raise ConfigError("live and record modes require llm.endpoint and llm.model")
    if not config.search_endpoint or not config.search_engine_id:
        raise ConfigError(
            "live and record modes require search.endpoint and search.engine_id"
        )

    budget = CallBudget(config.budget) if config.budget is not None else None
    cache = ResponseCache(config.cache_dir) if config.cache_dir else None
    llm: LlmBackend = HttpLlmBackend(
        config.llm_endpoint, _require_env(LLM_KEY_ENV), budget=budget, cache=cache
    )
    search: SearchBackend = HttpSearchBackend(
        config.search_endpoint,
        _require_env(SEARCH_KEY_ENV),
        config.search_engine_id,
        budget=budget,
        cache=cache,
    )
    if mode == "record":
        if not config.fixtures_dir:
            raise ConfigError("record mode requires run.fixtures_dir")
        store = FixtureStore(config.fixtures_dir)
        return RecordingLlmBackend(llm, store), RecordingSearchBackend(search, store)
    return llm, search


def _load_templates(config: PipelineConfig) -> dict[str, PromptTemplate]:
    templates = {}
    for name, filename in DEFAULT_TEMPLATES.items():
        override = None
        if config.templates_dir is not None:
            candidate = config.templates_dir / filename
            if candidate.exists():
                override = candidate
        templates[name] = load_template(name, path=override)
    return templates


def _process_datapoint(
    point: DataPoint,
    config: PipelineConfig,
    mode: str,
    llm: LlmBackend,
    search: SearchBackend,
    templates: dict[str, PromptTemplate],
) -> dict:
    model_name = config.model_for(point.lang)
    stage = "split"
    try:
        split = split_into_claims(
            point.model_output_text, point.lang, templates["splitter"],
            model_name, llm,
        )
        stage = "retrieve"
        bundle = retrieve_context(
            point.model_input,
            point.lang,
            search_backend=search,
            llm_backend=llm,
            context_template=templates["context"],
            model_name=model_name,
            keyword_mode=config.keyword_mode,
            keywords_template=templates["keywords"],
            max_results=config.search_max_results,
            page_mode=config.retrieval_mode == "page" and mode != "replay",
        )
        stage = "verify"
        results = verify_claims(
            list(split.claims), bundle.text, point.lang,
            templates["verifier"], model_name, llm,
        )
        stage = "locate"
        length = charlen(point.model_output_text)
        flags = locate_flags(results, point.model_output_text)
        soft = build_soft_labels(flags, length)
        hard = build_hard_labels(soft, config.threshold)
        provenance = {
            "context": {
                "tier": bundle.tier.value,
                "source_url": bundle.source_url,
                "query_used": bundle.query_used,
            },
            "claims": [
                {
                    "index": r.claim.index,
                    "text": r.claim.text,
                    "start": r.claim.hint_start,
                    "verdict": r.verdict.value,
                    "flagged": list(r.flagged),
                    "notes": list(r.notes),
                }
                for r in results
            ],
            "dropped_claims": list(split.dropped),
            "templates": {name: t.version for name, t in sorted(templates.items())},
            "backends": {
                "mode": mode,
                "llm": llm.describe(),
                "llm_model": model_name,
                "search": search.describe(),
            },
        }
        record = PipelineRecord(
            id=point.id,
            lang=point.lang,
            predicted_hard=hard,
            predicted_soft=soft,
            provenance=provenance,
        )
        return record.to_json_dict()
    except BudgetExceeded:
        # The budget is a run-level spend guard; stopping one datapoint
        # late would keep burning calls on every remaining datapoint.
        raise
    except HalluSpanError as exc:
        log.warning("datapoint %s failed at %s: %s", point.id, stage, exc)
        return {
            "id": point.id,
            "lang": point.lang,
            "stage": stage,
            "error": type(exc).__name__,
            "message": str(exc),
        }
    except Exception as exc:  # noqa: BLE001 - one datapoint must not kill the run
        log.exception("datapoint %s crashed at %s", point.id, stage)
        return {
            "id": point.id,
            "lang": point.lang,
            "stage": stage,
            "error": type(exc).__name__,
            "message": str(exc),
        }


def detect(
    dataset: Union[str, Path, Sequence[DataPoint]],
    config: PipelineConfig,
    mode: str,
    out_path: Optional[Union[str, Path]] = None,
    *,
    llm: Optional[LlmBackend] = None,
    search: Optional[SearchBackend] = None,
    workers: Optional[int] = None,
) -> list[dict]:
    """Run detection over a dataset; returns output rows in input order.

    ``llm`` and ``search`` override the configured backends, which makes
    runs scriptable in tests without any network or fixture setup.
    """
    points = (
        read_dataset(dataset)
        if isinstance(dataset, (str, Path))
        else list(dataset)
    )
    if llm is None or search is None:
        built_llm, built_search = build_backends(config, mode)
        llm = llm or built_llm
        search = search or built_search
    templates = _load_templates(config)
    pool_size = workers or config.workers

    def work(point: DataPoint) -> dict:
        return _process_datapoint(point, config, mode, llm, search, templates)

    if pool_size == 1 or len(points) <= 1:
        rows = [work(p) for p in points]
    else:
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            rows = list(pool.map(work, points))

    if out_path is not None:
        write_jsonl(rows, out_path)
    return rows


def run_score(
    pred_path: Union[str, Path],
    gold_path: Union[str, Path],
    out_dir: Optional[Union[str, Path]] = None,
) -> ScoreReport:
    predictions = read_predictions(pred_path)
    golds = read_dataset(gold_path)
    report = score_corpus(predictions, golds)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        payload = {
            "overall": report.overall,
            "by_language": report.by_language,
            "scores": [
                {"id": s.id, "lang": s.lang, "iou": s.iou, "cor": s.cor}
                for s in report.scores
            ],
        }
        (out / "report.json").write_text(
            json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
        (out / "report.txt").write_text(report.to_table() + "\n", encoding="utf-8")
    return report


def run_aggregate(
    pred_paths: Sequence[Union[str, Path]],
    out_path: Optional[Union[str, Path]] = None,
    threshold: float = HARD_THRESHOLD,
) -> list[dict]:
    """Vote-share aggregation over one or more prediction files.

    All files must cover exactly the same ids with span-bearing rows; a
    run that errored on a datapoint cannot vote and must be fixed or
    excluded first. A single file is a one-voter election: the output
    soft labels equal the input and the hard labels are re-derived.
    """
    if not pred_paths:
        raise DataError("aggregation needs at least one prediction file")
    runs = [read_predictions(p) for p in pred_paths]

    id_order = [row.id for row in runs[0]]
    reference = set(id_order)
    if len(reference) != len(id_order):
        raise DataError(f"duplicate ids in {pred_paths[0]}")
    for path, rows in zip(pred_paths[1:], runs[1:]):
        ids = {r.id for r in rows}
        if ids != reference:
            raise IdSetMismatch(
                f"{path} covers a different id set than {pred_paths[0]}"
            )

    by_id = [{row.id: row for row in rows} for rows in runs]
    out_rows = []
    for datapoint_id in id_order:
        votes = [table[datapoint_id] for table in by_id]
        for row in votes:
            if row.is_error():
                raise DataError(
                    f"prediction for {datapoint_id} is an error record; "
                    "error rows cannot vote"
                )
        length = _common_length(datapoint_id, votes)
        stack = VoteStack(tuple(tuple(v.dense_soft(length)) for v in votes))
        soft = aggregate_votes(stack)
        hard = build_hard_labels(soft, threshold)
        langs = {v.lang for v in votes if v.lang}
        row = {
            "id": datapoint_id,
            "lang": sorted(langs)[0] if langs else None,
            "text_len": length,
            "hard_labels": hard.to_pairs(),
            "soft_labels": soft.to_runs(),
            "provenance": {"voters": len(votes)},
        }
        out_rows.append(row)
    if out_path is not None:
        write_jsonl(out_rows, out_path)
    return out_rows


def _common_length(datapoint_id: str, votes: list[PredictionRow]) -> int:
    declared = {v.text_len for v in votes if v.text_len is not None}
    if len(declared) > 1:
        raise LengthMismatch(
            f"prediction files disagree on text length for {datapoint_id}: "
            f"{sorted(declared)}"
        )
    if declared:
        return declared.pop()
    return max((v.min_length() for v in votes), default=0)


def cache_stats(config: PipelineConfig) -> dict:
    if not config.cache_dir:
        raise ConfigError("no run.cache_dir configured")
    return ResponseCache(config.cache_dir).stats()


def cache_clear(config: PipelineConfig) -> int:
    if not config.cache_dir:
        raise ConfigError("no run.cache_dir configured")
    return ResponseCache(config.cache_dir).clear()
