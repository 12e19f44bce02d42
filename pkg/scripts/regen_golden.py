"""Rebuild the committed golden run under tests/data/golden/.

The golden run is a ten-datapoint detection over scripted backends. This
script records every backend exchange into the fixture directory, then
replays the run through the public pipeline to refresh
``expected_output.jsonl``. Re-run it whenever prompts, datapoints, or the
output wire format change; the diff shows exactly what moved.

Usage: python3 scripts/regen_golden.py
"""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

from halluspan.backends import (
    FixtureStore,
    LlmRequest,
    RecordingLlmBackend,
    RecordingSearchBackend,
    SearchRequest,
    SearchResult,
)
from halluspan.dataset_io import write_jsonl
from halluspan.pipeline import PipelineConfig, detect

GOLDEN_DIR = Path(__file__).resolve().parent.parent / "tests" / "data" / "golden"

CONFIG_TEXT = """\
llm:
  endpoint: https://llm.invalid/v1/chat/completions
  model: answer-checker-large
  models:
    ar: deepseek-reasoner
search:
  endpoint: https://search.invalid/customsearch/v1
  engine_id: golden-engine
  max_results: 5
retrieval:
  keyword_mode: heuristic
  mode: snippet
run:
  workers: 4
  fixtures_dir: fixtures
"""


def _wiki(lang_host: str, page: str, snippet: str, rank: int, title: str) -> dict:
    return {
        "rank": rank,
        "url": f"https://{lang_host}.wikipedia.org/wiki/{page}",
        "title": title,
        "snippet": snippet,
    }


def _plain(url: str, snippet: str, rank: int, title: str) -> dict:
    return {"rank": rank, "url": url, "title": title, "snippet": snippet}


def _split_reply(*texts: str) -> str:
    return json.dumps([{"text": t} for t in texts], ensure_ascii=False)


def _verdicts(*entries: dict) -> str:
    return json.dumps(list(entries), ensure_ascii=False)


# One entry per datapoint: the input pair, the scripted backend behaviour,
# and the gold labels used by the scorer tests.
GOLDEN_CASES = [
    {
        "id": "en-1",
        "lang": "EN",
        "model_input": "When was Kaspiysk founded?",
        "model_output_text": "Yes. Kaspiisk was founded in 1932.",
        "split": _split_reply("Yes.", "Kaspiisk was founded in 1932."),
        "search": {
            "When was Kaspiysk founded?": [
                _plain("https://dagestan-travel.example/kaspiysk",
                       "Kaspiysk travel notes and photos.", 1, "Visiting Kaspiysk"),
                _wiki("en", "Kaspiysk",
                      "Kaspiysk is a city in Dagestan, Russia, founded in 1935 "
                      "as a settlement for factory workers.", 2, "Kaspiysk"),
            ],
        },
        "verify": _verdicts(
            {"index": 0, "verdict": "supported", "flagged": []},
            {"index": 1, "verdict": "contradicted", "flagged": ["1932"]},
        ),
        "gold_flags": ["1932"],
    },
    {
        "id": "fr-1",
        "lang": "FR",
        "model_input": (
            "Comment a été initialement été appelée la vile de Kaspiisk "
            "à sa création?"
        ),
        "model_output_text": (
            "La ville de Kaspiisk s'appelait initialement Makhatchkala."
        ),
        "split": _split_reply(
            "La ville de Kaspiisk s'appelait initialement Makhatchkala."
        ),
        "search": {
            (
                "Comment a été initialement été appelée la vile de Kaspiisk "
                "à sa création?"
            ): [],
            "vile Kaspiisk création": [
                _wiki("fr", "Kaspiisk", "", 1, "Kaspiisk"),
            ],
        },
        "passage": (
            "À sa création en 1932, la ville de Kaspiisk portait le nom de "
            "Dvigatelstroï, du nom du combinat qui l'a fait naître."
        ),
        "verify": _verdicts(
            {"index": 0, "verdict": "contradicted", "flagged": ["Makhatchkala"]},
        ),
        "gold_flags": ["Makhatchkala"],
    },
    {
        "id": "ar-1",
        "lang": "AR",
        "model_input": "ما هي عاصمة فرنسا؟",
        "model_output_text": "عاصمة فرنسا هي لندن.",
        "split": _split_reply("عاصمة فرنسا هي لندن."),
        "search": {
            "ما هي عاصمة فرنسا؟": [
                _wiki("ar", "باريس", "باريس هي عاصمة فرنسا وأكبر مدنها.", 1, "باريس"),
            ],
        },
        "verify": _verdicts(
            {"index": 0, "verdict": "contradicted", "flagged": ["لندن"]},
        ),
        "gold_flags": ["لندن"],
    },
    {
        "id": "zh-1",
        "lang": "ZH",
        "model_input": "法国的首都是哪里？",
        "model_output_text": "法国的首都是巴黎。",
        "split": _split_reply("法国的首都是巴黎。"),
        "search": {
            "法国的首都是哪里？": [
                _wiki("zh", "巴黎", "巴黎是法国的首都和最大城市。", 1, "巴黎"),
            ],
        },
        "verify": _verdicts({"index": 0, "verdict": "supported", "flagged": []}),
        "gold_flags": [],
    },
    {
        "id": "hi-1",
        "lang": "HI",
        "model_input": "भारत की राजधानी क्या है?",
        "model_output_text": "भारत की राजधानी बर्लिन है।",
        "split": _split_reply("भारत की राजधानी बर्लिन है।"),
        "search": {
            "भारत की राजधानी क्या है?": [
                _wiki("hi", "नई_दिल्ली", "नई दिल्ली भारत की राजधानी है।", 1,
                      "नई दिल्ली"),
            ],
        },
        "verify": _verdicts(
            {"index": 0, "verdict": "contradicted", "flagged": ["बर्लिन"]},
        ),
        "gold_flags": ["बर्लिन"],
    },
    {
        "id": "en-2",
        "lang": "EN",
        "model_input": "Who wrote Hamlet?",
        "model_output_text": "Hamlet was written by Charles Dickens.",
        "split": "I am not able to provide a JSON segmentation for this text.",
        "search": {},
        "verify": None,
        "gold_flags": ["Charles Dickens"],
    },
    {
        "id": "es-1",
        "lang": "ES",
        "model_input": "¿Cuándo fue fundada la ciudad de Cádiz?",
        "model_output_text": "Cádiz fue fundada en el año 1100 a. C.",
        "split": _split_reply("Cádiz fue fundada en el año 1100 a. C."),
        "search": {
            "¿Cuándo fue fundada la ciudad de Cádiz?": [],
            "fundada ciudad Cádiz": [
                _wiki("es", "Cádiz",
                      "Cádiz es una ciudad fundada por los fenicios hacia el "
                      "año 1104 a. C.", 1, "Cádiz"),
            ],
        },
        "verify": _verdicts(
            {"index": 0, "verdict": "contradicted", "flagged": ["1100"]},
        ),
        "gold_flags": ["1100"],
    },
    {
        "id": "de-1",
        "lang": "DE",
        "model_input": "Wann wurde der FC Barcelona gegründet?",
        "model_output_text": (
            "Der FC Barcelona wurde 1908 gegründet. "
            "Der Verein spielt in Barcelona."
        ),
        "split": _split_reply(
            "Der FC Barcelona wurde 1908 gegründet.",
            "Der Verein spielt in Barcelona.",
        ),
        "search": {
            "Wann wurde der FC Barcelona gegründet?": [
                _plain("https://fussball-blog.example/barca", "", 1,
                       "Barça Geschichte"),
                _wiki("de", "FC_Barcelona",
                      "Der FC Barcelona ist ein 1899 gegründeter Sportverein "
                      "aus Barcelona.", 2, "FC Barcelona"),
            ],
        },
        "verify": _verdicts(
            {"index": 0, "verdict": "contradicted", "flagged": ["1908"]},
            {"index": 1, "verdict": "supported", "flagged": []},
        ),
        "gold_flags": ["1908"],
    },
    {
        "id": "fi-1",
        "lang": "FI",
        "model_input": "Mikä on Suomen pääkaupunki?",
        "model_output_text": "Suomen pääkaupunki on Helsinki.",
        "split": _split_reply("Suomen pääkaupunki on Helsinki."),
        "search": {
            "Mikä on Suomen pääkaupunki?": [
                _wiki("fi", "Helsinki",
                      "Helsinki on Suomen pääkaupunki ja suurin kaupunki.", 1,
                      "Helsinki"),
            ],
        },
        "verify": _verdicts({"index": 0, "verdict": "supported", "flagged": []}),
        "gold_flags": [],
    },
    {
        "id": "it-1",
        "lang": "IT",
        "model_input": "Chi ha dipinto la Gioconda?",
        "model_output_text": "La Gioconda è stata dipinta da Raffaello.",
        "split": _split_reply("La Gioconda è stata dipinta da Raffaello."),
        "search": {
            "Chi ha dipinto la Gioconda?": [
                _wiki("it", "Gioconda",
                      "La Gioconda è un celebre dipinto di Leonardo da Vinci.",
                      1, "Gioconda"),
            ],
        },
        "verify": _verdicts(
            {"index": 0, "verdict": "contradicted", "flagged": ["Raffaello"]},
        ),
        "gold_flags": ["Raffaello"],
    },
]


class GoldenLlm:
    """Routes each request to the scripted reply for its datapoint and stage."""

    def complete(self, request: LlmRequest) -> str:
        prompt = request.user_prompt
        if "atomic factual claims" in prompt:
            for case in GOLDEN_CASES:
                if case["model_output_text"] in prompt:
                    return case["split"]
            raise AssertionError(f"unscripted splitter prompt: {prompt[:100]!r}")
        if "reference context" in prompt:
            for case in GOLDEN_CASES:
                if case["verify"] and case["model_output_text"].split()[0] in prompt \
                        and json.loads(case["split"])[0]["text"] in prompt:
                    return case["verify"]
            raise AssertionError(f"unscripted verifier prompt: {prompt[:100]!r}")
        if "short factual passage" in prompt:
            for case in GOLDEN_CASES:
                if "passage" in case and case["model_input"] in prompt:
                    return case["passage"]
            raise AssertionError(f"unscripted passage prompt: {prompt[:100]!r}")
        raise AssertionError(f"unexpected prompt shape: {prompt[:100]!r}")

    def describe(self) -> str:
        return "golden-script"


class GoldenSearch:
    def search(self, request: SearchRequest) -> list[SearchResult]:
        for case in GOLDEN_CASES:
            if request.query in case["search"]:
                return [SearchResult(**item) for item in case["search"][request.query]]
        raise AssertionError(f"unscripted search query: {request.query!r}")

    def describe(self) -> str:
        return "golden-script"


def _dataset_rows() -> list[dict]:
    rows = []
    for case in GOLDEN_CASES:
        text = case["model_output_text"]
        pairs = []
        for flag in case["gold_flags"]:
            start = text.find(flag)
            assert start >= 0, (case["id"], flag)
            pairs.append([start, start + len(flag)])
        pairs.sort()
        rows.append(
            {
                "id": case["id"],
                "lang": case["lang"],
                "model_input": case["model_input"],
                "model_output_text": text,
                "hard_labels": pairs,
                "soft_labels": [
                    {"start": s, "end": e, "prob": 1.0} for s, e in pairs
                ],
            }
        )
    return rows


def main() -> int:
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    fixtures = GOLDEN_DIR / "fixtures"
    if fixtures.exists():
        shutil.rmtree(fixtures)

    (GOLDEN_DIR / "config.yaml").write_text(CONFIG_TEXT, encoding="utf-8")
    write_jsonl(_dataset_rows(), GOLDEN_DIR / "dataset.jsonl")

    config = PipelineConfig.from_file(GOLDEN_DIR / "config.yaml")
    store = FixtureStore(fixtures)
    detect(
        GOLDEN_DIR / "dataset.jsonl",
        config,
        mode="record",
        llm=RecordingLlmBackend(GoldenLlm(), store),
        search=RecordingSearchBackend(GoldenSearch(), store),
        workers=1,
    )

    rows = detect(
        GOLDEN_DIR / "dataset.jsonl",
        config,
        mode="replay",
        out_path=GOLDEN_DIR / "expected_output.jsonl",
        workers=1,
    )
    errors = [r["id"] for r in rows if "error" in r]
    spans = {r["id"]: r.get("hard_labels") for r in rows if "error" not in r}
    print(f"recorded {len(list(fixtures.glob('*.json')))} fixtures")
    print(f"wrote {len(rows)} golden rows; error rows: {errors}")
    for row_id, pairs in spans.items():
        print(f"  {row_id}: {pairs}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
