"""Command line front end.

Exit codes: 0 on success, 1 for usage and configuration problems, 2 for
data problems (malformed input files, broken invariants), 3 for backend
failures (network, fixtures, budget).
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from .errors import BackendError, ConfigError, DataError
from .pipeline import (
    MODES,
    PipelineConfig,
    cache_clear,
    cache_stats,
    detect,
    run_aggregate,
    run_score,
)

log = logging.getLogger(__name__)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="halluspan",
        description="Locate hallucinated spans in model answers.",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p_detect = sub.add_parser("detect", help="run span detection over a dataset")
    p_detect.add_argument("--input", required=True, help="input JSONL dataset")
    p_detect.add_argument("--config", required=True, help="YAML run configuration")
    p_detect.add_argument("--mode", required=True, choices=MODES)
    p_detect.add_argument("--out", required=True, help="output predictions JSONL")
    p_detect.add_argument("--workers", type=int, default=None,
                          help="override the configured worker count")

    p_score = sub.add_parser("score", help="score predictions against gold labels")
    p_score.add_argument("--pred", required=True, help="predictions JSONL")
    p_score.add_argument("--gold", required=True, help="gold dataset JSONL")
    p_score.add_argument("--out", required=True, help="directory for score files")

    p_agg = sub.add_parser("aggregate", help="combine prediction files by vote")
    p_agg.add_argument("--out", required=True, help="output predictions JSONL")
    p_agg.add_argument("preds", nargs="+", help="one or more prediction JSONL files")

    p_cache = sub.add_parser("cache", help="inspect or clear the response cache")
    p_cache.add_argument("action", choices=("stats", "clear"))
    p_cache.add_argument("--config", required=True, help="YAML run configuration")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        if args.command == "detect":
            config = PipelineConfig.from_file(args.config)
            rows = detect(args.input, config, args.mode, args.out,
                          workers=args.workers)
            errors = sum(1 for r in rows if "error" in r)
            print(f"wrote {len(rows)} rows to {args.out} ({errors} errors)")
        elif args.command == "score":
            report = run_score(args.pred, args.gold, args.out)
            print(report.to_table())
        elif args.command == "aggregate":
            rows = run_aggregate(args.preds, args.out)
            print(f"wrote {len(rows)} aggregated rows to {args.out}")
        elif args.command == "cache":
            config = PipelineConfig.from_file(args.config)
            if args.action == "stats":
                stats = cache_stats(config)
                print(f"{stats['entries']} entries, {stats['bytes']} bytes")
            else:
                removed = cache_clear(config)
                print(f"removed {removed} cache entries")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
