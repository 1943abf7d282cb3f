"""Command-line entry point: ``ghtm run | baseline | evaluate``.

Exit codes: 0 success, 1 usage or configuration error, 2 pipeline stage
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .config import ConfigError, PipelineConfig
from .errors import GhtmError, StageError, TopicsFileError

EXIT_OK, EXIT_USAGE, EXIT_STAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML configuration file")
    p.add_argument("--seed", type=int, help="global seed (overrides config)")
    p.add_argument("--topics", type=int, dest="k", help="number of topics k")
    p.add_argument("--top-words", type=int, dest="top_words", help="words per topic T")
    p.add_argument("--out-dir", dest="out_dir", help="output directory")
    p.add_argument("--format", dest="corpus_format", choices=["plain-lines", "json-lines"], help="corpus format")
    p.add_argument("--corpus", dest="corpus_path", help="corpus file (overrides config)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ghtm", description="Graph-based hybrid topic modeling")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="train GHTM and extract topics")
    _common(run)
    run.add_argument("--embeddings", dest="embeddings_path", help="word-vector text file")
    base = sub.add_parser("baseline", help="NMF on the TF-IDF matrix")
    _common(base)
    ev = sub.add_parser("evaluate", help="score an existing topics file")
    ev.add_argument("topics_file")
    _common(ev)
    return parser


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    overrides = {
        name: getattr(args, name, None)
        for name in ("seed", "k", "top_words", "out_dir", "corpus_format", "corpus_path", "embeddings_path")
    }
    return cfg.override(**overrides)


def _print_scores(scores: dict) -> None:
    for key in ("cv", "npmi", "td", "irbo"):
        val = scores.get(key)
        print(f"{key}: {'null' if val is None else f'{val:.6f}'}")
    if "topics_identified" in scores:
        print(f"topics_identified: {scores['topics_identified']}")
    for key, msg in sorted(scores.get("errors", {}).items()):
        print(f"{key}_error: {msg}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _load_config(args)
        if args.command == "run":
            report = pipeline.run_ghtm(cfg)
        elif args.command == "baseline":
            report = pipeline.run_baseline(cfg)
        else:
            _print_scores(pipeline.evaluate_file(args.topics_file, cfg))
            return EXIT_OK
    except (ConfigError, TopicsFileError) as exc:
        print(f"ghtm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"ghtm: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except GhtmError as exc:
        print(f"ghtm: error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    print("\n".join(report.metrics_lines()))
    print(f"topics written to {report.topics_path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
