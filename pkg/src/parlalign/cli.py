"""Command line front end.

One subcommand per pipeline stage plus run-all. Every subcommand takes
--config; numeric flags override the config's align/segmenter parameters.
Exit codes: 0 ok, 2 validation failure, 3 missing input, 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .config import load_config
from .errors import MissingInputError, ValidationError
from .pipeline import run_all, run_stage

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_MISSING_INPUT = 3
EXIT_INTERNAL = 4

_STAGE_COMMANDS = ("parse", "match", "align", "segment", "select", "stats")


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="pipeline config YAML")
    sub.add_argument("--quiet", action="store_true", help="suppress the report summary on stdout")
    align = sub.add_argument_group("alignment parameters")
    align.add_argument("--max-word-dist", type=int, default=None,
                       help="max edit distance for a word match (default 1)")
    align.add_argument("--window", type=int, default=None,
                       help="forward search window in ground-truth words (default 50)")
    align.add_argument("--context-radius", type=int, default=None,
                       help="words checked on each side of a candidate (default 4)")
    align.add_argument("--min-score", type=int, default=None,
                       help="minimum context score for an anchor (default 3)")
    align.add_argument("--min-word-len", type=int, default=None,
                       help="minimum reference word length in characters (default 3)")
    seg = sub.add_argument_group("segmentation parameters")
    seg.add_argument("--max-gap-s", type=float, default=None,
                     help="anchor gap that closes a segment in seconds (default 28.0)")
    seg.add_argument("--wer-threshold", type=float, default=None,
                     help="inclusive WER cutoff for keeping a segment (default 0.40)")
    seg.add_argument("--max-duration-s", type=float, default=None,
                     help="segments at or above this duration are dropped (default 30.0)")
    seg.add_argument("--bin-width", type=float, default=None,
                     help="WER histogram bin width (default 0.05)")
    seg.add_argument("--clip", type=float, default=None,
                     help="WER histogram overflow boundary (default 2.0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parlalign",
        description="Align parliamentary recordings with verbatim transcripts "
                    "and cut WER-filtered ASR training segments.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)
    for name in _STAGE_COMMANDS:
        sub = subs.add_parser(name, help=f"run the {name} stage for all configured sessions")
        _add_common(sub)
    run = subs.add_parser("run-all", help="run every stage end to end")
    _add_common(run)
    run.add_argument("--jobs", type=int, default=None,
                     help="sessions processed in parallel (default from config, else 1)")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    keys = (
        "max_word_dist", "window", "context_radius", "min_score", "min_word_len",
        "max_gap_s", "wer_threshold", "max_duration_s", "bin_width", "clip",
    )
    out = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    if getattr(args, "jobs", None) is not None:
        out["jobs"] = args.jobs
    return out


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args))
        if args.command == "run-all":
            report = run_all(cfg)
        else:
            report = run_stage(args.command, cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MissingInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except KeyboardInterrupt:
        raise
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if not args.quiet:
        print(json.dumps(report, ensure_ascii=False, indent=2))
    if args.command == "run-all" and report.get("quarantined"):
        for q in report["quarantined"]:
            print(f"warning: session {q['session']} quarantined: {q['error']}", file=sys.stderr)
    return EXIT_OK


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
