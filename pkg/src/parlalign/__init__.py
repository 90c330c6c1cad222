"""parlalign: turn long parliamentary sessions into ASR training segments.

The pipeline parses verbatim transcript documents into speaker turns,
matches recordings to transcripts by session key, anchors the ground-truth
text to a word-timestamped reference transcript, cuts segments of at most
30 seconds between anchors, and keeps only segments whose word error rate
stays at or below a threshold.
"""

__version__ = "0.1.0"

from .aligner import AlignParams, Anchor, GtWord, TimedWord, align
from .document_parser import (
    NameRegistry,
    SpeakerTurn,
    TextRun,
    extract_runs,
    is_speaker_annotation,
    load_name_registry,
    parse_document,
    split_turns,
    strip_notes,
)
from .segmenter import (
    Segment,
    SegmentScore,
    build_segments,
    corpus_stats,
    emit_cut_manifest,
    select,
    wer_histogram,
)
from .session_matcher import MediaEntry, SessionKey, match_sessions
from .text_metrics import WerScore, levenshtein, normalize, wer

__all__ = [
    "AlignParams",
    "Anchor",
    "GtWord",
    "MediaEntry",
    "NameRegistry",
    "Segment",
    "SegmentScore",
    "SessionKey",
    "SpeakerTurn",
    "TextRun",
    "TimedWord",
    "WerScore",
    "align",
    "build_segments",
    "corpus_stats",
    "emit_cut_manifest",
    "extract_runs",
    "is_speaker_annotation",
    "levenshtein",
    "load_name_registry",
    "match_sessions",
    "normalize",
    "parse_document",
    "select",
    "split_turns",
    "strip_notes",
    "wer",
    "wer_histogram",
]
