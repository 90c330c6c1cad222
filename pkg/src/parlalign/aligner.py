"""Anchor-based timestamping of a ground-truth transcript.

The reference transcript (machine-generated, word timestamps) is walked
once in order. Each usable reference word is matched against ground-truth
words just ahead of the last anchor; candidates within edit distance 1 are
ranked by how many of their surrounding words agree exactly, and a strong
enough winner becomes an anchor carrying the reference timestamp into the
ground-truth sequence. The forward-only cursor keeps anchor positions and
times strictly increasing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import ValidationError
from .text_metrics import levenshtein_within, normalize

DEFAULT_MAX_WORD_DIST = 1
DEFAULT_WINDOW = 50
DEFAULT_CONTEXT_RADIUS = 4
DEFAULT_MIN_SCORE = 3
DEFAULT_MIN_WORD_LEN = 3


@dataclass(frozen=True, slots=True)
class TimedWord:
    """A reference-transcript word: normalized token plus time bounds in seconds."""

    text: str
    start_s: float
    end_s: float


@dataclass(frozen=True, slots=True)
class GtWord:
    """One ground-truth word: position, original spelling, normalized form."""

    index: int
    raw: str
    norm: str


@dataclass(frozen=True, slots=True)
class Anchor:
    gt_index: int
    ref_index: int
    time_s: float
    score: int


@dataclass(frozen=True)
class AlignParams:
    max_word_dist: int = DEFAULT_MAX_WORD_DIST
    window: int = DEFAULT_WINDOW
    context_radius: int = DEFAULT_CONTEXT_RADIUS
    min_score: int = DEFAULT_MIN_SCORE
    min_word_len: int = DEFAULT_MIN_WORD_LEN

    def __post_init__(self):
        if self.max_word_dist < 0:
            raise ValidationError("max_word_dist must be >= 0")
        for name in ("window", "context_radius", "min_score", "min_word_len"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")


def gt_words_from_text(text: str) -> list[GtWord]:
    """Tokenize ground-truth text into indexed words.

    Raw tokens are whitespace-split and kept verbatim; norm is the
    case-folded, punctuation-free form ("" when nothing survives, e.g. a
    lone dash, which then simply never matches).
    """
    words = []
    for i, raw in enumerate(text.split()):
        norms = normalize(raw)
        words.append(GtWord(index=i, raw=raw, norm=norms[0] if norms else ""))
    return words


def load_reference_words(path: str | Path) -> list[TimedWord]:
    """Load the reference transcript JSON: array of {word, start, end}.

    Tokens are normalized on load; timestamps must be non-negative with
    end >= start and non-decreasing starts across the sequence.
    """
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, list):
        raise ValidationError(f"{path}: reference transcript must be a JSON array")
    words: list[TimedWord] = []
    prev_start = -1.0
    for i, obj in enumerate(payload):
        if not isinstance(obj, dict) or not {"word", "start", "end"} <= set(obj):
            raise ValidationError(f"{path}: entry {i} must have word/start/end keys")
        try:
            start = float(obj["start"])
            end = float(obj["end"])
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{path}: entry {i}: {exc}") from exc
        if start < 0 or end < start:
            raise ValidationError(f"{path}: entry {i}: need 0 <= start <= end")
        if start < prev_start:
            raise ValidationError(f"{path}: entry {i}: start times must be non-decreasing")
        prev_start = start
        norms = normalize(str(obj["word"]))
        words.append(TimedWord(text=norms[0] if norms else "", start_s=start, end_s=end))
    return words


def candidate_matches(
    ref_word: TimedWord,
    gt: Sequence[GtWord],
    cursor: int,
    params: AlignParams,
) -> list[int]:
    """Ground-truth indices that may match a reference word.

    Exactly the indices i with cursor < i <= cursor + window whose
    normalized word is within max_word_dist of the reference token,
    ascending. cursor is the gt index of the most recent anchor, -1 before
    the first one; no candidate ever lies at or behind it.
    """
    text = ref_word.text
    max_dist = params.max_word_dist
    lo = cursor + 1
    hi = min(cursor + params.window, len(gt) - 1)
    out = []
    for i in range(lo, hi + 1):
        norm = gt[i].norm
        if abs(len(norm) - len(text)) <= max_dist and levenshtein_within(text, norm, max_dist):
            out.append(i)
    return out


def context_score(
    gt_i: int,
    ref_j: int,
    gt: Sequence[GtWord],
    ref: Sequence[TimedWord],
    radius: int,
) -> int:
    """Count exact word matches at offsets -radius..-1 and 1..radius.

    Offsets falling outside either sequence contribute nothing, so the
    maximum is 2*radius and shrinks near sequence boundaries.
    """
    n_gt = len(gt)
    n_ref = len(ref)
    score = 0
    for k in range(-radius, radius + 1):
        if k == 0:
            continue
        gi = gt_i + k
        rj = ref_j + k
        if 0 <= gi < n_gt and 0 <= rj < n_ref and gt[gi].norm == ref[rj].text:
            score += 1
    return score


def align(
    gt: Sequence[GtWord],
    ref: Sequence[TimedWord],
    params: AlignParams | None = None,
) -> list[Anchor]:
    """Single forward pass producing a strictly monotone anchor list.

    Reference words shorter than min_word_len are skipped. Among the
    candidates for a word, the highest context score wins (ties go to the
    smallest gt index); winners below min_score are discarded. An anchor
    whose timestamp does not strictly exceed the previous anchor's is
    dropped without advancing the cursor, so gt index, ref index, and time
    are each strictly increasing over the output.
    """
    if params is None:
        params = AlignParams()
    anchors: list[Anchor] = []
    cursor = -1
    last_time = None
    radius = params.context_radius
    min_len = params.min_word_len
    min_score = params.min_score
    for j, ref_word in enumerate(ref):
        if len(ref_word.text) < min_len:
            continue
        candidates = candidate_matches(ref_word, gt, cursor, params)
        if not candidates:
            continue
        best_i = -1
        best_score = -1
        for i in candidates:
            s = context_score(i, j, gt, ref, radius)
            if s > best_score:
                best_score = s
                best_i = i
        if best_score < min_score:
            continue
        t = ref_word.start_s
        if last_time is not None and t <= last_time:
            continue
        anchors.append(Anchor(gt_index=best_i, ref_index=j, time_s=t, score=best_score))
        cursor = best_i
        last_time = t
    return anchors


def anchors_to_json(anchors: Sequence[Anchor]) -> str:
    payload = [
        {"gt_index": a.gt_index, "ref_index": a.ref_index, "time": a.time_s, "score": a.score}
        for a in anchors
    ]
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def anchors_from_json(text: str) -> list[Anchor]:
    """Parse and validate an anchor list (strictly increasing triple)."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"anchors JSON is invalid: {exc}") from exc
    if not isinstance(payload, list):
        raise ValidationError("anchors JSON must be an array")
    anchors: list[Anchor] = []
    prev: Anchor | None = None
    for i, obj in enumerate(payload):
        if not isinstance(obj, dict) or set(obj) != {"gt_index", "ref_index", "time", "score"}:
            raise ValidationError(f"anchor {i}: need exactly gt_index/ref_index/time/score")
        a = Anchor(
            gt_index=int(obj["gt_index"]),
            ref_index=int(obj["ref_index"]),
            time_s=float(obj["time"]),
            score=int(obj["score"]),
        )
        if a.gt_index < 0 or a.ref_index < 0 or a.time_s < 0 or a.score < 1:
            raise ValidationError(f"anchor {i}: out-of-range field")
        if prev is not None and not (
            a.gt_index > prev.gt_index and a.ref_index > prev.ref_index and a.time_s > prev.time_s
        ):
            raise ValidationError(f"anchor {i}: anchors must be strictly increasing in all fields")
        anchors.append(a)
        prev = a
    return anchors
