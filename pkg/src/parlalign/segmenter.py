"""Build candidate segments from anchors, filter them by WER, report stats.

Segments are cut between anchors a bit over 28 seconds apart; the final
corpus keeps only segments under 30 seconds whose re-transcription WER is
at or below the threshold (0.40 by default).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Iterator, Sequence

from .aligner import Anchor, GtWord
from .errors import ValidationError

DEFAULT_MAX_GAP_S = 28.0
DEFAULT_WER_THRESHOLD = 0.40
DEFAULT_MAX_DURATION_S = 30.0
DEFAULT_BIN_WIDTH = 0.05
DEFAULT_CLIP = 2.0

REASON_OVER_DURATION = "over_duration"
REASON_OVER_WER = "over_wer"
REASON_UNSCORED = "unscored"


@dataclass(frozen=True, slots=True)
class Segment:
    """A time interval plus the inclusive ground-truth word range it covers."""

    id: str
    start_s: float
    end_s: float
    gt_from: int
    gt_to: int
    text: str

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True, slots=True)
class SegmentScore:
    segment_id: str
    hypothesis: str
    wer_value: float


def build_segments(
    anchors: Sequence[Anchor],
    gt: Sequence[GtWord],
    max_gap_s: float = DEFAULT_MAX_GAP_S,
    *,
    id_prefix: str = "seg",
    warnings: list[dict] | None = None,
) -> list[Segment]:
    """Cut non-overlapping segments from the anchor list.

    From the first unconsumed anchor, scan forward to the first anchor more
    than max_gap_s later; that pair bounds a segment covering the
    ground-truth words between them (text keeps the original spelling).
    The scan resumes after the closing anchor. Trailing anchors that never
    reach a wide-enough gap form one final shorter segment. Fewer than two
    anchors yield nothing but a warning record.
    """
    if len(anchors) < 2:
        if warnings is not None:
            warnings.append({
                "warning": "too_few_anchors",
                "anchors": len(anchors),
            })
        return []
    segments: list[Segment] = []

    def emit(a: Anchor, b: Anchor) -> None:
        text = " ".join(gt[k].raw for k in range(a.gt_index, b.gt_index + 1))
        segments.append(Segment(
            id=f"{id_prefix}-{len(segments):06d}",
            start_s=a.time_s,
            end_s=b.time_s,
            gt_from=a.gt_index,
            gt_to=b.gt_index,
            text=text,
        ))

    n = len(anchors)
    i = 0
    while i < n:
        start = anchors[i]
        j = i + 1
        closing = None
        while j < n:
            if anchors[j].time_s - start.time_s > max_gap_s:
                closing = anchors[j]
                break
            j += 1
        if closing is None:
            last = anchors[-1]
            if last.time_s > start.time_s:
                emit(start, last)
            break
        emit(start, closing)
        i = j + 1
    return segments


@dataclass(frozen=True)
class CutRow:
    audio_path: str
    start_s: float
    end_s: float
    segment_id: str


def emit_cut_manifest(segments: Sequence[Segment], audio_path: str) -> list[CutRow]:
    """One row per segment for an external audio slicer.

    Segments must already be in time order and non-overlapping; a violation
    is a corpus-integrity error, not something to silently repair.
    """
    prev: Segment | None = None
    rows: list[CutRow] = []
    for seg in segments:
        if prev is not None and seg.start_s < prev.end_s:
            raise ValidationError(
                f"segments {prev.id} and {seg.id} overlap ({prev.end_s} > {seg.start_s})"
            )
        rows.append(CutRow(audio_path, seg.start_s, seg.end_s, seg.id))
        prev = seg
    return rows


def cut_manifest_to_csv(rows: Sequence[CutRow]) -> str:
    lines = ["audio_path,start,end,segment_id"]
    for r in rows:
        lines.append(f"{r.audio_path},{r.start_s:.3f},{r.end_s:.3f},{r.segment_id}")
    return "\n".join(lines) + "\n"


def classify_segment(
    segment: Segment,
    score: SegmentScore | None,
    wer_threshold: float = DEFAULT_WER_THRESHOLD,
    max_duration_s: float = DEFAULT_MAX_DURATION_S,
) -> str | None:
    """Drop reason for a segment, or None when it belongs in the corpus.

    Duration is checked first: only segments under the duration cap are
    re-scored at all, so an over-long segment is over_duration even when a
    score happens to exist. The WER threshold is inclusive.
    """
    if segment.duration_s >= max_duration_s:
        return REASON_OVER_DURATION
    if score is None:
        return REASON_UNSCORED
    if score.wer_value > wer_threshold:
        return REASON_OVER_WER
    return None


def index_scores(scores: Iterable[SegmentScore]) -> dict[str, SegmentScore]:
    by_id: dict[str, SegmentScore] = {}
    for sc in scores:
        if sc.segment_id in by_id:
            raise ValidationError(f"duplicate score for segment {sc.segment_id}")
        by_id[sc.segment_id] = sc
    return by_id


def select(
    segments: Iterable[Segment],
    scores: Iterable[SegmentScore],
    wer_threshold: float = DEFAULT_WER_THRESHOLD,
    max_duration_s: float = DEFAULT_MAX_DURATION_S,
) -> tuple[list[Segment], list[tuple[Segment, str]]]:
    """Partition segments into (kept, dropped-with-reason)."""
    by_id = index_scores(scores)
    kept: list[Segment] = []
    dropped: list[tuple[Segment, str]] = []
    for seg in segments:
        reason = classify_segment(seg, by_id.get(seg.id), wer_threshold, max_duration_s)
        if reason is None:
            kept.append(seg)
        else:
            dropped.append((seg, reason))
    return kept, dropped


def _round_hours(seconds: float) -> float:
    return float(Decimal(repr(seconds / 3600.0)).quantize(Decimal("0.01"), ROUND_HALF_UP))


class _RunningSum:
    """Kahan-compensated accumulator; one pass, no stored values."""

    __slots__ = ("total", "count", "_c")

    def __init__(self) -> None:
        self.total = 0.0
        self.count = 0
        self._c = 0.0

    def add(self, value: float) -> None:
        self.count += 1
        y = value - self._c
        t = self.total + y
        self._c = (t - self.total) - y
        self.total = t


def corpus_stats(
    kept: Iterable[Segment], dropped: Iterable[tuple[Segment, str]]
) -> dict:
    """Segment counts, hours (2 decimals, half-up), and drop-reason breakdown.

    Both inputs may be generators; everything is accumulated in one pass so
    multi-million-segment corpora stream through in bounded memory.
    """
    kept_sum = _RunningSum()
    dropped_sum = _RunningSum()
    reasons: dict[str, int] = {}
    for seg in kept:
        kept_sum.add(seg.duration_s)
    for seg, reason in dropped:
        dropped_sum.add(seg.duration_s)
        reasons[reason] = reasons.get(reason, 0) + 1
    return {
        "segments_in": kept_sum.count + dropped_sum.count,
        "segments_kept": kept_sum.count,
        "segments_dropped": dropped_sum.count,
        "hours_in": _round_hours(kept_sum.total + dropped_sum.total),
        "hours_kept": _round_hours(kept_sum.total),
        "hours_dropped": _round_hours(dropped_sum.total),
        "drop_reasons": {k: reasons[k] for k in sorted(reasons)},
    }


@dataclass(frozen=True)
class HistogramBin:
    low: float
    high: float  # inf marks the overflow bin
    count: int


@dataclass(frozen=True)
class Histogram:
    bins: list[HistogramBin]
    bin_width: float
    clip: float

    @property
    def total(self) -> int:
        return sum(b.count for b in self.bins)


def wer_histogram(
    scores: Iterable[float],
    bin_width: float = DEFAULT_BIN_WIDTH,
    clip: float = DEFAULT_CLIP,
) -> Histogram:
    """Left-closed histogram of WER values with an overflow bin at clip.

    A value lands in [k*bin_width, (k+1)*bin_width); anything at or above
    clip accumulates in the final open-ended bin.
    """
    if bin_width <= 0:
        raise ValidationError("bin_width must be > 0")
    if clip <= 0:
        raise ValidationError("clip must be > 0")
    n_regular = int(math.ceil(clip / bin_width - 1e-9))
    counts = [0] * (n_regular + 1)
    for v in scores:
        if v < 0:
            raise ValidationError(f"negative WER value {v}")
        if v >= clip:
            counts[n_regular] += 1
            continue
        k = int(math.floor(v / bin_width))
        # Float division can land one bin off right at an edge.
        if v < k * bin_width:
            k -= 1
        elif v >= (k + 1) * bin_width:
            k += 1
        counts[min(k, n_regular - 1)] += 1
    bins = [
        HistogramBin(low=k * bin_width, high=(k + 1) * bin_width, count=counts[k])
        for k in range(n_regular)
    ]
    bins.append(HistogramBin(low=clip, high=math.inf, count=counts[n_regular]))
    return Histogram(bins=bins, bin_width=bin_width, clip=clip)


def histogram_to_csv(hist: Histogram) -> str:
    lines = ["bin_low,bin_high,count"]
    for b in hist.bins:
        high = "inf" if math.isinf(b.high) else f"{b.high:.6g}"
        lines.append(f"{b.low:.6g},{high},{b.count}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSONL serialization


def segment_to_obj(seg: Segment) -> dict:
    return {
        "id": seg.id,
        "start": seg.start_s,
        "end": seg.end_s,
        "gt_from": seg.gt_from,
        "gt_to": seg.gt_to,
        "text": seg.text,
    }


def segment_from_obj(obj: dict) -> Segment:
    required = {"id", "start", "end", "gt_from", "gt_to", "text"}
    if not isinstance(obj, dict) or not required <= set(obj):
        raise ValidationError(f"segment record must have keys {sorted(required)}")
    seg = Segment(
        id=str(obj["id"]),
        start_s=float(obj["start"]),
        end_s=float(obj["end"]),
        gt_from=int(obj["gt_from"]),
        gt_to=int(obj["gt_to"]),
        text=str(obj["text"]),
    )
    if seg.end_s <= seg.start_s or seg.gt_to < seg.gt_from or not seg.text:
        raise ValidationError(f"segment {seg.id}: invalid interval or empty text")
    return seg


def segments_to_jsonl(segments: Iterable[Segment]) -> str:
    return "".join(
        json.dumps(segment_to_obj(s), ensure_ascii=False) + "\n" for s in segments
    )


def iter_segments_jsonl(lines: Iterable[str]) -> Iterator[Segment]:
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"segments JSONL line {lineno}: {exc}") from exc
        yield segment_from_obj(obj)


def score_to_obj(score: SegmentScore) -> dict:
    return {
        "segment_id": score.segment_id,
        "hypothesis": score.hypothesis,
        "wer": score.wer_value,
    }


def score_from_obj(obj: dict) -> SegmentScore:
    required = {"segment_id", "hypothesis", "wer"}
    if not isinstance(obj, dict) or not required <= set(obj):
        raise ValidationError(f"score record must have keys {sorted(required)}")
    value = float(obj["wer"])
    if value < 0:
        raise ValidationError(f"score for {obj['segment_id']}: negative wer")
    return SegmentScore(str(obj["segment_id"]), str(obj["hypothesis"]), value)


def scores_to_jsonl(scores: Iterable[SegmentScore]) -> str:
    return "".join(json.dumps(score_to_obj(s), ensure_ascii=False) + "\n" for s in scores)


def iter_scores_jsonl(lines: Iterable[str]) -> Iterator[SegmentScore]:
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"scores JSONL line {lineno}: {exc}") from exc
        yield score_from_obj(obj)
