"""File-based pipeline stages and the end-to-end session orchestrator.

Every stage reads and writes plain files (JSON/JSONL/CSV) so the external
ASR steps, which produce the reference transcripts and the per-segment
re-transcriptions, can slot in between stages. Data files are written
atomically and contain no wall-clock information; run reports carry their
timing under a separate key.
"""

from __future__ import annotations

import concurrent.futures
import contextlib
import json
import os
import tempfile
import time
from bisect import bisect_left, bisect_right
from pathlib import Path
from typing import Iterator, Sequence

from . import aligner, document_parser, segmenter, session_matcher
from .config import PipelineConfig, SessionConfig
from .errors import MissingInputError, ParlalignError, ValidationError
from .reports import histogram_text_chart, render_wer_histogram
from .segmenter import Segment, SegmentScore
from .text_metrics import normalize, wer

STAGES = ("parse", "match", "align", "segment", "select", "stats")


def atomic_write_text(path: Path, text: str) -> None:
    """Write via a temp file in the target directory plus rename."""
    atomic_write_lines(path, (text,))


def atomic_write_lines(path: Path, chunks) -> None:
    """Stream string chunks into a temp file, then rename into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for chunk in chunks:
                fh.write(chunk)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _require_file(path: Path, what: str) -> Path:
    if not path.is_file():
        raise MissingInputError(f"{what} not found: {path}")
    return path


def _write_report(cfg: PipelineConfig, name: str, report: dict) -> None:
    atomic_write_text(
        cfg.out_dir / "reports" / f"{name}.json",
        json.dumps(report, ensure_ascii=False, indent=2) + "\n",
    )


# ---------------------------------------------------------------------------
# per-session stages


def parse_session(cfg: PipelineConfig, session: SessionConfig) -> dict:
    """XHTML document -> speaker turns JSON plus a sidecar parse report."""
    if session.document is None:
        return {"session": session.id, "skipped": "session provides gt_text, nothing to parse"}
    registry = document_parser.read_name_registry_csv(
        _require_file(cfg.registry, "name registry")  # type: ignore[arg-type]
    )
    doc = document_parser.read_document(_require_file(session.document, "document"))
    result = document_parser.parse_document(doc, registry)
    sdir = cfg.session_dir(session.id)
    atomic_write_text(sdir / "turns.json", document_parser.turns_to_json(result.turns))
    sidecar = {
        "session": session.id,
        "turns": len(result.turns),
        **result.stats.as_dict(),
        "warnings": [{"code": w.code, "detail": w.detail} for w in result.warnings],
    }
    atomic_write_text(
        sdir / "parse_report.json", json.dumps(sidecar, ensure_ascii=False, indent=2) + "\n"
    )
    # the sidecar keeps every warning; the run report trims them on "summary"
    if cfg.report_verbosity != "detailed":
        return {**{k: v for k, v in sidecar.items() if k != "warnings"},
                "warning_count": len(result.warnings)}
    return sidecar


def load_gt_words(cfg: PipelineConfig, session: SessionConfig) -> list[aligner.GtWord]:
    """Ground-truth words: parsed turns (transcripts in order) or plain text."""
    if session.document is not None:
        turns_path = _require_file(
            cfg.session_dir(session.id) / "turns.json",
            f"turns for session {session.id} (run parse first)",
        )
        turns = document_parser.turns_from_json(turns_path.read_text(encoding="utf-8"))
        text = " ".join(t.transcript for t in turns)
    else:
        text = _require_file(session.gt_text, "ground-truth text").read_text(  # type: ignore[arg-type]
            encoding="utf-8"
        )
    return aligner.gt_words_from_text(text)


def align_session(cfg: PipelineConfig, session: SessionConfig) -> dict:
    gt = load_gt_words(cfg, session)
    ref = aligner.load_reference_words(_require_file(session.reference, "reference transcript"))
    anchors = aligner.align(gt, ref, cfg.align_params)
    sdir = cfg.session_dir(session.id)
    atomic_write_text(sdir / "anchors.json", aligner.anchors_to_json(anchors))
    return {
        "session": session.id,
        "gt_words": len(gt),
        "ref_words": len(ref),
        "anchors": len(anchors),
    }


def segment_session(cfg: PipelineConfig, session: SessionConfig) -> dict:
    sdir = cfg.session_dir(session.id)
    anchors_path = _require_file(
        sdir / "anchors.json", f"anchors for session {session.id} (run align first)"
    )
    anchors = aligner.anchors_from_json(anchors_path.read_text(encoding="utf-8"))
    gt = load_gt_words(cfg, session)
    warnings: list[dict] = []
    segments = segmenter.build_segments(
        anchors,
        gt,
        cfg.seg_params.max_gap_s,
        id_prefix=session.id,
        warnings=warnings,
    )
    atomic_write_text(sdir / "segments.jsonl", segmenter.segments_to_jsonl(segments))
    rows = segmenter.emit_cut_manifest(segments, session.audio)
    atomic_write_text(sdir / "cut_manifest.csv", segmenter.cut_manifest_to_csv(rows))
    return {"session": session.id, "segments": len(segments), "warnings": warnings}


def score_segments_with_reference(
    segments: Sequence[Segment], ref_words: Sequence[aligner.TimedWord]
) -> list[SegmentScore]:
    """Score each segment against the reference words inside its time span.

    This is the desk-scale stand-in for the external re-transcription step:
    the hypothesis is the reference transcript sliced to [start, end] (both
    ends inclusive, matching the boundary anchors). Segments whose text
    normalizes to nothing are left unscored.
    """
    starts = [w.start_s for w in ref_words]
    scores: list[SegmentScore] = []
    for seg in segments:
        lo = bisect_left(starts, seg.start_s)
        hi = bisect_right(starts, seg.end_s)
        hyp = [ref_words[k].text for k in range(lo, hi) if ref_words[k].text]
        ref_tokens = normalize(seg.text)
        if not ref_tokens:
            continue
        scores.append(SegmentScore(seg.id, " ".join(hyp), wer(ref_tokens, hyp).value))
    return scores


def select_session(cfg: PipelineConfig, session: SessionConfig) -> dict:
    sdir = cfg.session_dir(session.id)
    segments_path = _require_file(
        sdir / "segments.jsonl", f"segments for session {session.id} (run segment first)"
    )
    segments = list(
        segmenter.iter_segments_jsonl(
            segments_path.read_text(encoding="utf-8").splitlines()
        )
    )
    if session.scores is not None:
        scores_text = _require_file(session.scores, "segment scores").read_text(encoding="utf-8")
        scores = list(segmenter.iter_scores_jsonl(scores_text.splitlines()))
    else:
        ref = aligner.load_reference_words(
            _require_file(session.reference, "reference transcript")
        )
        scores = score_segments_with_reference(segments, ref)
        atomic_write_text(sdir / "scores.jsonl", segmenter.scores_to_jsonl(scores))
    kept, dropped = segmenter.select(
        segments, scores, cfg.seg_params.wer_threshold, cfg.seg_params.max_duration_s
    )
    atomic_write_text(sdir / "kept.jsonl", segmenter.segments_to_jsonl(kept))
    dropped_lines = "".join(
        json.dumps({**segmenter.segment_to_obj(seg), "reason": reason}, ensure_ascii=False) + "\n"
        for seg, reason in dropped
    )
    atomic_write_text(sdir / "dropped.jsonl", dropped_lines)
    reasons: dict[str, int] = {}
    for _, reason in dropped:
        reasons[reason] = reasons.get(reason, 0) + 1
    return {
        "session": session.id,
        "segments": len(segments),
        "kept": len(kept),
        "dropped": len(dropped),
        "drop_reasons": {k: reasons[k] for k in sorted(reasons)},
        "scored_internally": session.scores is None,
    }


# ---------------------------------------------------------------------------
# global stages


def stage_match(cfg: PipelineConfig) -> dict:
    if cfg.manifest is None:
        raise MissingInputError("config has no 'manifest'; nothing to match")
    recordings, transcripts = session_matcher.read_manifest(
        _require_file(cfg.manifest, "media manifest")
    )
    result = session_matcher.match_sessions(recordings, transcripts)
    mdir = cfg.out_dir / "match"
    atomic_write_text(mdir / "pairs.csv", session_matcher.pairs_to_csv(result.pairs))
    atomic_write_text(
        mdir / "unmatched_recordings.csv",
        session_matcher.entries_to_csv(result.unmatched_recordings),
    )
    atomic_write_text(
        mdir / "unmatched_transcripts.csv",
        session_matcher.entries_to_csv(result.unmatched_transcripts),
    )
    atomic_write_text(mdir / "warnings.jsonl", session_matcher.warnings_to_jsonl(result.warnings))
    report = {
        "recordings": len(recordings),
        "transcripts": len(transcripts),
        "pairs": len(result.pairs),
        "unmatched_recordings": len(result.unmatched_recordings),
        "unmatched_transcripts": len(result.unmatched_transcripts),
        "warning_count": len(result.warnings),
    }
    if cfg.report_verbosity == "detailed":
        report["warnings"] = result.warnings
    return report


def _iter_session_files(
    cfg: PipelineConfig, name: str, sessions: Sequence[SessionConfig]
) -> Iterator[tuple[SessionConfig, Path]]:
    for session in sessions:
        path = cfg.session_dir(session.id) / name
        if not path.is_file():
            raise MissingInputError(f"{name} for session {session.id} not found: {path}")
        yield session, path


def stage_stats(cfg: PipelineConfig, sessions: Sequence[SessionConfig] | None = None) -> dict:
    """Consolidate kept/dropped/scores across sessions into the corpus report.

    Writes the stats JSON, the WER histogram as CSV, text chart and figure,
    and the merged corpus JSONL.
    """
    if sessions is None:
        sessions = cfg.sessions
    if not sessions:
        raise MissingInputError("no sessions to aggregate")

    def iter_kept() -> Iterator[Segment]:
        for _, path in _iter_session_files(cfg, "kept.jsonl", sessions):
            with open(path, encoding="utf-8") as fh:
                yield from segmenter.iter_segments_jsonl(fh)

    def iter_dropped() -> Iterator[tuple[Segment, str]]:
        for _, path in _iter_session_files(cfg, "dropped.jsonl", sessions):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    obj = json.loads(line)
                    reason = obj.pop("reason", segmenter.REASON_UNSCORED)
                    yield segmenter.segment_from_obj(obj), reason

    def iter_wer_values() -> Iterator[float]:
        for session in sessions:
            scores_path = (
                session.scores
                if session.scores is not None
                else cfg.session_dir(session.id) / "scores.jsonl"
            )
            if scores_path.is_file():
                with open(scores_path, encoding="utf-8") as fh:
                    for sc in segmenter.iter_scores_jsonl(fh):
                        yield sc.wer_value

    def iter_kept_lines() -> Iterator[str]:
        for _, path in _iter_session_files(cfg, "kept.jsonl", sessions):
            with open(path, encoding="utf-8") as fh:
                yield from fh

    stats = segmenter.corpus_stats(iter_kept(), iter_dropped())
    hist = segmenter.wer_histogram(
        iter_wer_values(), cfg.seg_params.bin_width, cfg.seg_params.clip
    )

    sdir = cfg.out_dir / "stats"
    atomic_write_text(sdir / "corpus_stats.json", json.dumps(stats, indent=2) + "\n")
    atomic_write_text(sdir / "wer_histogram.csv", segmenter.histogram_to_csv(hist))
    atomic_write_text(sdir / "wer_histogram.txt", histogram_text_chart(hist))
    atomic_write_lines(sdir / "corpus.jsonl", iter_kept_lines())
    render_wer_histogram(
        hist, sdir / "wer_histogram.png", threshold=cfg.seg_params.wer_threshold
    )
    return {**stats, "scored_segments": hist.total}


# ---------------------------------------------------------------------------
# stage dispatch and the end-to-end run

_SESSION_STAGES = {
    "parse": parse_session,
    "align": align_session,
    "segment": segment_session,
    "select": select_session,
}


def run_stage(stage: str, cfg: PipelineConfig) -> dict:
    """Run one named stage for every configured session; fail fast on error."""
    if stage not in STAGES:
        raise ValidationError(f"unknown stage {stage!r}; expected one of {', '.join(STAGES)}")
    t0 = time.perf_counter()
    if stage == "match":
        report: dict = {"stage": "match", **stage_match(cfg)}
    elif stage == "stats":
        report = {"stage": "stats", **stage_stats(cfg)}
    else:
        if not cfg.sessions:
            raise MissingInputError("config lists no sessions")
        runner = _SESSION_STAGES[stage]
        report = {"stage": stage, "sessions": [runner(cfg, s) for s in cfg.sessions]}
    report["timing"] = {"wall_s": round(time.perf_counter() - t0, 3)}
    _write_report(cfg, stage, report)
    return report


def run_session_chain(cfg: PipelineConfig, session: SessionConfig) -> dict:
    """parse -> align -> segment -> select for one session."""
    return {
        "parse": parse_session(cfg, session),
        "align": align_session(cfg, session),
        "segment": segment_session(cfg, session),
        "select": select_session(cfg, session),
    }


def _session_worker(cfg: PipelineConfig, session: SessionConfig) -> tuple[str, dict, str | None]:
    try:
        return session.id, run_session_chain(cfg, session), None
    except ParlalignError as exc:
        return session.id, {}, f"{type(exc).__name__}: {exc}"
    except Exception as exc:  # quarantine, do not kill the whole run
        return session.id, {}, f"internal error: {type(exc).__name__}: {exc}"


def run_all(cfg: PipelineConfig, jobs: int | None = None) -> dict:
    """Run the whole pipeline; a failing session is quarantined, not fatal.

    Raises MissingInputError when no sessions are configured and
    ParlalignError when every session fails.
    """
    if not cfg.sessions:
        raise MissingInputError("config lists no sessions")
    jobs = jobs if jobs is not None else cfg.jobs
    t0 = time.perf_counter()
    report: dict = {"stage": "run-all"}
    if cfg.manifest is not None:
        report["match"] = stage_match(cfg)

    results: list[tuple[str, dict, str | None]] = []
    if jobs > 1 and len(cfg.sessions) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_session_worker, cfg, s) for s in cfg.sessions]
            results = [f.result() for f in futures]
    else:
        results = [_session_worker(cfg, s) for s in cfg.sessions]

    ok_ids = [sid for sid, _, err in results if err is None]
    report["sessions"] = {sid: rep for sid, rep, err in results if err is None}
    report["quarantined"] = [
        {"session": sid, "error": err} for sid, _, err in results if err is not None
    ]
    if not ok_ids:
        _finish_run_report(cfg, report, t0)
        raise ParlalignError(
            "all sessions failed: " + "; ".join(q["error"] for q in report["quarantined"])
        )
    ok_sessions = [s for s in cfg.sessions if s.id in set(ok_ids)]
    report["stats"] = stage_stats(cfg, ok_sessions)
    _finish_run_report(cfg, report, t0)
    return report


def _finish_run_report(cfg: PipelineConfig, report: dict, t0: float) -> None:
    report["timing"] = {"wall_s": round(time.perf_counter() - t0, 3)}
    _write_report(cfg, "run_all", report)
