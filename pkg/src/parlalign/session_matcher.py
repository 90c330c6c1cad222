"""Pair audio recordings with transcript documents by (session number, date).

A session number alone can span multiple meeting days, so the exact date
is part of the key. Duplicate keys on either side are quarantined to the
unmatched outputs instead of being paired arbitrarily.
"""

from __future__ import annotations

import csv
import datetime
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import ValidationError

KIND_RECORDING = "recording"
KIND_TRANSCRIPT = "transcript"

MANIFEST_HEADER = ["kind", "path", "session_number", "date", "duration_seconds"]


@dataclass(frozen=True, order=True)
class SessionKey:
    session_number: int
    date: datetime.date

    def __post_init__(self):
        if self.session_number < 1:
            raise ValidationError(f"session_number must be >= 1, got {self.session_number}")


@dataclass(frozen=True)
class MediaEntry:
    kind: str
    path: str
    key: SessionKey
    duration_seconds: float = 0.0

    def __post_init__(self):
        if not self.path:
            raise ValidationError("media entry path is empty")
        if self.duration_seconds < 0:
            raise ValidationError(f"{self.path}: negative duration")


class MatchResult(NamedTuple):
    pairs: list[tuple[MediaEntry, MediaEntry]]
    unmatched_recordings: list[MediaEntry]
    unmatched_transcripts: list[MediaEntry]
    warnings: list[dict]


def _sort_key(entry: MediaEntry):
    return (entry.key, entry.path)


def match_sessions(
    recordings: Sequence[MediaEntry], transcripts: Sequence[MediaEntry]
) -> MatchResult:
    """Match each recording to the transcript sharing its exact session key.

    Returns pairs plus the unmatched remainder of both sides; every input
    entry lands in exactly one output. Keys duplicated within a side send
    all their entries (both sides) to the unmatched outputs with an
    ambiguity warning. Outputs are sorted by (session_number, date).
    """
    by_key_rec: dict[SessionKey, list[MediaEntry]] = {}
    by_key_tr: dict[SessionKey, list[MediaEntry]] = {}
    for e in recordings:
        by_key_rec.setdefault(e.key, []).append(e)
    for e in transcripts:
        by_key_tr.setdefault(e.key, []).append(e)

    pairs: list[tuple[MediaEntry, MediaEntry]] = []
    un_rec: list[MediaEntry] = []
    un_tr: list[MediaEntry] = []
    warnings: list[dict] = []

    for key in sorted(set(by_key_rec) | set(by_key_tr)):
        recs = by_key_rec.get(key, [])
        trs = by_key_tr.get(key, [])
        if len(recs) > 1 or len(trs) > 1:
            warnings.append({
                "warning": "ambiguous_key",
                "session_number": key.session_number,
                "date": key.date.isoformat(),
                "recordings": len(recs),
                "transcripts": len(trs),
            })
            un_rec.extend(sorted(recs, key=_sort_key))
            un_tr.extend(sorted(trs, key=_sort_key))
        elif recs and trs:
            pairs.append((recs[0], trs[0]))
        elif recs:
            un_rec.extend(recs)
        else:
            un_tr.extend(trs)

    return MatchResult(pairs, un_rec, un_tr, warnings)


def _parse_row(row: dict, lineno: int, source: str) -> MediaEntry:
    kind = row["kind"].strip()
    if kind not in (KIND_RECORDING, KIND_TRANSCRIPT):
        raise ValidationError(f"{source}:{lineno}: unknown kind {kind!r}")
    try:
        number = int(row["session_number"])
        date = datetime.date.fromisoformat(row["date"].strip())
        duration = float(row["duration_seconds"])
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"{source}:{lineno}: {exc}") from exc
    if kind == KIND_TRANSCRIPT and duration != 0.0:
        raise ValidationError(f"{source}:{lineno}: transcripts must have duration_seconds 0")
    return MediaEntry(
        kind=kind,
        path=row["path"].strip(),
        key=SessionKey(number, date),
        duration_seconds=duration,
    )


def read_manifest(path: str | Path) -> tuple[list[MediaEntry], list[MediaEntry]]:
    """Read the media manifest CSV into (recordings, transcripts)."""
    recordings: list[MediaEntry] = []
    transcripts: list[MediaEntry] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != MANIFEST_HEADER:
            raise ValidationError(
                f"{path}: expected header {','.join(MANIFEST_HEADER)!r}, got {reader.fieldnames}"
            )
        for lineno, row in enumerate(reader, start=2):
            if None in row or any(v is None for v in row.values()):
                raise ValidationError(f"{path}:{lineno}: wrong number of columns")
            entry = _parse_row(row, lineno, str(path))
            (recordings if entry.kind == KIND_RECORDING else transcripts).append(entry)
    return recordings, transcripts


def pairs_to_csv(pairs: Iterable[tuple[MediaEntry, MediaEntry]]) -> str:
    lines = ["recording_path,transcript_path,session_number,date"]
    for rec, tr in pairs:
        lines.append(f"{rec.path},{tr.path},{rec.key.session_number},{rec.key.date.isoformat()}")
    return "\n".join(lines) + "\n"


def entries_to_csv(entries: Iterable[MediaEntry]) -> str:
    lines = [",".join(MANIFEST_HEADER)]
    for e in entries:
        lines.append(
            f"{e.kind},{e.path},{e.key.session_number},{e.key.date.isoformat()},{e.duration_seconds!r}"
        )
    return "\n".join(lines) + "\n"


def warnings_to_jsonl(warnings: Iterable[dict]) -> str:
    return "".join(json.dumps(w, ensure_ascii=False) + "\n" for w in warnings)
