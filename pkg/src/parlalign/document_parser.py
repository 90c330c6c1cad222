"""Parse XHTML verbatim-transcript documents into ordered speaker turns.

The input is one XHTML file per meeting day (the output of an external
DOCX converter). Speaker announcements are bold lines of the form
"Surname, First, role"; everything between two announcements is the
verbatim speech of the announced speaker. Transcriber notes, written in
() or [] brackets, are removed from the speech text.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DocumentParseError, ValidationError
from .text_metrics import canonical_token

# Bold lines qualifying as speaker annotations: 1..3 known-name hits, <= 15 words.
MAX_ANNOTATION_WORDS = 15
MIN_NAME_HITS = 1
MAX_NAME_HITS = 3

NameRegistry = frozenset[str]


@dataclass(frozen=True)
class TextRun:
    """A contiguous span of document text with a single boldness."""

    text: str
    bold: bool


@dataclass(frozen=True)
class SpeakerTurn:
    speaker: str
    transcript: str


@dataclass(frozen=True)
class ParseWarning:
    code: str
    detail: str


@dataclass
class ParseStats:
    """Sidecar counters for the per-document parse report."""

    runs: int = 0
    annotations: int = 0
    discarded_header_runs: int = 0
    stripped_note_spans: int = 0

    def as_dict(self) -> dict:
        return {
            "runs": self.runs,
            "annotations": self.annotations,
            "discarded_header_runs": self.discarded_header_runs,
            "stripped_note_spans": self.stripped_note_spans,
        }


# Tags that delimit a block of text; run merging never crosses these.
_BLOCK_TAGS = {
    "html", "body", "p", "div", "section", "article", "blockquote",
    "h1", "h2", "h3", "h4", "h5", "h6",
    "ul", "ol", "li", "table", "thead", "tbody", "tr", "td", "th",
}
# Content inside these is not document text.
_SKIP_TAGS = {"head", "script", "style"}


class _RunExtractor(HTMLParser):
    """Collects (fragment, open-bold-ids) pairs and resolves boldness per block.

    Each <b> gets an id; a fragment is bold iff at least one of the <b>
    tags open while it was read is eventually closed. Bold tags left open
    at a block boundary are unmatched: their region falls back to non-bold
    and a warning is recorded.
    """

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.runs: list[TextRun] = []
        self.warnings: list[ParseWarning] = []
        self._fragments: list[tuple[str, frozenset[int]]] = []
        self._open_b: list[int] = []
        self._closed_b: set[int] = set()
        self._next_b_id = 0
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
        elif tag in _BLOCK_TAGS:
            self._flush_block()
        elif tag == "b":
            self._open_b.append(self._next_b_id)
            self._next_b_id += 1
        elif tag == "br":
            self._fragments.append((" ", frozenset()))

    def handle_startendtag(self, tag, attrs):
        if tag == "br":
            self._fragments.append((" ", frozenset()))
        elif tag in _BLOCK_TAGS:
            self._flush_block()

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
        elif tag in _BLOCK_TAGS:
            self._flush_block()
        elif tag == "b":
            if self._open_b:
                self._closed_b.add(self._open_b.pop())
            else:
                self.warnings.append(ParseWarning(
                    "unmatched_bold_close",
                    f"</b> without matching <b> near line {self.getpos()[0]}",
                ))

    def handle_data(self, data):
        if self._skip_depth or not data:
            return
        self._fragments.append((data, frozenset(self._open_b)))

    def close(self):
        super().close()
        self._flush_block()

    def _flush_block(self) -> None:
        for b_id in self._open_b:
            self.warnings.append(ParseWarning(
                "unclosed_bold",
                f"<b> (#{b_id}) left open at block boundary near line {self.getpos()[0]}",
            ))
        self._open_b.clear()
        if not self._fragments:
            return
        # Group adjacent fragments by resolved boldness, then collapse whitespace.
        groups: list[tuple[list[str], bool]] = []
        for text, b_ids in self._fragments:
            bold = any(b in self._closed_b for b in b_ids)
            if groups and groups[-1][1] == bold:
                groups[-1][0].append(text)
            else:
                groups.append(([text], bold))
        for pieces, bold in groups:
            text = " ".join("".join(pieces).split())
            if text:
                self.runs.append(TextRun(text=text, bold=bold))
        self._fragments.clear()


def extract_runs(document: str, *, warnings: list[ParseWarning] | None = None) -> list[TextRun]:
    """Extract text runs from XHTML in document order.

    Bold spans (<b>...</b>) yield bold runs; everything else is non-bold.
    Adjacent same-boldness fragments within one block element merge into a
    single run; whitespace is collapsed; empty runs are dropped. Mismatched
    bold tags degrade to non-bold text with a warning record.
    """
    extractor = _RunExtractor()
    try:
        extractor.feed(document)
        extractor.close()
    except Exception as exc:
        line, col = extractor.getpos()
        offset = _line_col_to_offset(document, line, col)
        raise DocumentParseError(
            f"unparseable markup at byte {offset} (line {line}, column {col}): {exc}",
            byte_offset=offset,
        ) from exc
    if warnings is not None:
        warnings.extend(extractor.warnings)
    return extractor.runs


def _line_col_to_offset(document: str, line: int, col: int) -> int:
    chars = sum(len(ln) + 1 for ln in document.split("\n")[: line - 1]) + col
    return len(document[:chars].encode("utf-8"))


def read_document(path: str | Path) -> str:
    """Read an XHTML document as UTF-8, reporting the byte offset on failure."""
    data = Path(path).read_bytes()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DocumentParseError(
            f"{path}: invalid UTF-8 at byte {exc.start}", byte_offset=exc.start
        ) from exc


def load_name_registry(records: Iterable[tuple[str, str]]) -> NameRegistry:
    """Build the known-name set from (first_name, surname) records.

    Every whitespace-separated token of either field contributes one
    case-folded, punctuation-stripped entry, so multi-token surnames match
    on each of their parts. An empty record list is an error: annotation
    detection against an empty registry would be vacuous.
    """
    names: set[str] = set()
    empty = True
    for first, surname in records:
        empty = False
        for fld in (first, surname):
            for tok in fld.split():
                canon = canonical_token(tok)
                if canon:
                    names.add(canon)
    if empty:
        raise ValidationError("name registry records are empty")
    if not names:
        raise ValidationError("name registry contains no usable tokens")
    return frozenset(names)


def read_name_registry_csv(path: str | Path) -> NameRegistry:
    """Load the registry from a UTF-8 CSV with header first_name,surname."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["first_name", "surname"]:
            raise ValidationError(
                f"{path}: expected header 'first_name,surname', got {reader.fieldnames}"
            )
        records = [(row["first_name"], row["surname"]) for row in reader]
    if not records:
        raise ValidationError(f"{path}: registry has no rows")
    return load_name_registry(records)


def is_speaker_annotation(run: TextRun, registry: NameRegistry) -> bool:
    """Heuristic for speaker announcements.

    True iff the run is bold, its token hits against the registry number
    between 1 and 3, and it has at most 15 whitespace-separated words.
    """
    if not run.bold:
        return False
    words = run.text.split()
    if len(words) > MAX_ANNOTATION_WORDS:
        return False
    hits = 0
    for w in words:
        if canonical_token(w) in registry:
            hits += 1
            if hits > MAX_NAME_HITS:
                return False
    return hits >= MIN_NAME_HITS


_BALANCED_NOTE = re.compile(r"\([^()]*\)|\[[^\[\]]*\]")
_OPENER = re.compile(r"[(\[]")


def strip_notes_counting(text: str) -> tuple[str, int]:
    """strip_notes plus the number of note spans removed."""
    count = 0
    s = text
    while True:
        s, n = _BALANCED_NOTE.subn(" ", s)
        if not n:
            break
        count += n
    # Openers that survive the fixpoint have no closer of their kind left;
    # the note runs from the bracket to the next period, or to end of text.
    while True:
        m = _OPENER.search(s)
        if m is None:
            break
        dot = s.find(".", m.start())
        tail = s[dot + 1 :] if dot != -1 else ""
        s = s[: m.start()] + " " + tail
        count += 1
    return " ".join(s.split()), count


def strip_notes(text: str) -> str:
    """Remove transcriber notes written in () or [] brackets.

    Balanced spans are removed innermost-first (a period inside a balanced
    span does not end it). An unclosed bracket removes everything up to and
    including the next period, or to the end of the text. Whitespace around
    removals collapses to a single space.
    """
    return strip_notes_counting(text)[0]


def split_turns(
    runs: Sequence[TextRun],
    registry: NameRegistry,
    *,
    stats: ParseStats | None = None,
) -> list[SpeakerTurn]:
    """Split runs into speaker turns at annotation boundaries.

    Runs before the first annotation (date/time headers etc.) are discarded
    and counted. Each turn's transcript is the space-joined text of all runs
    up to the next annotation, with notes stripped afterwards; annotation
    text itself is never note-stripped. Raises ValidationError when no run
    classifies as an annotation.
    """
    if stats is None:
        stats = ParseStats()
    stats.runs = len(runs)
    turns: list[SpeakerTurn] = []
    speaker: str | None = None
    texts: list[str] = []

    def close_turn() -> None:
        if speaker is None:
            return
        transcript, n_notes = strip_notes_counting(" ".join(texts))
        stats.stripped_note_spans += n_notes
        turns.append(SpeakerTurn(speaker=speaker, transcript=transcript))

    for run in runs:
        if is_speaker_annotation(run, registry):
            close_turn()
            speaker = run.text
            texts = []
            stats.annotations += 1
        elif speaker is None:
            stats.discarded_header_runs += 1
        else:
            texts.append(run.text)
    close_turn()

    if not turns:
        raise ValidationError("no speaker annotations found; not a verbatim transcript")
    return turns


@dataclass
class ParseResult:
    turns: list[SpeakerTurn]
    stats: ParseStats
    warnings: list[ParseWarning] = field(default_factory=list)


def parse_document(document: str, registry: NameRegistry) -> ParseResult:
    """End-to-end parse: XHTML text -> ordered speaker turns plus report data."""
    warnings: list[ParseWarning] = []
    runs = extract_runs(document, warnings=warnings)
    stats = ParseStats()
    turns = split_turns(runs, registry, stats=stats)
    return ParseResult(turns=turns, stats=stats, warnings=warnings)


def turns_to_json(turns: Sequence[SpeakerTurn]) -> str:
    """Serialize turns as a JSON array of {speaker, transcript} objects."""
    payload = [{"speaker": t.speaker, "transcript": t.transcript} for t in turns]
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def turns_from_json(text: str) -> list[SpeakerTurn]:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"turns JSON is not valid JSON: {exc}") from exc
    if not isinstance(payload, list):
        raise ValidationError("turns JSON must be an array")
    turns = []
    for i, obj in enumerate(payload):
        if not isinstance(obj, dict) or set(obj) != {"speaker", "transcript"}:
            raise ValidationError(f"turns JSON entry {i} must have exactly speaker/transcript keys")
        turns.append(SpeakerTurn(speaker=obj["speaker"], transcript=obj["transcript"]))
    return turns
