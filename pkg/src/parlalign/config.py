"""Pipeline configuration: strict YAML parsing plus CLI overrides.

Unknown keys are rejected outright; a typo in a threshold name must not
silently fall back to defaults. Relative paths are resolved against the
config file's directory.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path

import yaml

from .aligner import AlignParams
from .errors import MissingInputError, ValidationError
from .segmenter import (
    DEFAULT_BIN_WIDTH,
    DEFAULT_CLIP,
    DEFAULT_MAX_DURATION_S,
    DEFAULT_MAX_GAP_S,
    DEFAULT_WER_THRESHOLD,
)

_SESSION_ID_RE = re.compile(r"^[A-Za-z0-9._-]+$")

_TOP_KEYS = {
    "out_dir", "registry", "manifest", "align", "segmenter",
    "sessions", "jobs", "report_verbosity",
}
_ALIGN_KEYS = {"max_word_dist", "window", "context_radius", "min_score", "min_word_len"}
_SEG_KEYS = {"max_gap_s", "wer_threshold", "max_duration_s", "bin_width", "clip"}
_SESSION_KEYS = {"id", "document", "gt_text", "reference", "audio", "scores"}


@dataclass(frozen=True)
class SegmenterParams:
    max_gap_s: float = DEFAULT_MAX_GAP_S
    wer_threshold: float = DEFAULT_WER_THRESHOLD
    max_duration_s: float = DEFAULT_MAX_DURATION_S
    bin_width: float = DEFAULT_BIN_WIDTH
    clip: float = DEFAULT_CLIP

    def __post_init__(self):
        if self.wer_threshold < 0:
            raise ValidationError("wer_threshold must be >= 0")
        for name in ("max_gap_s", "max_duration_s", "bin_width", "clip"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be > 0")


@dataclass(frozen=True)
class SessionConfig:
    id: str
    reference: Path
    audio: str
    document: Path | None = None
    gt_text: Path | None = None
    scores: Path | None = None


@dataclass(frozen=True)
class PipelineConfig:
    out_dir: Path
    align_params: AlignParams
    seg_params: SegmenterParams
    sessions: tuple[SessionConfig, ...]
    registry: Path | None = None
    manifest: Path | None = None
    jobs: int = 1
    report_verbosity: str = "summary"

    def session_dir(self, session_id: str) -> Path:
        return self.out_dir / "sessions" / session_id


def _require_keys(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ValidationError(f"{where}: unknown config key(s): {', '.join(sorted(unknown))}")


def _as_mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ValidationError(f"{where}: expected a mapping")
    return value


def _path(base: Path, value, where: str) -> Path:
    if not isinstance(value, str) or not value:
        raise ValidationError(f"{where}: expected a non-empty path string")
    p = Path(value)
    return p if p.is_absolute() else base / p


def _numeric(value, where: str, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}: expected a number, got {value!r}")
    if kind is int and isinstance(value, float) and not value.is_integer():
        raise ValidationError(f"{where}: expected an integer, got {value!r}")
    return kind(value)


def _parse_session(raw: dict, base: Path, index: int) -> SessionConfig:
    where = f"sessions[{index}]"
    _require_keys(raw, _SESSION_KEYS, where)
    sid = raw.get("id")
    if not isinstance(sid, str) or not _SESSION_ID_RE.match(sid):
        raise ValidationError(f"{where}: id must match {_SESSION_ID_RE.pattern}")
    if "reference" not in raw:
        raise ValidationError(f"{where}: missing required key 'reference'")
    if "audio" not in raw or not isinstance(raw["audio"], str) or not raw["audio"]:
        raise ValidationError(f"{where}: missing required key 'audio'")
    has_doc = "document" in raw
    has_text = "gt_text" in raw
    if has_doc == has_text:
        raise ValidationError(f"{where}: exactly one of 'document' or 'gt_text' is required")
    return SessionConfig(
        id=sid,
        reference=_path(base, raw["reference"], f"{where}.reference"),
        audio=raw["audio"],
        document=_path(base, raw["document"], f"{where}.document") if has_doc else None,
        gt_text=_path(base, raw["gt_text"], f"{where}.gt_text") if has_text else None,
        scores=_path(base, raw["scores"], f"{where}.scores") if "scores" in raw else None,
    )


def parse_config(raw: dict, base: Path) -> PipelineConfig:
    if not isinstance(raw, dict):
        raise ValidationError("config root must be a mapping")
    _require_keys(raw, _TOP_KEYS, "config")
    if "out_dir" not in raw:
        raise ValidationError("config: missing required key 'out_dir'")
    out_dir = _path(base, raw["out_dir"], "out_dir")

    align_raw = _as_mapping(raw.get("align"), "align")
    _require_keys(align_raw, _ALIGN_KEYS, "align")
    align_kwargs = {}
    for key in _ALIGN_KEYS & set(align_raw):
        align_kwargs[key] = _numeric(align_raw[key], f"align.{key}", int)
    align_params = AlignParams(**align_kwargs)

    seg_raw = _as_mapping(raw.get("segmenter"), "segmenter")
    _require_keys(seg_raw, _SEG_KEYS, "segmenter")
    seg_kwargs = {}
    for key in _SEG_KEYS & set(seg_raw):
        seg_kwargs[key] = _numeric(seg_raw[key], f"segmenter.{key}")
    seg_params = SegmenterParams(**seg_kwargs)

    sessions_raw = raw.get("sessions", [])
    if sessions_raw is None:
        sessions_raw = []
    if not isinstance(sessions_raw, list):
        raise ValidationError("sessions: expected a list")
    sessions = tuple(
        _parse_session(_as_mapping(s, f"sessions[{i}]"), base, i)
        for i, s in enumerate(sessions_raw)
    )
    seen: set[str] = set()
    for s in sessions:
        if s.id in seen:
            raise ValidationError(f"duplicate session id {s.id!r}")
        seen.add(s.id)
    if any(s.document for s in sessions) and "registry" not in raw:
        raise ValidationError("config: 'registry' is required when a session has a document")

    jobs = 1
    if "jobs" in raw:
        jobs = _numeric(raw["jobs"], "jobs", int)
        if jobs < 1:
            raise ValidationError("jobs must be >= 1")

    verbosity = raw.get("report_verbosity", "summary")
    if verbosity not in ("summary", "detailed"):
        raise ValidationError("report_verbosity must be 'summary' or 'detailed'")

    return PipelineConfig(
        out_dir=out_dir,
        align_params=align_params,
        seg_params=seg_params,
        sessions=sessions,
        registry=_path(base, raw["registry"], "registry") if "registry" in raw else None,
        manifest=_path(base, raw["manifest"], "manifest") if "manifest" in raw else None,
        jobs=jobs,
        report_verbosity=verbosity,
    )


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    """Load and validate a pipeline config; apply CLI parameter overrides."""
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ValidationError(f"{path}: invalid YAML: {exc}") from exc
    cfg = parse_config(raw if raw is not None else {}, path.parent.resolve())
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg


def apply_overrides(cfg: PipelineConfig, overrides: dict) -> PipelineConfig:
    """Override align/segmenter parameters and jobs with CLI flag values."""
    align_kwargs = {k: v for k, v in overrides.items() if k in _ALIGN_KEYS and v is not None}
    seg_kwargs = {k: v for k, v in overrides.items() if k in _SEG_KEYS and v is not None}
    unknown = set(overrides) - _ALIGN_KEYS - _SEG_KEYS - {"jobs"}
    if unknown:
        raise ValidationError(f"unknown override(s): {', '.join(sorted(unknown))}")
    if align_kwargs:
        cfg = replace(cfg, align_params=replace(cfg.align_params, **align_kwargs))
    if seg_kwargs:
        cfg = replace(cfg, seg_params=replace(cfg.seg_params, **seg_kwargs))
    if overrides.get("jobs") is not None:
        jobs = int(overrides["jobs"])
        if jobs < 1:
            raise ValidationError("jobs must be >= 1")
        cfg = replace(cfg, jobs=jobs)
    return cfg
