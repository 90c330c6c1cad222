"""Rendering of corpus reports: text bar charts and matplotlib figures.

Figures are written straight to files (Agg backend); nothing here opens a
display. The WER histogram mirrors the delimited output produced by the
stats stage so the two can be eyeballed side by side.
"""

from __future__ import annotations

import math
from pathlib import Path

from .segmenter import Histogram

_BAR_WIDTH = 50


def histogram_text_chart(hist: Histogram, width: int = _BAR_WIDTH) -> str:
    """Fixed-width bar chart of the WER distribution, one line per bin."""
    peak = max((b.count for b in hist.bins), default=0)
    lines = []
    for b in hist.bins:
        label = f">={b.low:.2f}" if math.isinf(b.high) else f"[{b.low:.2f},{b.high:.2f})"
        bar = "#" * (round(b.count / peak * width) if peak else 0)
        lines.append(f"{label:>14} {b.count:>9} {bar}")
    return "\n".join(lines) + "\n"


def render_wer_histogram(
    hist: Histogram,
    path: str | Path,
    *,
    threshold: float | None = None,
    title: str = "WER distribution of scored segments",
) -> None:
    """Write the WER histogram as a figure (format from the file suffix)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    regular = [b for b in hist.bins if not math.isinf(b.high)]
    overflow = hist.bins[-1] if hist.bins and math.isinf(hist.bins[-1].high) else None

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.bar(
        [b.low for b in regular],
        [b.count for b in regular],
        width=hist.bin_width,
        align="edge",
        color="#4878a8",
        edgecolor="white",
        linewidth=0.3,
    )
    if overflow is not None and overflow.count:
        ax.bar(
            [hist.clip],
            [overflow.count],
            width=hist.bin_width,
            align="edge",
            color="#a84848",
            edgecolor="white",
            linewidth=0.3,
            label=f">= {hist.clip:g} (overflow)",
        )
        ax.legend(frameon=False)
    if threshold is not None:
        ax.axvline(threshold, color="black", linestyle="--", linewidth=1)
        ax.annotate(
            f"threshold {threshold:g}",
            xy=(threshold, 1),
            xycoords=("data", "axes fraction"),
            xytext=(4, -12),
            textcoords="offset points",
            fontsize=8,
        )
    ax.set_xlabel("WER")
    ax.set_ylabel("segments")
    ax.set_title(title)
    ax.margins(x=0.01)
    fig.tight_layout()
    # no creation date in the PNG: re-runs must be byte-identical
    metadata = {"Date": None} if str(path).endswith(".png") else None
    fig.savefig(path, dpi=150, metadata=metadata)
    plt.close(fig)
