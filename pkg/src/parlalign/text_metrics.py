"""Text normalization, Levenshtein distance, and word error rate.

These are the hot-path primitives: the aligner calls the bounded distance
check millions of times per session, so everything here avoids per-call
allocations where it can.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from typing import Sequence

# A normalized word sequence: case-folded, punctuation-free, non-empty tokens.
NormalizedWords = list[str]

# Character class lookups are memoized; transcripts reuse a small alphabet.
_punct_cache: dict[str, bool] = {}


def _is_punct(ch: str) -> bool:
    hit = _punct_cache.get(ch)
    if hit is None:
        hit = unicodedata.category(ch).startswith("P")
        _punct_cache[ch] = hit
    return hit


def canonical_token(raw: str) -> str:
    """Case-fold and drop every Unicode punctuation character.

    Diacritics are preserved. Returns "" when nothing survives.
    """
    return "".join(ch for ch in raw.casefold() if not _is_punct(ch))


def normalize(text: str) -> NormalizedWords:
    """Split on whitespace and canonicalize each token, dropping empties.

    >>> normalize("Ďakujem, pani predsedajúca.")
    ['ďakujem', 'pani', 'predsedajúca']
    """
    out = []
    for raw in text.split():
        tok = canonical_token(raw)
        if tok:
            out.append(tok)
    return out


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance over Unicode code points."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        append = cur.append
        for j, cb in enumerate(b, 1):
            if ca == cb:
                append(prev[j - 1])
            else:
                append(1 + min(prev[j], cur[j - 1], prev[j - 1]))
        prev = cur
    return prev[-1]


def _within_one(a: str, b: str) -> bool:
    # One substitution, one indel, or equality; O(len) with slice compares.
    if a == b:
        return True
    la, lb = len(a), len(b)
    if la > lb:
        a, b, la, lb = b, a, lb, la
    if lb - la > 1:
        return False
    i = 0
    while i < la and a[i] == b[i]:
        i += 1
    if la == lb:
        return a[i + 1 :] == b[i + 1 :]
    return a[i:] == b[i + 1 :]


def levenshtein_within(a: str, b: str, limit: int) -> bool:
    """True iff levenshtein(a, b) <= limit. Cheap for the limit<=1 cases."""
    if limit <= 0:
        return a == b
    if limit == 1:
        return _within_one(a, b)
    if abs(len(a) - len(b)) > limit:
        return False
    return levenshtein(a, b) <= limit


@dataclass(frozen=True)
class WerScore:
    """S/D/I decomposition of one optimal word-level alignment."""

    substitutions: int
    deletions: int
    insertions: int
    reference_length: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def value(self) -> float:
        return self.errors / self.reference_length


def wer(reference: Sequence[str], hypothesis: Sequence[str]) -> WerScore:
    """Word error rate with a deterministic S/D/I decomposition.

    The backtrace prefers a substitution over a delete+insert pair and a
    deletion over an insertion, so equal-cost alignments always decompose
    the same way. The value itself is alignment-independent and may exceed
    1.0 when the hypothesis carries many extra words.

    Raises ValueError on an empty reference (undefined denominator).
    """
    if not reference:
        raise ValueError("WER is undefined for an empty reference")
    m, n = len(reference), len(hypothesis)
    dp = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        dp[i][0] = i
    for j in range(n + 1):
        dp[0][j] = j
    for i in range(1, m + 1):
        ref_i = reference[i - 1]
        row = dp[i]
        prev = dp[i - 1]
        for j in range(1, n + 1):
            if ref_i == hypothesis[j - 1]:
                row[j] = prev[j - 1]
            else:
                row[j] = 1 + min(prev[j - 1], prev[j], row[j - 1])
    subs = dels = ins = 0
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0 and reference[i - 1] == hypothesis[j - 1] and dp[i][j] == dp[i - 1][j - 1]:
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and dp[i][j] == dp[i - 1][j - 1] + 1:
            subs += 1
            i -= 1
            j -= 1
        elif i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return WerScore(subs, dels, ins, m)
