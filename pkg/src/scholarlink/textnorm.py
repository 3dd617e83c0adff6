"""Text normalization and low-level string metrics.

All label matching in the package goes through :func:`normalize` so that
the index, the lexicon detector and the string-similarity feature agree on
what "the same label" means.
"""
from __future__ import annotations

import unicodedata
from typing import Sequence

import numpy as np


def normalize(text: str) -> str:
    """Unicode NFC, casefold, collapse whitespace runs to single spaces."""
    folded = unicodedata.normalize("NFC", text).casefold()
    return " ".join(folded.split())


def trigrams(text: str) -> set[str]:
    """Character trigrams of ``text`` padded with two boundary marks.

    Padding guarantees even one-character strings produce trigrams.
    """
    padded = f"##{text}##"
    return {padded[i : i + 3] for i in range(len(padded) - 2)}


def levenshtein(a: str, b: str) -> int:
    """Edit distance (insert/delete/substitute, unit costs), two-row DP."""
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
            append(min(prev[j] + 1, cur[-1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def levenshtein_many(query: str, texts: Sequence[str]) -> np.ndarray:
    """Edit distance from ``query`` to every string in ``texts`` at once.

    Same results as calling :func:`levenshtein` per pair; the DP rows for
    all texts advance together, one numpy update per query character.
    Returns an int64 array aligned with ``texts``.
    """
    n = len(texts)
    lens = np.fromiter((len(t) for t in texts), dtype=np.int64, count=n)
    if n == 0 or not query:
        return lens
    width = int(lens.max())
    if width == 0:
        return np.full(n, len(query), dtype=np.int64)
    # Code points right-padded with -1, which never matches a query char,
    # so padded columns cannot influence the cells we read back.
    chars = np.full((n, width), -1, dtype=np.int64)
    for row, text in enumerate(texts):
        if text:
            codes = np.frombuffer(text.encode("utf-32-le"), dtype=np.uint32)
            chars[row, : len(text)] = codes
    steps = np.arange(width + 1, dtype=np.int64)
    prev = np.tile(steps, (n, 1))
    cur = np.empty_like(prev)
    for i, ch in enumerate(query, 1):
        cur[:, 0] = i
        np.minimum(prev[:, 1:] + 1, prev[:, :-1] + (chars != ord(ch)), out=cur[:, 1:])
        # Fold in insertions: cur[j] = min over d <= j of cur[d] + (j - d),
        # a prefix minimum after shifting out the column offset.
        cur -= steps
        np.minimum.accumulate(cur, axis=1, out=cur)
        cur += steps
        prev, cur = cur, prev
    return prev[np.arange(n), lens]
