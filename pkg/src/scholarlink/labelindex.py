"""Fuzzy label retrieval over the entity store.

Every label and alias becomes an index entry scored against queries with
a blend of trigram Jaccard overlap and Levenshtein ratio:

    score = 0.75 * jaccard(padded trigrams) + 0.25 * (1 - lev/max_len)

Candidate generation walks a trigram inverted index. Entries sharing no
trigram with the query score strictly below 0.25 (their Jaccard term is
zero and the Levenshtein ratio of two distinct strings is below 1), so
whenever the k-th posting hit scores at least 0.25 the posting set
provably contains the true top k. Otherwise we fall back to scanning all
entries, keeping results exactly equal to a brute-force ranking.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

from .binio import Reader, Writer
from .errors import EmptyQueryError, FormatVersionError, InvalidKError
from .kgstore import PERSON, PUBLICATION, EntityStore, EntityType
from .textnorm import levenshtein_many, normalize, trigrams

INDEX_MAGIC = b"ELIX"
DEFAULT_K = 10

_TYPE_TAGS = {"person": 0, "publication": 1, "other": 2}


@dataclass(frozen=True)
class IndexEntry:
    uri: str
    text: str  # label or alias as stored
    norm: str
    etype: EntityType


@dataclass(frozen=True)
class Candidate:
    uri: str
    matched_label: str
    etype: EntityType
    lexical_score: float
    lev_ratio: float


def duplicate_label_exists(candidates: list["Candidate"], rule: str = "top") -> bool:
    """Duplicate-label trigger for conditional disambiguation.

    ``top``: the top candidate's normalized label equals another
    candidate's (different uri). ``any``: any two candidates with
    different uris share a normalized label. Empty lists never trigger.
    """
    if rule not in ("top", "any"):
        raise ValueError(f"rule must be 'top' or 'any', got {rule!r}")
    if len(candidates) < 2:
        return False
    norms = [normalize(c.matched_label) for c in candidates]
    if rule == "top":
        return any(
            norms[0] == norms[i] and candidates[0].uri != candidates[i].uri
            for i in range(1, len(candidates))
        )
    by_label: dict[str, str] = {}
    for c, n in zip(candidates, norms):
        seen = by_label.get(n)
        if seen is not None and seen != c.uri:
            return True
        by_label.setdefault(n, c.uri)
    return False


class LabelIndex:
    """Trigram inverted index over entity labels and aliases."""

    def __init__(self, entries: list[IndexEntry]):
        self.entries = entries
        self._grams: list[frozenset[str]] = [frozenset(trigrams(e.norm)) for e in entries]
        self.postings: dict[str, list[int]] = {}
        self.by_norm: dict[str, list[int]] = {}
        for eid, entry in enumerate(entries):
            for g in self._grams[eid]:
                self.postings.setdefault(g, []).append(eid)
            self.by_norm.setdefault(entry.norm, []).append(eid)

    def __len__(self) -> int:
        return len(self.entries)

    def _score_many(
        self,
        eids: list[int],
        nq: str,
        tq: frozenset[str],
        overlaps: dict[int, int] | None = None,
    ) -> dict[int, tuple[float, float]]:
        dists = levenshtein_many(nq, [self.entries[eid].norm for eid in eids])
        lq = len(nq)
        scored: dict[int, tuple[float, float]] = {}
        for eid, dist in zip(eids, dists.tolist()):
            entry = self.entries[eid]
            te = self._grams[eid]
            overlap = overlaps[eid] if overlaps is not None else len(tq & te)
            union = len(tq) + len(te) - overlap
            jac = overlap / union if union else 0.0
            ratio = 1.0 - dist / max(lq, len(entry.norm))
            scored[eid] = (0.75 * jac + 0.25 * ratio, ratio)
        return scored

    def _rank(
        self,
        scored: dict[int, tuple[float, float]],
        k: int,
    ) -> list[Candidate]:
        # Reduce to one entry per URI: best score, then best ratio, then
        # smallest normalized text, then smallest original text.
        best: dict[str, tuple[float, float, str, str, int]] = {}
        for eid, (score, ratio) in scored.items():
            entry = self.entries[eid]
            key = (-score, -ratio, entry.norm, entry.text, eid)
            cur = best.get(entry.uri)
            if cur is None or key < cur:
                best[entry.uri] = key
        ranked = sorted(
            best.items(), key=lambda item: (item[1][0], item[1][1], item[0])
        )
        out: list[Candidate] = []
        for uri, (neg_score, neg_ratio, _, _, eid) in ranked[:k]:
            entry = self.entries[eid]
            out.append(Candidate(uri, entry.text, entry.etype, -neg_score, -neg_ratio))
        return out

    def search(
        self,
        query_label: str,
        k: int = DEFAULT_K,
        type_filter: EntityType | None = None,
    ) -> list[Candidate]:
        """Return the top ``k`` entities for ``query_label``, filtered by
        type before truncation. Exactly equal to brute-force scoring."""
        if k < 1:
            raise InvalidKError(f"k must be positive, got {k}")
        nq = normalize(query_label)
        if not nq:
            raise EmptyQueryError("query is empty after normalization")
        tq = frozenset(trigrams(nq))

        def allowed(eid: int) -> bool:
            return type_filter is None or self.entries[eid].etype.kind == type_filter.kind

        overlaps: dict[int, int] = {}
        for g in tq:
            for eid in self.postings.get(g, ()):
                overlaps[eid] = overlaps.get(eid, 0) + 1
        hits = [eid for eid in overlaps if allowed(eid)]
        ranked = self._rank(self._score_many(hits, nq, tq, overlaps), k)
        if len(ranked) >= k and ranked[k - 1].lexical_score >= 0.25:
            return ranked
        # Posting hits cannot be proven to cover the top k; scan everything.
        everything = [eid for eid in range(len(self.entries)) if allowed(eid)]
        return self._rank(self._score_many(everything, nq, tq), k)


def build_index(store: EntityStore) -> LabelIndex:
    """Index every label and alias; entries whose text normalizes to the
    empty string are dropped."""
    raw: list[IndexEntry] = []
    for rec in store.records.values():
        for text in (rec.label, *rec.aliases):
            norm = normalize(text)
            if norm:
                raw.append(IndexEntry(rec.uri, text, norm, rec.etype))
    raw.sort(key=lambda e: (e.uri, e.norm, e.text))
    return LabelIndex(raw)


def save_index(index: LabelIndex, path: str | Path) -> None:
    buf = io.BytesIO()
    w = Writer(buf)
    w.header(INDEX_MAGIC)
    w.u32(len(index.entries))
    for entry in index.entries:
        w.text(entry.uri)
        w.text(entry.text)
        w.u8(_TYPE_TAGS[entry.etype.kind])
        if entry.etype.kind == "other":
            w.text(entry.etype.other_name)
    Path(path).write_bytes(buf.getvalue())


def load_index(path: str | Path) -> LabelIndex:
    with open(path, "rb") as fh:
        r = Reader(fh)
        r.header(INDEX_MAGIC)
        count = r.u32()
        entries: list[IndexEntry] = []
        for _ in range(count):
            uri = r.text()
            text = r.text()
            tag = r.u8()
            if tag == _TYPE_TAGS["person"]:
                etype = PERSON
            elif tag == _TYPE_TAGS["publication"]:
                etype = PUBLICATION
            elif tag == _TYPE_TAGS["other"]:
                etype = EntityType("other", r.text())
            else:
                raise FormatVersionError(f"unknown entity type tag {tag}")
            entries.append(IndexEntry(uri, text, normalize(text), etype))
        r.expect_eof()
    return LabelIndex(entries)
