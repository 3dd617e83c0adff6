"""Knowledge-graph embeddings: TransE, ComplEx and DistMult.

All three models share a vocabulary layout (sorted entity URIs and
relation IRIs mapped to matrix rows) and a per-triple SGD trainer with
filtered negative sampling. TransE trains with a margin ranking loss on
L2 distances and renormalizes touched entity rows to unit norm after
each update; ComplEx and DistMult train with the logistic loss
log(1 + exp(-y * score)).

ComplEx vectors store real parts in the first dim/2 components and
imaginary parts in the last dim/2; its score is Re(sum h_i r_i
conj(t_i)).
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .binio import Reader, Writer
from .errors import (
    ConfigError,
    DimensionMismatchError,
    DivergedLossError,
    FormatVersionError,
    KindMismatchError,
    NoTrainableTriplesError,
    NonFiniteGradientError,
)

EMBED_MAGIC = b"ELEM"
DEFAULT_DIM = 200


class EmbeddingKind(str, Enum):
    TRANSE = "transe"
    COMPLEX = "complex"
    DISTMULT = "distmult"


_KIND_TAGS = {EmbeddingKind.TRANSE: 0, EmbeddingKind.COMPLEX: 1, EmbeddingKind.DISTMULT: 2}
_TAG_KINDS = {v: k for k, v in _KIND_TAGS.items()}


@dataclass
class KgEmbeddingSet:
    """Trained vectors plus the vocabularies that index them."""

    kind: EmbeddingKind
    dim: int
    entities: dict[str, int]
    relations: dict[str, int]
    entity_vecs: np.ndarray
    relation_vecs: np.ndarray

    def entity_vector(self, uri: str) -> np.ndarray | None:
        row = self.entities.get(uri)
        if row is None:
            return None
        return self.entity_vecs[row]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KgEmbeddingSet):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.dim == other.dim
            and self.entities == other.entities
            and self.relations == other.relations
            and np.array_equal(self.entity_vecs, other.entity_vecs)
            and np.array_equal(self.relation_vecs, other.relation_vecs)
        )


def _require_even(kind: EmbeddingKind, dim: int) -> None:
    if kind is EmbeddingKind.COMPLEX and dim % 2 != 0:
        raise ConfigError(f"complex embeddings need an even dimension, got {dim}")


# -- Scoring -------------------------------------------------------------


def score_vectors(kind: EmbeddingKind, H: np.ndarray, R: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Vectorized scores over aligned batches (or single vectors)."""
    if kind is EmbeddingKind.TRANSE:
        return -np.linalg.norm(H + R - T, axis=-1)
    if kind is EmbeddingKind.DISTMULT:
        # R * (H * T): head/tail swap reorders only the inner commutative
        # product, so the symmetry holds bit-exactly.
        return np.sum(R * (H * T), axis=-1)
    half = H.shape[-1] // 2
    a, b = H[..., :half], H[..., half:]
    c, d = R[..., :half], R[..., half:]
    e, f = T[..., :half], T[..., half:]
    return np.sum(a * c * e + b * c * f + a * d * f - b * d * e, axis=-1)


def score(kind: EmbeddingKind, h: np.ndarray, r: np.ndarray, t: np.ndarray) -> float:
    """Plausibility of one triple; higher is more plausible."""
    h = np.asarray(h, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if not (h.shape == r.shape == t.shape) or h.ndim != 1:
        raise DimensionMismatchError(
            f"vectors disagree in shape: {h.shape}, {r.shape}, {t.shape}"
        )
    _require_even(kind, h.shape[0])
    return float(score_vectors(kind, h, r, t))


def score_triples(
    emb: KgEmbeddingSet,
    h: np.ndarray,
    r: np.ndarray,
    t: np.ndarray,
) -> np.ndarray:
    """Vectorized scores for aligned index arrays into a trained set."""
    return score_vectors(
        emb.kind, emb.entity_vecs[h], emb.relation_vecs[r], emb.entity_vecs[t]
    )


# -- Per-sample losses and gradients -------------------------------------

# These pure functions are shared by the trainer and the numeric
# gradient check, so the check exercises the exact training gradients.


def transe_pair_loss(
    h: np.ndarray,
    r: np.ndarray,
    t: np.ndarray,
    h_neg: np.ndarray,
    t_neg: np.ndarray,
    margin: float,
) -> tuple[float, dict[str, np.ndarray]]:
    """Margin ranking loss max(0, d_pos - d_neg + margin) with gradients
    for all five vectors (head/tail corruption passes the shared vector
    in both slots)."""
    p = h + r - t
    n = h_neg + r - t_neg
    dp = float(np.linalg.norm(p))
    dn = float(np.linalg.norm(n))
    loss = dp - dn + margin
    zeros = np.zeros_like(h)
    if loss <= 0.0:
        return 0.0, {k: zeros.copy() for k in ("h", "r", "t", "h_neg", "t_neg")}
    p_hat = p / dp if dp > 0 else zeros
    n_hat = n / dn if dn > 0 else zeros
    return loss, {
        "h": p_hat.copy(),
        "r": p_hat - n_hat,
        "t": -p_hat,
        "h_neg": -n_hat,
        "t_neg": n_hat.copy(),
    }


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def logistic_loss(
    kind: EmbeddingKind,
    h: np.ndarray,
    r: np.ndarray,
    t: np.ndarray,
    y: int,
) -> tuple[float, dict[str, np.ndarray]]:
    """log(1 + exp(-y * score)) with gradients for h, r, t."""
    s = float(score_vectors(kind, h, r, t))
    loss = float(np.logaddexp(0.0, -y * s))
    g = -y * _sigmoid(-y * s)
    if kind is EmbeddingKind.DISTMULT:
        grads = {"h": g * r * t, "r": g * h * t, "t": g * h * r}
    else:
        half = h.shape[0] // 2
        a, b = h[:half], h[half:]
        c, d = r[:half], r[half:]
        e, f = t[:half], t[half:]
        grads = {
            "h": g * np.concatenate([c * e + d * f, c * f - d * e]),
            "r": g * np.concatenate([a * e + b * f, a * f - b * e]),
            "t": g * np.concatenate([a * c - b * d, b * c + a * d]),
        }
    return loss, grads


# -- Training -------------------------------------------------------------


@dataclass
class EmbedTrainConfig:
    dim: int = DEFAULT_DIM
    epochs: int = 100
    learning_rate: float = 0.05
    margin: float = 1.0
    negatives_per_positive: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.margin <= 0:
            raise ConfigError(f"margin must be positive, got {self.margin}")
        if self.negatives_per_positive < 1:
            raise ConfigError(
                f"negatives_per_positive must be >= 1, got {self.negatives_per_positive}"
            )


def build_vocab(triples: Iterable[tuple[str, str, str]]) -> tuple[dict[str, int], dict[str, int]]:
    ents: set[str] = set()
    rels: set[str] = set()
    for h, r, t in triples:
        ents.add(h)
        ents.add(t)
        rels.add(r)
    entities = {uri: i for i, uri in enumerate(sorted(ents))}
    relations = {iri: i for i, iri in enumerate(sorted(rels))}
    return entities, relations


def init_embeddings(
    kind: EmbeddingKind,
    dim: int,
    entities: dict[str, int],
    relations: dict[str, int],
    seed: int,
) -> KgEmbeddingSet:
    """Uniform U(-1/sqrt(dim), 1/sqrt(dim)) initialization."""
    _require_even(kind, dim)
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(dim)
    ev = rng.uniform(-bound, bound, size=(len(entities), dim))
    rv = rng.uniform(-bound, bound, size=(len(relations), dim))
    return KgEmbeddingSet(kind, dim, entities, relations, ev, rv)


def _sample_negative(
    rng: np.random.Generator,
    h: int,
    r: int,
    t: int,
    n_entities: int,
    known: set[tuple[int, int, int]],
) -> tuple[int, int]:
    """Corrupt head or tail (fair coin), rejecting known positives."""
    cand = (h, r, t)
    for _ in range(100):
        if rng.integers(2) == 0:
            cand = (int(rng.integers(n_entities)), r, t)
        else:
            cand = (h, r, int(rng.integers(n_entities)))
        if cand not in known:
            break
    return cand[0], cand[2]


def train_embeddings(
    triples: Sequence[tuple[str, str, str]],
    config: EmbedTrainConfig,
    kind: EmbeddingKind,
    on_epoch: Callable[[int, float], None] | None = None,
) -> KgEmbeddingSet:
    """Train from scratch with per-triple SGD.

    Deterministic for fixed inputs: vocabulary order is sorted, all
    randomness flows from one seeded generator, and triples are visited
    in a freshly drawn permutation each epoch.
    """
    if not triples:
        raise NoTrainableTriplesError("no triples to train on")
    entities, relations = build_vocab(triples)
    emb = init_embeddings(kind, config.dim, entities, relations, config.seed)
    rng = np.random.default_rng(config.seed + 1)
    idx = [(entities[h], relations[r], entities[t]) for h, r, t in triples]
    known = set(idx)
    ev, rv = emb.entity_vecs, emb.relation_vecs
    n_ent = len(entities)
    lr = config.learning_rate

    for epoch in range(config.epochs):
        order = rng.permutation(len(idx))
        total = 0.0
        for pos in order:
            h, r, t = idx[pos]
            for _ in range(config.negatives_per_positive):
                h2, t2 = _sample_negative(rng, h, r, t, n_ent, known)
                if kind is EmbeddingKind.TRANSE:
                    loss, g = transe_pair_loss(ev[h], rv[r], ev[t], ev[h2], ev[t2], config.margin)
                    total += loss
                    if loss > 0.0:
                        # Accumulate per distinct row: h/t/h2/t2 may coincide.
                        acc: dict[int, np.ndarray] = {}
                        for row, grad in ((h, g["h"]), (t, g["t"]), (h2, g["h_neg"]), (t2, g["t_neg"])):
                            bucket = acc.setdefault(row, np.zeros(config.dim))
                            bucket += grad
                        rv[r] -= lr * g["r"]
                        for row, grad in acc.items():
                            ev[row] -= lr * grad
                            norm = np.linalg.norm(ev[row])
                            if norm > 1e-12:
                                ev[row] /= norm
                else:
                    pl, pg = logistic_loss(kind, ev[h], rv[r], ev[t], 1)
                    nl, ng = logistic_loss(kind, ev[h2], rv[r], ev[t2], -1)
                    total += pl + nl
                    acc = {}
                    for row, grad in ((h, pg["h"]), (t, pg["t"]), (h2, ng["h"]), (t2, ng["t"])):
                        bucket = acc.setdefault(row, np.zeros(config.dim))
                        bucket += grad
                    rv[r] -= lr * (pg["r"] + ng["r"])
                    for row, grad in acc.items():
                        ev[row] -= lr * grad
        mean = total / (len(idx) * config.negatives_per_positive)
        if not math.isfinite(mean):
            raise DivergedLossError(f"epoch {epoch}: loss is not finite")
        if on_epoch is not None:
            on_epoch(epoch, mean)
    return emb


# -- Gradient checking ----------------------------------------------------


def _numeric_grad(fn: Callable[[], float], vec: np.ndarray, step: float) -> np.ndarray:
    out = np.zeros_like(vec)
    for i in range(vec.shape[0]):
        orig = vec[i]
        vec[i] = orig + step
        up = fn()
        vec[i] = orig - step
        down = fn()
        vec[i] = orig
        out[i] = (up - down) / (2.0 * step)
    return out


def grad_check(
    kind: EmbeddingKind,
    dim: int = 8,
    n_points: int = 100,
    seed: int = 0,
    step: float = 1e-5,
) -> float:
    """Compare analytic loss gradients against central finite differences
    at random points; returns the worst relative error
    max |analytic - numeric| / max(1, |analytic|).

    TransE points are resampled until the margin is strictly active and
    both distances sit away from the norm kink, so the stencil stays in
    a differentiable region.
    """
    _require_even(kind, dim)
    rng = np.random.default_rng(seed)
    worst = 0.0
    margin = 1.0
    for _ in range(n_points):
        if kind is EmbeddingKind.TRANSE:
            for _ in range(1000):
                vecs = {k: rng.normal(size=dim) for k in ("h", "r", "t", "h_neg", "t_neg")}
                p = vecs["h"] + vecs["r"] - vecs["t"]
                n = vecs["h_neg"] + vecs["r"] - vecs["t_neg"]
                raw = float(np.linalg.norm(p) - np.linalg.norm(n) + margin)
                if raw > 1e-2 and np.linalg.norm(p) > 1e-2 and np.linalg.norm(n) > 1e-2:
                    break
            _, grads = transe_pair_loss(
                vecs["h"], vecs["r"], vecs["t"], vecs["h_neg"], vecs["t_neg"], margin
            )

            def loss_fn() -> float:
                return transe_pair_loss(
                    vecs["h"], vecs["r"], vecs["t"], vecs["h_neg"], vecs["t_neg"], margin
                )[0]

        else:
            vecs = {k: rng.normal(size=dim) for k in ("h", "r", "t")}
            y = 1 if rng.integers(2) == 0 else -1
            _, grads = logistic_loss(kind, vecs["h"], vecs["r"], vecs["t"], y)

            def loss_fn() -> float:
                return logistic_loss(kind, vecs["h"], vecs["r"], vecs["t"], y)[0]

        for name, analytic in grads.items():
            numeric = _numeric_grad(loss_fn, vecs[name], step)
            if not (np.all(np.isfinite(analytic)) and np.all(np.isfinite(numeric))):
                raise NonFiniteGradientError(f"non-finite gradient for {name}")
            denom = np.maximum(1.0, np.abs(analytic))
            err = float(np.max(np.abs(analytic - numeric) / denom))
            worst = max(worst, err)
    return worst


# -- Evaluation -----------------------------------------------------------


@dataclass
class RankingMetrics:
    hits_at_1: float
    hits_at_10: float
    mrr: float
    ranks: list[int] = field(default_factory=list, repr=False)


def filtered_ranking(
    emb: KgEmbeddingSet,
    test_triples: Sequence[tuple[str, str, str]],
    known_triples: Iterable[tuple[str, str, str]],
    sides: tuple[str, ...] = ("tail", "head"),
) -> RankingMetrics:
    """Corruption ranks with every known positive (except the triple
    under test) masked out. Rank is 1 + the number of strictly better
    scores; ``sides`` picks tail and/or head corruption."""
    known = {
        (emb.entities[h], emb.relations[r], emb.entities[t])
        for h, r, t in known_triples
        if h in emb.entities and r in emb.relations and t in emb.entities
    }
    n_ent = len(emb.entities)
    all_idx = np.arange(n_ent)
    ranks: list[int] = []
    for h, r, t in test_triples:
        hi, ri, ti = emb.entities[h], emb.relations[r], emb.entities[t]
        if "tail" in sides:
            scores = score_triples(emb, np.full(n_ent, hi), np.full(n_ent, ri), all_idx)
            mask = np.fromiter(
                ((hi, ri, j) in known and j != ti for j in range(n_ent)),
                dtype=bool,
                count=n_ent,
            )
            scores[mask] = -np.inf
            ranks.append(1 + int(np.sum(scores > scores[ti])))
        if "head" in sides:
            scores = score_triples(emb, all_idx, np.full(n_ent, ri), np.full(n_ent, ti))
            mask = np.fromiter(
                ((j, ri, ti) in known and j != hi for j in range(n_ent)),
                dtype=bool,
                count=n_ent,
            )
            scores[mask] = -np.inf
            ranks.append(1 + int(np.sum(scores > scores[hi])))
    arr = np.array(ranks, dtype=float)
    return RankingMetrics(
        hits_at_1=float(np.mean(arr <= 1)),
        hits_at_10=float(np.mean(arr <= 10)),
        mrr=float(np.mean(1.0 / arr)),
        ranks=ranks,
    )


# -- Persistence ----------------------------------------------------------


def save_embeddings(emb: KgEmbeddingSet, path: str | Path) -> None:
    """Canonical serialization: kind byte, dim, then vocabularies in
    sorted order; equal sets produce identical bytes."""
    buf = io.BytesIO()
    w = Writer(buf)
    w.header(EMBED_MAGIC)
    w.u8(_KIND_TAGS[emb.kind])
    w.u32(emb.dim)
    w.u32(len(emb.entities))
    for uri in sorted(emb.entities):
        w.text(uri)
        w.f64_array(emb.entity_vecs[emb.entities[uri]])
    w.u32(len(emb.relations))
    for iri in sorted(emb.relations):
        w.text(iri)
        w.f64_array(emb.relation_vecs[emb.relations[iri]])
    Path(path).write_bytes(buf.getvalue())


def load_embeddings(path: str | Path, expect_kind: EmbeddingKind | None = None) -> KgEmbeddingSet:
    with open(path, "rb") as fh:
        r = Reader(fh)
        r.header(EMBED_MAGIC)
        tag = r.u8()
        kind = _TAG_KINDS.get(tag)
        if kind is None:
            raise FormatVersionError(f"unknown embedding kind tag {tag}")
        if expect_kind is not None and kind is not expect_kind:
            raise KindMismatchError(
                f"file holds {kind.value} embeddings, expected {expect_kind.value}"
            )
        dim = r.u32()
        entities: dict[str, int] = {}
        ent_rows: list[np.ndarray] = []
        for i in range(r.u32()):
            uri = r.text()
            vec = r.f64_array()
            if vec.shape[0] != dim:
                raise FormatVersionError("entity vector has wrong dimension")
            entities[uri] = i
            ent_rows.append(vec)
        relations: dict[str, int] = {}
        rel_rows: list[np.ndarray] = []
        for i in range(r.u32()):
            iri = r.text()
            vec = r.f64_array()
            if vec.shape[0] != dim:
                raise FormatVersionError("relation vector has wrong dimension")
            relations[iri] = i
            rel_rows.append(vec)
        r.expect_eof()
    ev = np.vstack(ent_rows) if ent_rows else np.zeros((0, dim))
    rv = np.vstack(rel_rows) if rel_rows else np.zeros((0, dim))
    return KgEmbeddingSet(kind, dim, entities, relations, ev, rv)


# -- TSV interop ----------------------------------------------------------


def export_tsv(emb: KgEmbeddingSet, entities_path: str | Path, relations_path: str | Path) -> None:
    """Write one ``name\\tv1\\t...\\tvN`` line per vector, floats in
    shortest round-trip form, names sorted."""

    def dump(path: str | Path, vocab: dict[str, int], vecs: np.ndarray) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for name in sorted(vocab):
                row = vecs[vocab[name]]
                fh.write(name + "\t" + "\t".join(repr(float(x)) for x in row) + "\n")

    dump(entities_path, emb.entities, emb.entity_vecs)
    dump(relations_path, emb.relations, emb.relation_vecs)


def import_tsv(
    kind: EmbeddingKind,
    entities_path: str | Path,
    relations_path: str | Path,
) -> KgEmbeddingSet:
    def slurp(path: str | Path) -> tuple[dict[str, int], np.ndarray, int]:
        vocab: dict[str, int] = {}
        rows: list[np.ndarray] = []
        dim: int | None = None
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) < 2:
                    raise DimensionMismatchError(f"{path}:{lineno}: no vector components")
                name = parts[0]
                if name in vocab:
                    raise DimensionMismatchError(f"{path}:{lineno}: duplicate name {name!r}")
                try:
                    vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
                except ValueError:
                    raise DimensionMismatchError(f"{path}:{lineno}: non-numeric component") from None
                if dim is None:
                    dim = vec.shape[0]
                elif vec.shape[0] != dim:
                    raise DimensionMismatchError(
                        f"{path}:{lineno}: expected {dim} components, got {vec.shape[0]}"
                    )
                vocab[name] = len(rows)
                rows.append(vec)
        if not rows or dim is None:
            raise DimensionMismatchError(f"{path}: no vectors")
        return vocab, np.vstack(rows), dim

    entities, ev, edim = slurp(entities_path)
    relations, rv, rdim = slurp(relations_path)
    if edim != rdim:
        raise DimensionMismatchError(f"entity dimension {edim} != relation dimension {rdim}")
    _require_even(kind, edim)
    return KgEmbeddingSet(kind, edim, entities, relations, ev, rv)
