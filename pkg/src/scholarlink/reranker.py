"""Disambiguation core: 969-dim feature composition and a Siamese net.

Feature layout (FeatureVector969):

    [0, 768)   text embedding
    [768, 968) knowledge-graph entity embedding
    [968]      label-vs-question string similarity

Question vectors fill only the text block; the remaining 201 components
stay zero. One shared network f(x) = W2 relu(W1 x + b1) + b2 maps both
questions and entities to 128 dimensions. Training minimizes the L2
triplet margin loss

    mean_i max(0, ||f(a_i) - f(p_i)|| - ||f(a_i) - f(n_i)|| + margin)

with full-batch gradient descent; inference ranks candidates by cosine
distance to the embedded question (train/infer metric mismatch is
intentional and kept).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .binio import Reader, Writer
from .errors import (
    DatasetSchemaError,
    FormatVersionError,
    DimensionMismatchError,
    DivergedLossError,
    EmptyCandidatesError,
    EmptyDatasetError,
    EmptyTextError,
    SimOutOfRangeError,
)
from .kgstore import EntityType
from .labelindex import Candidate
from .textnorm import levenshtein, levenshtein_many, normalize
from .textencoder import TEXT_DIM

SIAMESE_MAGIC = b"ELSP"

KG_DIM = 200
FEATURE_DIM = TEXT_DIM + KG_DIM + 1
SIM_INDEX = TEXT_DIM + KG_DIM


# -- String similarity ----------------------------------------------------


def string_similarity(label: str, question: str) -> float:
    """Best windowed Levenshtein ratio of ``label`` against ``question``.

    Slides a character window of the label's length over the normalized
    question and returns the best 1 - lev/max(len); when the question is
    shorter than the label the whole question is the only window.
    """
    ln = normalize(label)
    qn = normalize(question)
    if not ln:
        raise EmptyTextError("label is empty after normalization")
    if not qn:
        raise EmptyTextError("question is empty after normalization")
    width = len(ln)
    if len(qn) <= width:
        return 1.0 - levenshtein(ln, qn) / max(width, len(qn))
    windows = [qn[start : start + width] for start in range(len(qn) - width + 1)]
    best_dist = int(levenshtein_many(ln, windows).min())
    return 1.0 - best_dist / width


# -- Feature composition ----------------------------------------------------


def _check_text_embedding(vec: np.ndarray, what: str) -> None:
    if vec.shape != (TEXT_DIM,):
        raise DimensionMismatchError(f"{what} must have shape ({TEXT_DIM},), got {vec.shape}")


def compose_question(q_emb: np.ndarray) -> np.ndarray:
    """969-dim question vector: text block verbatim, the rest zero."""
    _check_text_embedding(q_emb, "question embedding")
    out = np.zeros(FEATURE_DIM, dtype=np.float64)
    out[:TEXT_DIM] = q_emb
    return out


def compose_entity(label_emb: np.ndarray, kg_vec: np.ndarray, sim: float) -> np.ndarray:
    """969-dim entity vector: text block, KG block, similarity slot."""
    _check_text_embedding(label_emb, "label embedding")
    kg_vec = np.asarray(kg_vec, dtype=np.float64)
    if kg_vec.shape != (KG_DIM,):
        raise DimensionMismatchError(
            f"entity embedding must have shape ({KG_DIM},), got {kg_vec.shape}"
        )
    if not math.isfinite(sim) or sim < 0.0 or sim > 1.0:
        raise SimOutOfRangeError(f"similarity {sim!r} outside [0, 1]")
    out = np.zeros(FEATURE_DIM, dtype=np.float64)
    out[:TEXT_DIM] = label_emb
    out[TEXT_DIM:SIM_INDEX] = kg_vec
    out[SIM_INDEX] = sim
    return out


# -- The network ------------------------------------------------------------


@dataclass
class RerankTrainConfig:
    in_dim: int = FEATURE_DIM
    hidden_dim: int = 256
    out_dim: int = 128
    epochs: int = 300
    learning_rate: float = 0.05
    margin: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.margin <= 0:
            raise ValueError(f"margin must be positive, got {self.margin}")


class SiameseParams:
    """Two affine layers with a rectifier between them."""

    def __init__(self, W1: np.ndarray, b1: np.ndarray, W2: np.ndarray, b2: np.ndarray):
        self.W1 = W1
        self.b1 = b1
        self.W2 = W2
        self.b2 = b2

    @property
    def in_dim(self) -> int:
        return self.W1.shape[1]

    @classmethod
    def init(cls, config: RerankTrainConfig) -> "SiameseParams":
        """Xavier-uniform weights, zero biases."""
        rng = np.random.default_rng(config.seed)
        lim1 = math.sqrt(6.0 / (config.in_dim + config.hidden_dim))
        lim2 = math.sqrt(6.0 / (config.hidden_dim + config.out_dim))
        W1 = rng.uniform(-lim1, lim1, size=(config.hidden_dim, config.in_dim))
        W2 = rng.uniform(-lim2, lim2, size=(config.out_dim, config.hidden_dim))
        return cls(W1, np.zeros(config.hidden_dim), W2, np.zeros(config.out_dim))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SiameseParams):
            return NotImplemented
        return (
            np.array_equal(self.W1, other.W1)
            and np.array_equal(self.b1, other.b1)
            and np.array_equal(self.W2, other.W2)
            and np.array_equal(self.b2, other.b2)
        )


def forward(params: SiameseParams, x: np.ndarray) -> np.ndarray:
    """f(x) for one vector or a batch matrix."""
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.shape[1] != params.in_dim:
        raise DimensionMismatchError(
            f"expected input width {params.in_dim}, got {X.shape[1]}"
        )
    Z = np.maximum(X @ params.W1.T + params.b1, 0.0)
    Y = Z @ params.W2.T + params.b2
    return Y[0] if single else Y


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cosine similarity, clamped to [0, 2]; any zero-norm input
    yields the neutral distance 1.0."""
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 1.0
    cos = float(np.dot(u, v) / (nu * nv))
    cos = max(-1.0, min(1.0, cos))
    return 1.0 - cos


# -- Loss and training -------------------------------------------------------


def triplet_loss_and_grads(
    params: SiameseParams,
    A: np.ndarray,
    P: np.ndarray,
    N: np.ndarray,
    margin: float,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean triplet loss over the batch plus parameter gradients.

    Inactive triplets (hinge at or below zero) and degenerate zero
    distances contribute nothing; relu'(0) is taken as 0.
    """
    n = A.shape[0]
    Ua = A @ params.W1.T + params.b1
    Up = P @ params.W1.T + params.b1
    Un = N @ params.W1.T + params.b1
    Za, Zp, Zn = np.maximum(Ua, 0.0), np.maximum(Up, 0.0), np.maximum(Un, 0.0)
    Ya = Za @ params.W2.T + params.b2
    Yp = Zp @ params.W2.T + params.b2
    Yn = Zn @ params.W2.T + params.b2

    Dp = Ya - Yp
    Dn = Ya - Yn
    dp = np.linalg.norm(Dp, axis=1)
    dn = np.linalg.norm(Dn, axis=1)
    hinge = dp - dn + margin
    active = hinge > 0.0
    loss = float(np.mean(np.maximum(hinge, 0.0)))

    Pd = np.where((dp > 0.0)[:, None], Dp / np.where(dp == 0.0, 1.0, dp)[:, None], 0.0)
    Nd = np.where((dn > 0.0)[:, None], Dn / np.where(dn == 0.0, 1.0, dn)[:, None], 0.0)
    scale = active.astype(np.float64)[:, None] / n
    Ga = (Pd - Nd) * scale
    Gp = -Pd * scale
    Gn = Nd * scale

    dW1 = np.zeros_like(params.W1)
    db1 = np.zeros_like(params.b1)
    dW2 = np.zeros_like(params.W2)
    db2 = np.zeros_like(params.b2)
    for G, U, Z, X in ((Ga, Ua, Za, A), (Gp, Up, Zp, P), (Gn, Un, Zn, N)):
        dW2 += G.T @ Z
        db2 += G.sum(axis=0)
        dU = (G @ params.W2) * (U > 0.0)
        dW1 += dU.T @ X
        db1 += dU.sum(axis=0)
    return loss, {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}


def triplet_loss(
    params: SiameseParams,
    anchor: np.ndarray,
    positive: np.ndarray,
    negative: np.ndarray,
    margin: float = 1.0,
) -> float:
    """max(0, ||f(a)-f(p)|| - ||f(a)-f(n)|| + margin) for one triplet."""
    fa = forward(params, anchor)
    fp = forward(params, positive)
    fn = forward(params, negative)
    return max(
        0.0,
        float(np.linalg.norm(fa - fp)) - float(np.linalg.norm(fa - fn)) + margin,
    )


Triplet = tuple[np.ndarray, np.ndarray, np.ndarray]


def train_reranker(
    dataset: Sequence[Triplet],
    config: RerankTrainConfig | None = None,
    on_epoch=None,
) -> SiameseParams:
    """Full-batch gradient descent over (anchor, positive, negative)
    feature triples; deterministic for a fixed seed and dataset."""
    config = config or RerankTrainConfig()
    if len(dataset) == 0:
        raise EmptyDatasetError("no training triplets")
    A = np.vstack([t[0] for t in dataset])
    P = np.vstack([t[1] for t in dataset])
    N = np.vstack([t[2] for t in dataset])
    if not (A.shape == P.shape == N.shape):
        raise DimensionMismatchError(
            f"triplet matrices disagree: {A.shape}, {P.shape}, {N.shape}"
        )
    if A.shape[1] != config.in_dim:
        raise DimensionMismatchError(
            f"expected input width {config.in_dim}, got {A.shape[1]}"
        )
    params = SiameseParams.init(config)
    for epoch in range(config.epochs):
        loss, grads = triplet_loss_and_grads(params, A, P, N, config.margin)
        if not math.isfinite(loss):
            raise DivergedLossError(f"epoch {epoch}: loss is not finite")
        params.W1 -= config.learning_rate * grads["W1"]
        params.b1 -= config.learning_rate * grads["b1"]
        params.W2 -= config.learning_rate * grads["W2"]
        params.b2 -= config.learning_rate * grads["b2"]
        if on_epoch is not None:
            on_epoch(epoch, loss)
    return params


def grad_check_triplet(
    hidden_dim: int = 5,
    out_dim: int = 4,
    in_dim: int = 6,
    n_points: int = 100,
    seed: int = 0,
    step: float = 1e-5,
) -> float:
    """Compare analytic triplet-loss gradients for every parameter
    against central finite differences at margin-active points; returns
    the worst relative error max |a - n| / max(1, |a|). Small dimensions
    keep the stencil count manageable; the formulas are size-generic.
    """
    rng = np.random.default_rng(seed)
    margin = 1.0
    worst = 0.0
    for _ in range(n_points):
        cfg = RerankTrainConfig(
            in_dim=in_dim,
            hidden_dim=hidden_dim,
            out_dim=out_dim,
            seed=int(rng.integers(1 << 31)),
        )
        params = SiameseParams.init(cfg)
        # Resample until the hinge is strictly active and away from the kink.
        for _ in range(1000):
            a = rng.normal(size=(1, in_dim))
            p = rng.normal(size=(1, in_dim))
            n = rng.normal(size=(1, in_dim))
            loss, grads = triplet_loss_and_grads(params, a, p, n, margin)
            if loss > 1e-2:
                break
        for name in ("W1", "b1", "W2", "b2"):
            mat = getattr(params, name)
            flat = mat.ravel()
            numeric = np.zeros_like(flat)
            for i in range(flat.shape[0]):
                orig = flat[i]
                flat[i] = orig + step
                up = triplet_loss_and_grads(params, a, p, n, margin)[0]
                flat[i] = orig - step
                down = triplet_loss_and_grads(params, a, p, n, margin)[0]
                flat[i] = orig
                numeric[i] = (up - down) / (2.0 * step)
            analytic = grads[name].ravel()
            denom = np.maximum(1.0, np.abs(analytic))
            worst = max(worst, float(np.max(np.abs(analytic - numeric) / denom)))
    return worst


# -- Ranking -----------------------------------------------------------------


@dataclass(frozen=True)
class RankedEntity:
    uri: str
    matched_label: str
    etype: EntityType
    distance: float


def rank(
    params: SiameseParams,
    question_fv: np.ndarray,
    candidates: Sequence[tuple[Candidate, np.ndarray]],
) -> list[RankedEntity]:
    """Sort candidates by cosine distance to the embedded question,
    ascending, ties by lexicographic uri."""
    if not candidates:
        raise EmptyCandidatesError("no candidates to rank")
    q = forward(params, question_fv)
    C = forward(params, np.vstack([fv for _, fv in candidates]))
    scored = [
        RankedEntity(
            cand.uri,
            cand.matched_label,
            cand.etype,
            cosine_distance(q, C[i]),
        )
        for i, (cand, _) in enumerate(candidates)
    ]
    scored.sort(key=lambda e: (e.distance, e.uri))
    return scored


# -- Training-data files ------------------------------------------------------


@dataclass(frozen=True)
class TrainingRecord:
    question: str
    positive_uri: str
    negative_uri: str


def load_training_file(path: str | Path) -> list[TrainingRecord]:
    """Read tab-separated lines: question, positive uri, negative uri.
    Blank lines and ``#`` comments are skipped."""
    records: list[TrainingRecord] = []
    path = Path(path)
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 3:
            raise DatasetSchemaError(str(path), f"line {lineno}: expected 3 tab-separated fields")
        question, pos, neg = (p.strip() for p in parts)
        if not question or not pos or not neg:
            raise DatasetSchemaError(str(path), f"line {lineno}: empty field")
        records.append(TrainingRecord(question, pos, neg))
    if not records:
        raise EmptyDatasetError(f"{path}: no training records")
    return records


def build_training_set(
    records: Sequence[TrainingRecord],
    store,
    embeddings=None,
    backend=None,
) -> list[Triplet]:
    """Resolve textual records into feature triplets.

    ``store`` supplies labels, ``embeddings`` (optional) the KG block
    (zeros when absent or uncovered), ``backend`` the text encoder.
    URIs absent from the store are a schema error.
    """
    from .textencoder import HashEncoder, encode

    backend = backend or HashEncoder()
    zeros = np.zeros(KG_DIM, dtype=np.float64)
    out: list[Triplet] = []
    for i, rec in enumerate(records):
        anchor = compose_question(encode(backend, rec.question))
        vectors = []
        for uri in (rec.positive_uri, rec.negative_uri):
            entity = store.get(uri)
            if entity is None:
                raise DatasetSchemaError(
                    "training data", f"record {i}: uri {uri!r} not in store"
                )
            kg_vec = zeros
            if embeddings is not None:
                found = embeddings.entity_vector(uri)
                if found is not None:
                    kg_vec = found
            vectors.append(
                compose_entity(
                    encode(backend, entity.label),
                    kg_vec,
                    string_similarity(entity.label, rec.question),
                )
            )
        out.append((anchor, vectors[0], vectors[1]))
    return out


# -- Persistence ---------------------------------------------------------------


def save_siamese(params: SiameseParams, path: str | Path) -> None:
    """Write network parameters; identical parameters write identical
    bytes."""
    with open(path, "wb") as fh:
        w = Writer(fh)
        w.header(SIAMESE_MAGIC)
        w.u32(params.W1.shape[1])
        w.u32(params.W1.shape[0])
        w.u32(params.W2.shape[0])
        w.f64_array(params.W1.ravel())
        w.f64_array(params.b1)
        w.f64_array(params.W2.ravel())
        w.f64_array(params.b2)


def load_siamese(path: str | Path) -> SiameseParams:
    with open(path, "rb") as fh:
        r = Reader(fh)
        r.header(SIAMESE_MAGIC)
        in_dim = r.u32()
        hidden_dim = r.u32()
        out_dim = r.u32()
        W1 = r.f64_array().reshape(hidden_dim, in_dim)
        b1 = r.f64_array()
        W2 = r.f64_array().reshape(out_dim, hidden_dim)
        b2 = r.f64_array()
        r.expect_eof()
    if b1.shape[0] != hidden_dim or b2.shape[0] != out_dim:
        raise FormatVersionError("bias lengths disagree with layer dims")
    return SiameseParams(W1, b1, W2, b2)
