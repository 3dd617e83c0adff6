"""End-to-end linking: spans -> candidates -> (conditional) disambiguation.

Three modes share one candidate generator:

* ``label-sorting``: rank by lexical retrieval score alone
  (distance = 1 - lexical_score).
* ``hard``: always rerank candidates with the Siamese net.
* ``conditional``: per span, rerank only when the duplicate-label
  trigger fires; otherwise identical to label sorting.

The trigger is configurable: ``top`` fires when the top candidate's
normalized label equals another candidate's, ``any`` when any two
candidates share a label.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    BadRemoteVectorError,
    DimensionMismatchError,
    EmptyQueryError,
    InvalidKError,
    RemoteUnavailableError,
    ResourceMissingError,
)
from .kgembed import EmbeddingKind, KgEmbeddingSet, load_embeddings
from .kgstore import EntityStore, load_store
from .labelindex import DEFAULT_K, LabelIndex, duplicate_label_exists, load_index
from .reranker import (
    KG_DIM,
    RankedEntity,
    SiameseParams,
    compose_entity,
    compose_question,
    load_siamese,
    rank,
    string_similarity,
)
from .spandetect import LexiconSpanDetector, RemoteSpanDetector, SpanDetector, SpanPrediction
from .textencoder import EncoderBackend, HashEncoder, encode


class LinkMode(str, Enum):
    LABEL_SORTING = "label-sorting"
    CONDITIONAL = "conditional"
    HARD = "hard"


@dataclass
class SpanResult:
    span: SpanPrediction
    ranked: list[RankedEntity]
    disambiguation_ran: bool
    distance_kind: str  # "lexical" | "siamese-cosine"
    error: str | None = None
    # Retrieval hits backing `ranked`; reranking reuses them so its output
    # is always a permutation of the lexical candidate set.
    candidates: list = field(default_factory=list, repr=False)

    @property
    def top(self) -> RankedEntity | None:
        return self.ranked[0] if self.ranked else None


@dataclass
class LinkRequest:
    question: str
    span_model: str
    mode: LinkMode = LinkMode.CONDITIONAL
    embedding: EmbeddingKind | None = None
    k: int | None = None


@dataclass
class LinkResult:
    request: LinkRequest
    spans: list[SpanResult]
    elapsed_ms: float


@dataclass
class Resources:
    """Everything the linker needs, loaded once and shared read-only."""

    store: EntityStore
    index: LabelIndex
    embeddings: dict[EmbeddingKind, KgEmbeddingSet] = field(default_factory=dict)
    siamese: SiameseParams | None = None
    detectors: dict[str, SpanDetector] = field(default_factory=dict)
    encoder: EncoderBackend = field(default_factory=HashEncoder)
    default_k: int = DEFAULT_K
    duplicate_rule: str = "top"  # "top" | "any"
    similarity_scope: str = "question"  # "question" | "span"

    def detector(self, name: str) -> SpanDetector:
        det = self.detectors.get(name)
        if det is None:
            raise ResourceMissingError(f"span model {name!r}")
        return det

    def embedding(self, kind: EmbeddingKind) -> KgEmbeddingSet:
        emb = self.embeddings.get(kind)
        if emb is None:
            raise ResourceMissingError(f"{kind.value} embeddings")
        return emb


def available_combinations(resources: Resources) -> list[tuple[str, EmbeddingKind]]:
    """Cross product of configured detectors (config order) and loaded
    embedding kinds (TransE, ComplEx, DistMult order)."""
    kinds = [kind for kind in EmbeddingKind if kind in resources.embeddings]
    return [(name, kind) for name in resources.detectors for kind in kinds]


STORE_FILE = "store.bin"
INDEX_FILE = "index.bin"
SIAMESE_FILE = "siamese.bin"


def embedding_file(kind: EmbeddingKind) -> str:
    return f"{kind.value}.bin"


def load_resources(
    directory: str | Path,
    remotes: dict[str, str] | None = None,
    timeout: float = 10.0,
    **options,
) -> Resources:
    """Load artifacts from a directory laid out by the CLI.

    ``store.bin`` and ``index.bin`` are required; ``siamese.bin`` and the
    per-kind embedding files are optional (requests that need a missing
    artifact fail individually). Remote detectors are registered in the
    given order, followed by the index-backed ``lexicon`` detector.
    """
    directory = Path(directory)
    store_path = directory / STORE_FILE
    index_path = directory / INDEX_FILE
    if not store_path.exists():
        raise ResourceMissingError(str(store_path))
    if not index_path.exists():
        raise ResourceMissingError(str(index_path))
    store = load_store(store_path)
    index = load_index(index_path)
    embeddings: dict[EmbeddingKind, KgEmbeddingSet] = {}
    for kind in EmbeddingKind:
        path = directory / embedding_file(kind)
        if path.exists():
            embeddings[kind] = load_embeddings(path, expect_kind=kind)
    siamese = None
    siamese_path = directory / SIAMESE_FILE
    if siamese_path.exists():
        siamese = load_siamese(siamese_path)
    detectors: dict[str, SpanDetector] = {}
    for name, endpoint in (remotes or {}).items():
        detectors[name] = RemoteSpanDetector(name, endpoint, timeout=timeout)
    detectors[LexiconSpanDetector.name] = LexiconSpanDetector(index)
    return Resources(
        store=store,
        index=index,
        embeddings=embeddings,
        siamese=siamese,
        detectors=detectors,
        **options,
    )


def _label_sorting(resources: Resources, span: SpanPrediction, k: int) -> SpanResult:
    try:
        cands = resources.index.search(span.label_text, k=k, type_filter=span.etype)
    except EmptyQueryError as exc:
        return SpanResult(span, [], False, "lexical", error=str(exc))
    if not cands:
        return SpanResult(span, [], False, "lexical", error="no candidates")
    ranked = [
        RankedEntity(c.uri, c.matched_label, c.etype, 1.0 - c.lexical_score)
        for c in cands
    ]
    return SpanResult(span, ranked, False, "lexical", candidates=cands)


def _rerank(resources: Resources, request: LinkRequest, result: SpanResult) -> None:
    """Replace a span result's lexical ranking with the Siamese one, in
    place. Callers guarantee candidates exist."""
    assert request.embedding is not None
    emb = resources.embedding(request.embedding)
    if emb.dim != KG_DIM:
        raise DimensionMismatchError(
            f"{request.embedding.value} embeddings have dimension {emb.dim}, need {KG_DIM}"
        )
    net = resources.siamese
    if net is None:
        raise ResourceMissingError("siamese reranker")
    sim_text = (
        request.question
        if resources.similarity_scope == "question"
        else result.span.label_text
    )
    qvec = compose_question(encode(resources.encoder, request.question))
    zeros = np.zeros(KG_DIM, dtype=np.float64)
    pairs = []
    for cand in result.candidates:
        kg_vec = emb.entity_vector(cand.uri)
        if kg_vec is None:
            kg_vec = zeros
        fv = compose_entity(
            encode(resources.encoder, cand.matched_label),
            kg_vec,
            string_similarity(cand.matched_label, sim_text),
        )
        pairs.append((cand, fv))
    result.ranked = rank(net, qvec, pairs)
    result.distance_kind = "siamese-cosine"
    result.disambiguation_ran = True


def link(resources: Resources, request: LinkRequest) -> LinkResult:
    """Run one question through the pipeline.

    Span detection errors propagate (the caller decides how to surface
    remote failures); candidate and reranking problems are isolated per
    span in ``SpanResult.error``.
    """
    start = time.perf_counter()
    k = request.k if request.k is not None else resources.default_k
    if k < 1:
        raise InvalidKError(f"k must be positive, got {k}")
    if request.mode is not LinkMode.LABEL_SORTING:
        if request.embedding is None:
            raise ResourceMissingError("embedding kind (required outside label-sorting)")
        resources.embedding(request.embedding)  # fail fast on unloaded kind
        if resources.siamese is None:
            raise ResourceMissingError("siamese reranker")

    detector = resources.detector(request.span_model)
    spans = detector.detect(request.question)
    results = [_label_sorting(resources, span, k) for span in spans]

    for result in results:
        if not result.ranked:
            continue
        if request.mode is LinkMode.HARD or (
            request.mode is LinkMode.CONDITIONAL
            and duplicate_label_exists(result.candidates, resources.duplicate_rule)
        ):
            try:
                _rerank(resources, request, result)
            except (RemoteUnavailableError, BadRemoteVectorError, DimensionMismatchError) as exc:
                result.error = str(exc)
                result.ranked = []
    elapsed = (time.perf_counter() - start) * 1000.0
    return LinkResult(request=request, spans=results, elapsed_ms=elapsed)
