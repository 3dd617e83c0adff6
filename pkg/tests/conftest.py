"""Shared fixtures: one deterministic corpus and the artifacts derived
from it, built once per session."""
from __future__ import annotations

import io
from pathlib import Path

import pytest

from scholarlink import synthdata
from scholarlink.kgembed import EmbeddingKind, EmbedTrainConfig, save_embeddings, train_embeddings
from scholarlink.kgstore import SchemaConfig, extract_entities, parse_ntriples, save_store
from scholarlink.labelindex import build_index, save_index
from scholarlink.pipeline import Resources, embedding_file
from scholarlink.reranker import (
    RerankTrainConfig,
    build_training_set,
    save_siamese,
    train_reranker,
    TrainingRecord,
)
from scholarlink.spandetect import LexiconSpanDetector


@pytest.fixture(scope="session")
def corpus_bundle():
    return synthdata.build_corpus(
        n_persons=40, n_papers=30, n_venues=4, duplicate_names=3, seed=11, famous=True
    )


@pytest.fixture(scope="session")
def schema(corpus_bundle):
    return SchemaConfig.parse(corpus_bundle.schema_text)


@pytest.fixture(scope="session")
def corpus_triples(corpus_bundle):
    return list(parse_ntriples(io.StringIO(corpus_bundle.ntriples_text())))


@pytest.fixture(scope="session")
def store(corpus_triples, schema):
    return extract_entities(corpus_triples, schema)


@pytest.fixture(scope="session")
def index(store):
    return build_index(store)


@pytest.fixture(scope="session")
def kg_embeddings(corpus_triples, store):
    raw = [
        (t.subject, t.predicate, t.object)
        for t in corpus_triples
        if t.object_is_iri() and t.subject in store.records and t.object in store.records
    ]
    config = EmbedTrainConfig(dim=200, epochs=2, seed=3)
    return {
        kind: train_embeddings(raw, config, kind) for kind in EmbeddingKind
    }


@pytest.fixture(scope="session")
def siamese(corpus_bundle, store, kg_embeddings):
    questions = synthdata.build_questions(corpus_bundle, n=25, seed=5)
    lines = synthdata.rerank_training_lines(corpus_bundle, questions, seed=5)
    records = [TrainingRecord(*line.split("\t")) for line in lines]
    dataset = build_training_set(
        records, store, embeddings=kg_embeddings[EmbeddingKind.TRANSE]
    )
    return train_reranker(dataset, RerankTrainConfig(epochs=60, learning_rate=0.02, seed=5))


@pytest.fixture(scope="session")
def resources(store, index, kg_embeddings, siamese):
    return Resources(
        store=store,
        index=index,
        embeddings=dict(kg_embeddings),
        siamese=siamese,
        detectors={"lexicon": LexiconSpanDetector(index)},
    )


@pytest.fixture(scope="session")
def artifacts_dir(tmp_path_factory, store, index, kg_embeddings, siamese) -> Path:
    out = tmp_path_factory.mktemp("artifacts")
    save_store(store, out / "store.bin")
    save_index(index, out / "index.bin")
    for kind, emb in kg_embeddings.items():
        save_embeddings(emb, out / embedding_file(kind))
    save_siamese(siamese, out / "siamese.bin")
    return out
