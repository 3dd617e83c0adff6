"""Entity linking for a scholarly knowledge graph.

The pipeline detects label spans in a question, retrieves candidate
entities by fuzzy label search, and optionally re-ranks them with a
Siamese network over text, KG-embedding, and string-similarity
features.
"""
from .errors import LinkerError
from .kgembed import EmbeddingKind, KgEmbeddingSet, train_embeddings
from .kgstore import EntityStore, EntityType, SchemaConfig, Triple, extract_entities, parse_ntriples
from .labelindex import Candidate, LabelIndex, build_index
from .pipeline import (
    LinkMode,
    LinkRequest,
    LinkResult,
    Resources,
    link,
    load_resources,
)
from .reranker import RankedEntity, SiameseParams, train_reranker

__version__ = "0.1.0"

__all__ = [
    "Candidate",
    "EmbeddingKind",
    "EntityStore",
    "EntityType",
    "KgEmbeddingSet",
    "LabelIndex",
    "LinkMode",
    "LinkRequest",
    "LinkResult",
    "LinkerError",
    "RankedEntity",
    "Resources",
    "SchemaConfig",
    "SiameseParams",
    "Triple",
    "build_index",
    "extract_entities",
    "link",
    "load_resources",
    "parse_ntriples",
    "train_embeddings",
    "train_reranker",
    "__version__",
]
