"""Deterministic synthetic corpora: a small scholarly KG, QA datasets,
toy graphs for embedding training, and separable reranker triplets.

Everything is driven by explicit seeds through one generator so the same
call always produces the same bytes. The corpus shape mirrors the real
ingest path: persons and publications with labels and aliases, venue
entities of an unmapped type, and authorship edges connecting papers to
people.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .reranker import FEATURE_DIM, KG_DIM, SIM_INDEX
from .textencoder import TEXT_DIM

SCHEMA_TEXT = """\
# predicate roles
label = https://example.org/schema#name
alias = https://example.org/schema#alias
type = http://www.w3.org/1999/02/22-rdf-syntax-ns#type
person = https://example.org/schema#Person
publication = https://example.org/schema#Publication
"""

TYPE_PRED = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
LABEL_PRED = "https://example.org/schema#name"
ALIAS_PRED = "https://example.org/schema#alias"
PERSON_TYPE = "https://example.org/schema#Person"
PUBLICATION_TYPE = "https://example.org/schema#Publication"
VENUE_TYPE = "https://example.org/schema#Venue"
AUTHORED_BY = "https://example.org/schema#authoredBy"
PUBLISHED_IN = "https://example.org/schema#publishedIn"

_FIRST = [
    "Ada", "Alan", "Amina", "Anil", "Beatriz", "Carlos", "Chen", "Dana",
    "Elena", "Emeka", "Fatima", "Grace", "Hana", "Hiro", "Ines", "Ivan",
    "Jorge", "Kavya", "Lars", "Leila", "Mei", "Milan", "Nadia", "Noor",
    "Olga", "Pavel", "Priya", "Rafael", "Sana", "Sven", "Tariq", "Uma",
    "Vera", "Wei", "Yara", "Zhen",
]
_LAST = [
    "Abe", "Almeida", "Bauer", "Bianchi", "Cardoso", "Dasgupta", "Eriksen",
    "Fernandez", "Garcia", "Haddad", "Ivanova", "Jansen", "Kim", "Kowalski",
    "Larsen", "Mehta", "Nakamura", "Okafor", "Petrov", "Quinn", "Rahman",
    "Santos", "Schmidt", "Tanaka", "Ueda", "Varga", "Weber", "Xu",
    "Yamamoto", "Zhao",
]
_ADJ = [
    "Efficient", "Robust", "Scalable", "Adaptive", "Neural", "Probabilistic",
    "Distributed", "Incremental", "Sparse", "Dynamic", "Parallel", "Bayesian",
    "Convex", "Streaming", "Modular", "Hybrid",
]
_NOUN = [
    "Parsing", "Indexing", "Clustering", "Ranking", "Inference", "Retrieval",
    "Alignment", "Sampling", "Embedding", "Optimization", "Scheduling",
    "Verification", "Compression", "Caching", "Routing", "Planning",
]
_DOMAIN = [
    "Dependency Graphs", "Knowledge Bases", "Citation Networks",
    "Sparse Matrices", "Temporal Data", "Text Corpora", "Program Traces",
    "Sensor Streams", "Query Logs", "Social Networks", "Web Tables",
    "Genome Sequences", "Code Repositories", "Event Streams",
    "Road Networks", "Product Catalogs",
]
_TITLE_PATTERNS = [
    "{adj} {noun} for {dom}",
    "{adj} {noun} of {dom}",
    "On {adj} {noun} in {dom}",
    "Towards {adj} {noun} over {dom}",
]


@dataclass(frozen=True)
class PersonRec:
    uri: str
    name: str
    aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class PaperRec:
    uri: str
    title: str


@dataclass(frozen=True)
class VenueRec:
    uri: str
    name: str


@dataclass
class CorpusBundle:
    persons: list[PersonRec] = field(default_factory=list)
    papers: list[PaperRec] = field(default_factory=list)
    venues: list[VenueRec] = field(default_factory=list)
    authorship: list[tuple[str, str]] = field(default_factory=list)  # (paper, person)
    published_in: list[tuple[str, str]] = field(default_factory=list)  # (paper, venue)
    schema_text: str = SCHEMA_TEXT

    def ntriples_lines(self) -> list[str]:
        lines: list[str] = []
        for p in self.persons:
            lines.append(_iri_triple(p.uri, TYPE_PRED, PERSON_TYPE))
            lines.append(_lit_triple(p.uri, LABEL_PRED, p.name))
            for alias in p.aliases:
                lines.append(_lit_triple(p.uri, ALIAS_PRED, alias))
        for paper in self.papers:
            lines.append(_iri_triple(paper.uri, TYPE_PRED, PUBLICATION_TYPE))
            lines.append(_lit_triple(paper.uri, LABEL_PRED, paper.title))
        for v in self.venues:
            lines.append(_iri_triple(v.uri, TYPE_PRED, VENUE_TYPE))
            lines.append(_lit_triple(v.uri, LABEL_PRED, v.name))
        for paper_uri, person_uri in self.authorship:
            lines.append(_iri_triple(paper_uri, AUTHORED_BY, person_uri))
        for paper_uri, venue_uri in self.published_in:
            lines.append(_iri_triple(paper_uri, PUBLISHED_IN, venue_uri))
        return lines

    def ntriples_text(self) -> str:
        return "\n".join(self.ntriples_lines()) + "\n"

    def entity_labels(self) -> list[tuple[str, str]]:
        """(uri, label) for persons and papers, primary labels only."""
        out = [(p.uri, p.name) for p in self.persons]
        out.extend((pp.uri, pp.title) for pp in self.papers)
        return out

    def authors_of(self, paper_uri: str) -> list[str]:
        return [person for paper, person in self.authorship if paper == paper_uri]


def _escape_literal(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )


def _iri_triple(s: str, p: str, o: str) -> str:
    return f"<{s}> <{p}> <{o}> ."


def _lit_triple(s: str, p: str, o: str) -> str:
    return f'<{s}> <{p}> "{_escape_literal(o)}" .'


def build_corpus(
    n_persons: int = 60,
    n_papers: int = 40,
    n_venues: int = 6,
    duplicate_names: int = 0,
    seed: int = 0,
    famous: bool = False,
) -> CorpusBundle:
    """Generate a corpus with unique person names and paper titles.

    ``duplicate_names`` appends extra persons reusing existing names
    under fresh URIs (ambiguous labels for disambiguation scenarios).
    ``famous`` adds one fixed person/paper pair useful for demos.
    """
    if n_persons > len(_FIRST) * len(_LAST):
        raise ValueError(f"at most {len(_FIRST) * len(_LAST)} unique person names")
    max_titles = len(_ADJ) * len(_NOUN) * len(_DOMAIN) * len(_TITLE_PATTERNS)
    if n_papers > max_titles:
        raise ValueError(f"at most {max_titles} unique paper titles")
    rng = np.random.default_rng(seed)
    bundle = CorpusBundle()

    name_codes = rng.choice(len(_FIRST) * len(_LAST), size=n_persons, replace=False)
    for i, code in enumerate(name_codes):
        first = _FIRST[int(code) % len(_FIRST)]
        last = _LAST[int(code) // len(_FIRST)]
        name = f"{first} {last}"
        aliases: tuple[str, ...] = ()
        if rng.random() < 0.3:
            middle = chr(ord("A") + int(rng.integers(26)))
            aliases = (f"{first} {middle}. {last}",)
        bundle.persons.append(
            PersonRec(f"https://example.org/pid/{i:05d}", name, aliases)
        )

    title_codes = rng.choice(max_titles, size=n_papers, replace=False)
    for i, code in enumerate(title_codes):
        c = int(code)
        pattern = _TITLE_PATTERNS[c % len(_TITLE_PATTERNS)]
        c //= len(_TITLE_PATTERNS)
        adj = _ADJ[c % len(_ADJ)]
        c //= len(_ADJ)
        noun = _NOUN[c % len(_NOUN)]
        c //= len(_NOUN)
        dom = _DOMAIN[c % len(_DOMAIN)]
        title = pattern.format(adj=adj, noun=noun, dom=dom)
        bundle.papers.append(PaperRec(f"https://example.org/rec/{i:05d}", title))

    for i in range(n_venues):
        dom = _DOMAIN[int(rng.integers(len(_DOMAIN)))]
        bundle.venues.append(
            VenueRec(f"https://example.org/venue/{i:03d}", f"Symposium on {dom} {i}")
        )

    for j in range(duplicate_names):
        source = bundle.persons[int(rng.integers(len(name_codes)))]
        bundle.persons.append(
            PersonRec(f"https://example.org/pid/dup{j:03d}", source.name)
        )

    if famous:
        bundle.persons.append(
            PersonRec("https://example.org/pid/famous", "Ashish Vaswani")
        )
        bundle.papers.append(
            PaperRec("https://example.org/rec/famous", "Attention is all you need")
        )
        bundle.authorship.append(
            ("https://example.org/rec/famous", "https://example.org/pid/famous")
        )

    for paper in bundle.papers:
        n_authors = int(rng.integers(1, 4))
        author_ids = rng.choice(len(bundle.persons), size=n_authors, replace=False)
        for a in author_ids:
            pair = (paper.uri, bundle.persons[int(a)].uri)
            if pair not in bundle.authorship:
                bundle.authorship.append(pair)
        if bundle.venues:
            venue = bundle.venues[int(rng.integers(len(bundle.venues)))]
            bundle.published_in.append((paper.uri, venue.uri))
    return bundle


# -- QA datasets -----------------------------------------------------------


def build_questions(
    bundle: CorpusBundle,
    n: int = 200,
    seed: int = 0,
    duplicate_only: bool = False,
) -> list[dict]:
    """DBLP-QuAD-shaped question dicts whose gold entities are exactly
    the labels mentioned (persons verbatim, titles quoted).

    ``duplicate_only`` restricts person mentions to ambiguous names
    (several URIs sharing one label), for disambiguation scenarios.
    """
    rng = np.random.default_rng(seed)
    by_name: dict[str, list[PersonRec]] = {}
    for p in bundle.persons:
        by_name.setdefault(p.name, []).append(p)
    if duplicate_only:
        persons = [p for p in bundle.persons if len(by_name[p.name]) > 1]
        if not persons:
            raise ValueError("corpus has no duplicate names")
    else:
        persons = [p for p in bundle.persons if len(by_name[p.name]) == 1]
    papers = bundle.papers
    out: list[dict] = []
    for i in range(n):
        template = int(rng.integers(5))
        person = persons[int(rng.integers(len(persons)))]
        paper = papers[int(rng.integers(len(papers)))]
        if template == 0:
            question = f"Who were the co-authors of {person.name} in the paper '{paper.title}'?"
            gold = [person.uri, paper.uri]
        elif template == 1:
            question = f"Who wrote the paper '{paper.title}'?"
            gold = [paper.uri]
        elif template == 2:
            question = f"Which papers did {person.name} write?"
            gold = [person.uri]
        elif template == 3:
            other = persons[int(rng.integers(len(persons)))]
            if other.uri == person.uri:
                question = f"Which papers did {person.name} write?"
                gold = [person.uri]
            else:
                question = f"Did {person.name} work with {other.name}?"
                gold = [person.uri, other.uri]
        else:
            question = f"Was the paper '{paper.title}' written by {person.name}?"
            gold = [paper.uri, person.uri]
        if duplicate_only:
            # Gold for an ambiguous mention: all URIs sharing the name.
            gold = sorted(
                set(gold) - {person.uri} | {p.uri for p in by_name[person.name]}
            )
        out.append({"id": f"q{i:04d}", "question": question, "entities": gold})
    return out


def dataset_json(questions: Sequence[dict]) -> dict:
    return {"questions": list(questions)}


# -- Reranker training data --------------------------------------------------


def rerank_training_lines(
    bundle: CorpusBundle,
    questions: Sequence[dict],
    n_negatives: int = 1,
    seed: int = 0,
) -> list[str]:
    """Tab-separated (question, positive uri, negative uri) lines. The
    negative is a random non-gold entity, a cheap stand-in for retrieval
    hard negatives."""
    rng = np.random.default_rng(seed)
    uris = [uri for uri, _ in bundle.entity_labels()]
    lines: list[str] = []
    for q in questions:
        gold = set(q["entities"])
        for pos in sorted(gold):
            for _ in range(n_negatives):
                neg = uris[int(rng.integers(len(uris)))]
                while neg in gold:
                    neg = uris[int(rng.integers(len(uris)))]
                lines.append(f"{q['question']}\t{pos}\t{neg}")
    return lines


# -- Toy KG for embedding training -------------------------------------------


_MOVES = {
    "east": (1, 0),
    "west": (-1, 0),
    "north": (0, 1),
    "south": (0, -1),
    "northeast": (1, 1),
}


def toy_kg(
    width: int = 10,
    height: int = 5,
    n_triples: int = 200,
    seed: int = 0,
) -> list[tuple[str, str, str]]:
    """Grid-walk KG: entities are grid points, relations are fixed
    translations, so a translation-based model can fit it well.
    Triples are a seeded sample (without replacement) of all valid
    edges."""

    def node(x: int, y: int) -> str:
        return f"https://example.org/node/{x}_{y}"

    edges: list[tuple[str, str, str]] = []
    for name, (dx, dy) in _MOVES.items():
        rel = f"https://example.org/rel/{name}"
        for x in range(width):
            for y in range(height):
                nx, ny = x + dx, y + dy
                if 0 <= nx < width and 0 <= ny < height:
                    edges.append((node(x, y), rel, node(nx, ny)))
    if n_triples > len(edges):
        raise ValueError(f"grid has only {len(edges)} edges, wanted {n_triples}")
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(edges), size=n_triples, replace=False)
    return [edges[int(i)] for i in picks]


# -- Separable triplets for the reranker --------------------------------------


@dataclass(frozen=True)
class HeldoutCase:
    anchor: np.ndarray
    gold: np.ndarray
    distractors: tuple[np.ndarray, ...]


def _unit_text(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=TEXT_DIM)
    return v / np.linalg.norm(v)


def _entity_vec(
    rng: np.random.Generator,
    text_base: np.ndarray,
    text_noise: float,
    sim_low: float,
    sim_high: float,
) -> np.ndarray:
    # Noise is scaled so its norm is `text_noise` relative to the unit
    # base; positives keep pointing the anchor's way.
    noise = rng.normal(size=TEXT_DIM)
    text = text_base + text_noise * noise / np.linalg.norm(noise)
    text /= np.linalg.norm(text)
    out = np.zeros(FEATURE_DIM)
    out[:TEXT_DIM] = text
    out[TEXT_DIM:SIM_INDEX] = 0.1 * rng.normal(size=KG_DIM)
    out[SIM_INDEX] = rng.uniform(sim_low, sim_high)
    return out


def separable_triplet_sets(
    n_train: int = 300,
    n_heldout: int = 200,
    n_distractors: int = 9,
    seed: int = 0,
) -> tuple[list[tuple[np.ndarray, np.ndarray, np.ndarray]], list[HeldoutCase]]:
    """Triplets where gold entities share the anchor's text direction and
    carry a high similarity slot, while distractors are independent with
    a low slot, so the classes are linearly separable by construction."""
    rng = np.random.default_rng(seed)

    def anchor_vec(text: np.ndarray) -> np.ndarray:
        out = np.zeros(FEATURE_DIM)
        out[:TEXT_DIM] = text
        return out

    train: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    for _ in range(n_train):
        base = _unit_text(rng)
        a = anchor_vec(base)
        p = _entity_vec(rng, base, 0.15, 0.85, 1.0)
        n = _entity_vec(rng, _unit_text(rng), 0.15, 0.0, 0.5)
        train.append((a, p, n))
    heldout: list[HeldoutCase] = []
    for _ in range(n_heldout):
        base = _unit_text(rng)
        a = anchor_vec(base)
        gold = _entity_vec(rng, base, 0.15, 0.85, 1.0)
        distractors = tuple(
            _entity_vec(rng, _unit_text(rng), 0.15, 0.0, 0.5)
            for _ in range(n_distractors)
        )
        heldout.append(HeldoutCase(a, gold, distractors))
    return train, heldout


# -- Query perturbation for retrieval tests -----------------------------------


def perturbed_queries(labels: Sequence[str], n: int, seed: int = 0) -> list[str]:
    """Queries derived from real labels: verbatim, typos (deletion,
    substitution, transposition), token subsets, case noise."""
    rng = np.random.default_rng(seed)
    alphabet = "abcdefghijklmnopqrstuvwxyz"
    out: list[str] = []
    while len(out) < n:
        label = labels[int(rng.integers(len(labels)))]
        op = int(rng.integers(6))
        q = label
        if op == 1 and len(label) > 3:
            i = int(rng.integers(len(label)))
            q = label[:i] + label[i + 1 :]
        elif op == 2 and len(label) > 2:
            i = int(rng.integers(len(label)))
            q = label[:i] + alphabet[int(rng.integers(26))] + label[i + 1 :]
        elif op == 3 and len(label) > 3:
            i = int(rng.integers(len(label) - 1))
            q = label[:i] + label[i + 1] + label[i] + label[i + 2 :]
        elif op == 4:
            tokens = label.split()
            if len(tokens) > 1:
                start = int(rng.integers(len(tokens)))
                width = int(rng.integers(1, len(tokens) - start + 1))
                q = " ".join(tokens[start : start + width])
        elif op == 5:
            q = label.upper() if rng.random() < 0.5 else label.lower()
        if q.strip():
            out.append(q)
    return out
