"""Knowledge-graph ingestion: N-Triples parsing and the entity store.

The ingest path is deliberately narrow: line-oriented N-Triples only
(plain or gzipped), a key-value schema file naming which predicates carry
labels, aliases and types, and a versioned binary store file that
round-trips byte-exactly.
"""
from __future__ import annotations

import gzip
import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from .binio import Reader, Writer
from .errors import ConfigError, EmptyStoreError, FormatVersionError, ParseError

STORE_MAGIC = b"ELST"

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")


@dataclass(frozen=True)
class EntityType:
    """Person, Publication, or a named catch-all for any other class."""

    kind: str  # "person" | "publication" | "other"
    other_name: str = ""

    def __str__(self) -> str:
        if self.kind == "other":
            return f"other:{self.other_name}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "EntityType":
        if text == "person":
            return PERSON
        if text == "publication":
            return PUBLICATION
        if text.startswith("other:"):
            return cls("other", text[len("other:") :])
        raise ValueError(f"unknown entity type {text!r}")


PERSON = EntityType("person")
PUBLICATION = EntityType("publication")


@dataclass(frozen=True)
class Literal:
    """RDF literal: lexical form plus optional language tag or datatype IRI."""

    lexical: str
    lang: str | None = None
    datatype: str | None = None


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: "str | Literal"  # IRI string or Literal

    def object_is_iri(self) -> bool:
        return isinstance(self.object, str)


@dataclass(frozen=True)
class EntityRecord:
    uri: str
    label: str
    aliases: tuple[str, ...]
    etype: EntityType


@dataclass
class EntityStore:
    """Immutable-after-build collection of entity records keyed by URI."""

    records: dict[str, EntityRecord] = field(default_factory=dict)
    skipped_subjects: int = 0

    @property
    def stats(self) -> dict[EntityType, int]:
        counts: dict[EntityType, int] = {}
        for rec in self.records.values():
            counts[rec.etype] = counts.get(rec.etype, 0) + 1
        return counts

    def __len__(self) -> int:
        return len(self.records)

    def get(self, uri: str) -> EntityRecord | None:
        return self.records.get(uri)


@dataclass
class ParseStats:
    statements: int = 0
    skipped: int = 0


# -- N-Triples parsing -------------------------------------------------

_ESCAPES = {
    "t": "\t",
    "b": "\b",
    "n": "\n",
    "r": "\r",
    "f": "\f",
    '"': '"',
    "'": "'",
    "\\": "\\",
}


def _decode_escapes(raw: str, line_number: int) -> str:
    if "\\" not in raw:
        return raw
    out: list[str] = []
    i = 0
    n = len(raw)
    while i < n:
        ch = raw[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= n:
            raise ParseError(line_number, "dangling backslash in literal")
        esc = raw[i + 1]
        if esc in _ESCAPES:
            out.append(_ESCAPES[esc])
            i += 2
        elif esc == "u" or esc == "U":
            width = 4 if esc == "u" else 8
            hexpart = raw[i + 2 : i + 2 + width]
            if len(hexpart) != width:
                raise ParseError(line_number, f"short \\{esc} escape")
            try:
                out.append(chr(int(hexpart, 16)))
            except ValueError:
                raise ParseError(line_number, f"bad \\{esc} escape {hexpart!r}") from None
            i += 2 + width
        else:
            raise ParseError(line_number, f"unknown escape \\{esc}")
    return "".join(out)


class _Scanner:
    """Single-line cursor over one N-Triples statement."""

    def __init__(self, line: str, line_number: int):
        self.line = line
        self.pos = 0
        self.line_number = line_number

    def error(self, reason: str) -> ParseError:
        return ParseError(self.line_number, reason)

    def skip_ws(self) -> None:
        while self.pos < len(self.line) and self.line[self.pos] in " \t":
            self.pos += 1

    def at_end(self) -> bool:
        return self.pos >= len(self.line)

    def iri(self) -> str:
        if self.at_end() or self.line[self.pos] != "<":
            if not self.at_end() and self.line.startswith("_:", self.pos):
                raise self.error("blank nodes are not supported")
            raise self.error("expected IRI")
        end = self.line.find(">", self.pos + 1)
        if end < 0:
            raise self.error("unterminated IRI")
        value = self.line[self.pos + 1 : end]
        if not _SCHEME_RE.match(value):
            raise self.error(f"IRI is not absolute: {value!r}")
        self.pos = end + 1
        return value

    def object_term(self) -> str | Literal:
        if self.at_end():
            raise self.error("missing object term")
        if self.line[self.pos] == "<":
            return self.iri()
        if self.line[self.pos] != '"':
            if self.line.startswith("_:", self.pos):
                raise self.error("blank nodes are not supported")
            raise self.error("expected IRI or literal object")
        # Scan for the closing quote, honoring backslash escapes.
        i = self.pos + 1
        while True:
            if i >= len(self.line):
                raise self.error("unterminated literal")
            ch = self.line[i]
            if ch == "\\":
                i += 2
                continue
            if ch == '"':
                break
            i += 1
        body = _decode_escapes(self.line[self.pos + 1 : i], self.line_number)
        self.pos = i + 1
        lang = None
        datatype = None
        if self.pos < len(self.line) and self.line[self.pos] == "@":
            m = re.match(r"@([A-Za-z]+(?:-[A-Za-z0-9]+)*)", self.line[self.pos :])
            if not m:
                raise self.error("malformed language tag")
            lang = m.group(1)
            self.pos += m.end()
        elif self.line.startswith("^^", self.pos):
            self.pos += 2
            datatype = self.iri()
        return Literal(body, lang=lang, datatype=datatype)

    def expect_dot(self) -> None:
        self.skip_ws()
        if self.at_end() or self.line[self.pos] != ".":
            raise self.error("statement not terminated by '.'")
        self.pos += 1
        self.skip_ws()
        if not self.at_end() and not self.line[self.pos] == "#":
            raise self.error("trailing content after '.'")


def _parse_statement(line: str, line_number: int) -> Triple:
    sc = _Scanner(line, line_number)
    sc.skip_ws()
    subject = sc.iri()
    sc.skip_ws()
    predicate = sc.iri()
    sc.skip_ws()
    obj = sc.object_term()
    sc.expect_dot()
    return Triple(subject, predicate, obj)


def parse_ntriples(
    stream: Iterable[bytes] | Iterable[str] | IO[bytes],
    on_error: str = "abort",
    stats: ParseStats | None = None,
) -> Iterator[Triple]:
    """Yield triples from a line-oriented N-Triples stream, in input order.

    Blank lines and comment lines (leading ``#``) are skipped. Malformed
    statements raise :class:`ParseError` when ``on_error`` is ``"abort"``;
    with ``"skip"`` they are counted in ``stats.skipped`` instead.
    """
    if on_error not in ("abort", "skip"):
        raise ValueError(f"on_error must be 'abort' or 'skip', got {on_error!r}")
    for line_number, raw in enumerate(stream, 1):
        if isinstance(raw, bytes):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                if on_error == "skip":
                    if stats is not None:
                        stats.skipped += 1
                    continue
                raise ParseError(line_number, f"invalid UTF-8: {exc}") from None
        else:
            line = raw
        line = line.rstrip("\r\n")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            triple = _parse_statement(line, line_number)
        except ParseError:
            if on_error == "skip":
                if stats is not None:
                    stats.skipped += 1
                continue
            raise
        if stats is not None:
            stats.statements += 1
        yield triple


def open_triples(path: str | Path) -> IO[bytes]:
    """Open an N-Triples file, transparently unwrapping gzip by magic bytes."""
    fh = open(path, "rb")
    magic = fh.read(2)
    fh.seek(0)
    if magic == b"\x1f\x8b":
        return gzip.open(fh, "rb")  # type: ignore[return-value]
    return fh


# -- Schema configuration ----------------------------------------------


@dataclass(frozen=True)
class SchemaConfig:
    """Maps predicate IRIs to label/alias/type roles and class IRIs to types."""

    label_predicates: tuple[str, ...]
    alias_predicates: tuple[str, ...]
    type_predicate: str
    type_map: dict[str, EntityType]

    @classmethod
    def parse(cls, text: str) -> "SchemaConfig":
        labels: list[str] = []
        aliases: list[str] = []
        type_pred: str | None = None
        type_map: dict[str, EntityType] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"schema line {lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not value:
                raise ConfigError(f"schema line {lineno}: empty value")
            if key == "label":
                labels.append(value)
            elif key == "alias":
                aliases.append(value)
            elif key == "type":
                if type_pred is not None:
                    raise ConfigError(f"schema line {lineno}: duplicate 'type' key")
                type_pred = value
            elif key == "person":
                type_map[value] = PERSON
            elif key == "publication":
                type_map[value] = PUBLICATION
            else:
                raise ConfigError(f"schema line {lineno}: unknown key {key!r}")
        if not labels:
            raise ConfigError("schema defines no label predicate")
        if type_pred is None:
            raise ConfigError("schema defines no type predicate")
        return cls(tuple(labels), tuple(aliases), type_pred, type_map)

    @classmethod
    def load(cls, path: str | Path) -> "SchemaConfig":
        return cls.parse(Path(path).read_text(encoding="utf-8"))


def _iri_fragment(iri: str) -> str:
    if "#" in iri:
        return iri.rsplit("#", 1)[1]
    return iri.rstrip("/").rsplit("/", 1)[-1]


def extract_entities(triples: Iterable[Triple], schema: SchemaConfig) -> EntityStore:
    """Build an :class:`EntityStore` from triples.

    A subject becomes a record once it has a type and at least one label;
    the first label seen is the primary label, every later label or alias
    value becomes an alias (first-seen order, duplicates dropped). Subjects
    with partial information are skipped and counted.
    """
    label_set = set(schema.label_predicates)
    alias_set = set(schema.alias_predicates)
    labels: dict[str, list[str]] = {}
    aliases: dict[str, list[str]] = {}
    types: dict[str, EntityType] = {}
    seen: dict[str, None] = {}

    for t in triples:
        if t.predicate in label_set and isinstance(t.object, Literal):
            labels.setdefault(t.subject, []).append(t.object.lexical)
            seen.setdefault(t.subject)
        elif t.predicate in alias_set and isinstance(t.object, Literal):
            aliases.setdefault(t.subject, []).append(t.object.lexical)
            seen.setdefault(t.subject)
        elif t.predicate == schema.type_predicate and isinstance(t.object, str):
            if t.subject not in types:
                etype = schema.type_map.get(t.object)
                if etype is None:
                    etype = EntityType("other", _iri_fragment(t.object))
                types[t.subject] = etype
            seen.setdefault(t.subject)

    records: dict[str, EntityRecord] = {}
    skipped = 0
    for uri in seen:
        subject_labels = [s for s in labels.get(uri, []) if s]
        if uri not in types or not subject_labels:
            skipped += 1
            continue
        primary = subject_labels[0]
        alias_list: list[str] = []
        for value in subject_labels[1:] + [a for a in aliases.get(uri, []) if a]:
            if value != primary and value not in alias_list:
                alias_list.append(value)
        records[uri] = EntityRecord(uri, primary, tuple(alias_list), types[uri])

    if not records:
        raise EmptyStoreError("no entities extracted")
    return EntityStore(records=records, skipped_subjects=skipped)


# -- Persistence --------------------------------------------------------

_TYPE_TAGS = {"person": 0, "publication": 1, "other": 2}
_TAG_TYPES = {v: k for k, v in _TYPE_TAGS.items()}


def save_store(store: EntityStore, path: str | Path) -> None:
    """Write the store; records are serialized in sorted-URI order so two
    saves of equal stores are byte-identical."""
    buf = io.BytesIO()
    w = Writer(buf)
    w.header(STORE_MAGIC)
    w.u64(store.skipped_subjects)
    w.u32(len(store.records))
    for uri in sorted(store.records):
        rec = store.records[uri]
        w.text(rec.uri)
        w.text(rec.label)
        w.u32(len(rec.aliases))
        for alias in rec.aliases:
            w.text(alias)
        w.u8(_TYPE_TAGS[rec.etype.kind])
        if rec.etype.kind == "other":
            w.text(rec.etype.other_name)
    Path(path).write_bytes(buf.getvalue())


def load_store(path: str | Path) -> EntityStore:
    with open(path, "rb") as fh:
        r = Reader(fh)
        r.header(STORE_MAGIC)
        skipped = r.u64()
        count = r.u32()
        records: dict[str, EntityRecord] = {}
        for _ in range(count):
            uri = r.text()
            label = r.text()
            n_aliases = r.u32()
            aliases = tuple(r.text() for _ in range(n_aliases))
            tag = r.u8()
            if tag not in _TAG_TYPES:
                raise FormatVersionError(f"unknown entity type tag {tag}")
            if tag == _TYPE_TAGS["other"]:
                etype = EntityType("other", r.text())
            elif tag == _TYPE_TAGS["person"]:
                etype = PERSON
            else:
                etype = PUBLICATION
            records[uri] = EntityRecord(uri, label, aliases, etype)
        r.expect_eof()
    return EntityStore(records=records, skipped_subjects=skipped)
