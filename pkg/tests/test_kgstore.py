import gzip
import io

import pytest

from scholarlink.errors import ConfigError, EmptyStoreError, FormatVersionError, ParseError
from scholarlink.kgstore import (
    PERSON,
    PUBLICATION,
    EntityType,
    Literal,
    ParseStats,
    SchemaConfig,
    Triple,
    extract_entities,
    load_store,
    open_triples,
    parse_ntriples,
    save_store,
)

SCHEMA_TEXT = """\
label = http://ex.org/name
alias = http://ex.org/alias
type = http://rdf.org/type
person = http://ex.org/Person
publication = http://ex.org/Paper
"""


def parse_lines(text: str, **kw):
    return list(parse_ntriples(io.StringIO(text), **kw))


# -- statement parsing -------------------------------------------------------


def test_parse_iri_object():
    triples = parse_lines("<http://a> <http://p> <http://b> .\n")
    assert triples == [Triple("http://a", "http://p", "http://b")]
    assert triples[0].object_is_iri()


def test_parse_plain_literal():
    (t,) = parse_lines('<http://a> <http://p> "hello" .')
    assert t.object == Literal("hello")
    assert not t.object_is_iri()


def test_parse_language_tagged_literal():
    (t,) = parse_lines('<http://a> <http://p> "hallo"@de-DE .')
    assert t.object == Literal("hallo", lang="de-DE")


def test_parse_datatyped_literal():
    (t,) = parse_lines('<http://a> <http://p> "42"^^<http://www.w3.org/2001/XMLSchema#int> .')
    assert t.object == Literal("42", datatype="http://www.w3.org/2001/XMLSchema#int")


def test_parse_escape_sequences():
    raw = r'<http://a> <http://p> "tab\tquote\"back\\slash\nnew" .'
    (t,) = parse_lines(raw)
    assert t.object.lexical == 'tab\tquote"back\\slash\nnew'


def test_parse_unicode_escapes():
    (t,) = parse_lines(r'<http://a> <http://p> "é and \U0001F600" .')
    assert t.object.lexical == "é and \U0001F600"


def test_parse_skips_comments_and_blank_lines():
    text = "# header\n\n<http://a> <http://p> <http://b> .\n   \n# tail\n"
    assert len(parse_lines(text)) == 1


def test_parse_trailing_comment_after_dot():
    (t,) = parse_lines("<http://a> <http://p> <http://b> . # note")
    assert t.subject == "http://a"


def test_parse_rejects_relative_iri():
    with pytest.raises(ParseError) as err:
        parse_lines("</relative> <http://p> <http://b> .")
    assert "absolute" in str(err.value)


def test_parse_rejects_blank_nodes():
    with pytest.raises(ParseError):
        parse_lines("_:b0 <http://p> <http://b> .")
    with pytest.raises(ParseError):
        parse_lines("<http://a> <http://p> _:b0 .")


def test_parse_rejects_missing_dot():
    with pytest.raises(ParseError):
        parse_lines("<http://a> <http://p> <http://b>")


def test_parse_rejects_unterminated_literal():
    with pytest.raises(ParseError):
        parse_lines('<http://a> <http://p> "open .')


def test_parse_rejects_bad_escape():
    with pytest.raises(ParseError):
        parse_lines(r'<http://a> <http://p> "\q" .')


def test_parse_error_reports_line_number():
    text = "<http://a> <http://p> <http://b> .\nnot a triple\n"
    with pytest.raises(ParseError) as err:
        parse_lines(text)
    assert err.value.line_number == 2


def test_parse_skip_mode_counts_and_continues():
    text = (
        "<http://a> <http://p> <http://b> .\n"
        "garbage line\n"
        "<http://c> <http://p> <http://d> .\n"
    )
    stats = ParseStats()
    triples = parse_lines(text, on_error="skip", stats=stats)
    assert [t.subject for t in triples] == ["http://a", "http://c"]
    assert stats.statements == 2
    assert stats.skipped == 1


def test_parse_abort_mode_raises_immediately():
    text = "garbage\n<http://a> <http://p> <http://b> .\n"
    with pytest.raises(ParseError):
        parse_lines(text)


def test_parse_accepts_bytes_stream():
    data = "<http://a> <http://p> \"café\" .\n".encode("utf-8")
    (t,) = list(parse_ntriples(io.BytesIO(data)))
    assert t.object.lexical == "café"


def test_parse_statement_count_matches_wellformed_lines():
    text = "\n".join(
        f'<http://e/{i}> <http://p> "L{i}" .' for i in range(20)
    )
    stats = ParseStats()
    triples = parse_lines(text, stats=stats)
    assert stats.statements == len(triples) == 20


def test_open_triples_detects_gzip(tmp_path):
    line = b'<http://a> <http://p> "x" .\n'
    plain = tmp_path / "plain.nt"
    plain.write_bytes(line)
    gz = tmp_path / "zipped.nt.gz"
    gz.write_bytes(gzip.compress(line))
    for path in (plain, gz):
        with open_triples(path) as fh:
            assert len(list(parse_ntriples(fh))) == 1


# -- schema config ------------------------------------------------------------


def test_schema_parse_roles():
    schema = SchemaConfig.parse(SCHEMA_TEXT)
    assert schema.label_predicates == ("http://ex.org/name",)
    assert schema.alias_predicates == ("http://ex.org/alias",)
    assert schema.type_predicate == "http://rdf.org/type"
    assert schema.type_map == {
        "http://ex.org/Person": PERSON,
        "http://ex.org/Paper": PUBLICATION,
    }


def test_schema_requires_label_and_type():
    with pytest.raises(ConfigError):
        SchemaConfig.parse("type = http://t\n")
    with pytest.raises(ConfigError):
        SchemaConfig.parse("label = http://l\n")


def test_schema_rejects_duplicate_type_key():
    with pytest.raises(ConfigError):
        SchemaConfig.parse("label = http://l\ntype = http://t\ntype = http://t2\n")


def test_schema_rejects_unknown_key():
    with pytest.raises(ConfigError):
        SchemaConfig.parse("label = http://l\ntype = http://t\nvenue = http://v\n")


def test_schema_ignores_comments():
    schema = SchemaConfig.parse("# c\nlabel = http://l\ntype = http://t\n")
    assert schema.label_predicates == ("http://l",)


# -- entity extraction ---------------------------------------------------------


def triples_for(uri: str, label: str, type_iri: str, aliases=()):
    out = [
        Triple(uri, "http://rdf.org/type", type_iri),
        Triple(uri, "http://ex.org/name", Literal(label)),
    ]
    out.extend(Triple(uri, "http://ex.org/alias", Literal(a)) for a in aliases)
    return out


def test_extract_basic_entities():
    schema = SchemaConfig.parse(SCHEMA_TEXT)
    triples = triples_for("http://e/1", "Ada Chen", "http://ex.org/Person") + triples_for(
        "http://e/2", "Robust Parsing", "http://ex.org/Paper"
    )
    store = extract_entities(triples, schema)
    assert len(store) == 2
    assert store.get("http://e/1").etype == PERSON
    assert store.get("http://e/2").etype == PUBLICATION


def test_extract_first_label_is_primary_later_become_aliases():
    schema = SchemaConfig.parse(SCHEMA_TEXT)
    triples = [
        Triple("http://e/1", "http://rdf.org/type", "http://ex.org/Person"),
        Triple("http://e/1", "http://ex.org/name", Literal("First Label")),
        Triple("http://e/1", "http://ex.org/name", Literal("Second Label")),
        Triple("http://e/1", "http://ex.org/alias", Literal("Alias One")),
        Triple("http://e/1", "http://ex.org/alias", Literal("Alias One")),  # dup dropped
        Triple("http://e/1", "http://ex.org/alias", Literal("First Label")),  # == primary
    ]
    rec = extract_entities(triples, schema).get("http://e/1")
    assert rec.label == "First Label"
    assert rec.aliases == ("Second Label", "Alias One")


def test_extract_unknown_type_iri_becomes_other():
    schema = SchemaConfig.parse(SCHEMA_TEXT)
    triples = triples_for("http://e/v", "Some Venue", "http://ex.org/schema#Venue")
    rec = extract_entities(triples, schema).get("http://e/v")
    assert rec.etype == EntityType("other", "Venue")
    assert str(rec.etype) == "other:Venue"


def test_extract_skips_partial_subjects():
    schema = SchemaConfig.parse(SCHEMA_TEXT)
    triples = (
        triples_for("http://e/full", "Kept", "http://ex.org/Person")
        + [Triple("http://e/untagged", "http://ex.org/name", Literal("No Type"))]
        + [Triple("http://e/unlabeled", "http://rdf.org/type", "http://ex.org/Person")]
    )
    store = extract_entities(triples, schema)
    assert len(store) == 1
    assert store.skipped_subjects == 2


def test_extract_first_type_wins():
    schema = SchemaConfig.parse(SCHEMA_TEXT)
    triples = [
        Triple("http://e/1", "http://rdf.org/type", "http://ex.org/Person"),
        Triple("http://e/1", "http://rdf.org/type", "http://ex.org/Paper"),
        Triple("http://e/1", "http://ex.org/name", Literal("X")),
    ]
    assert extract_entities(triples, schema).get("http://e/1").etype == PERSON


def test_extract_empty_raises():
    schema = SchemaConfig.parse(SCHEMA_TEXT)
    with pytest.raises(EmptyStoreError):
        extract_entities([], schema)


def test_extract_deterministic(corpus_triples, schema):
    a = extract_entities(corpus_triples, schema)
    b = extract_entities(corpus_triples, schema)
    assert a.records == b.records
    assert a.skipped_subjects == b.skipped_subjects


def test_store_stats_counts_types(store, corpus_bundle):
    stats = store.stats
    assert stats[PERSON] == len(corpus_bundle.persons)
    assert stats[PUBLICATION] == len(corpus_bundle.papers)


# -- persistence ---------------------------------------------------------------


def test_store_roundtrip_exact(store, tmp_path):
    path = tmp_path / "store.bin"
    save_store(store, path)
    loaded = load_store(path)
    assert loaded.records == store.records
    assert loaded.skipped_subjects == store.skipped_subjects


def test_store_saves_are_byte_identical(store, tmp_path):
    p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
    save_store(store, p1)
    save_store(store, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_store_load_truncated_never_partial(store, tmp_path):
    path = tmp_path / "store.bin"
    save_store(store, path)
    data = path.read_bytes()
    cut = tmp_path / "cut.bin"
    cut.write_bytes(data[: len(data) // 2])
    with pytest.raises(FormatVersionError):
        load_store(cut)


def test_store_load_rejects_foreign_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE\x01")
    with pytest.raises(FormatVersionError):
        load_store(path)
