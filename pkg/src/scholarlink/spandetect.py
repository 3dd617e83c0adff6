"""Span detection: which question substrings name entities, and of what type.

Detectors emit ``SpanPrediction(label_text, etype)`` lists. The wire
format for span model output is a tiny grammar: segments
``label [type]`` joined by `` | ``, with type ``person`` or
``publication`` (case-insensitive).

Two detector families implement the same protocol:

* :class:`RemoteSpanDetector` posts the question to an HTTP model server
  and parses its grammar output.
* :class:`LexiconSpanDetector` needs no server: quoted segments become
  publication spans, and the unquoted remainder is matched greedily
  against the label index (longest n-gram first).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Protocol

import requests

from .errors import RemoteUnavailableError, SpanParseError, SpanSerializeError
from .kgstore import PERSON, PUBLICATION, EntityType
from .labelindex import LabelIndex
from .textnorm import normalize

_TYPE_WORDS = {"person": PERSON, "publication": PUBLICATION}

MAX_NGRAM = 6

_QUOTE_RE = re.compile(
    r"\"([^\"]*)\""  # double-quoted segment
    r"|(?:(?<=\W)|^)'([^']*)'(?=\W|$)"  # single-quoted, apostrophe-guarded
)
_LEAD_PUNCT = "\"'([{"
_TRAIL_PUNCT = ".,!?;:)\"']}"


@dataclass(frozen=True)
class SpanPrediction:
    label_text: str
    etype: EntityType


def parse_model_output(output: str) -> list[SpanPrediction]:
    """Parse grammar text into spans; empty or whitespace-only output
    parses to no spans."""
    if not output.strip():
        return []
    spans: list[SpanPrediction] = []
    for idx, segment in enumerate(output.split("|")):
        seg = segment.strip()
        if not seg:
            raise SpanParseError(idx, "empty segment", raw_output=output)
        if not seg.endswith("]"):
            raise SpanParseError(idx, "segment does not end with [type]", raw_output=output)
        bracket = seg.rfind("[")
        if bracket < 0:
            raise SpanParseError(idx, "missing '[' before type", raw_output=output)
        label = seg[:bracket].strip()
        type_word = seg[bracket + 1 : -1].strip().lower()
        if not label:
            raise SpanParseError(idx, "empty label", raw_output=output)
        etype = _TYPE_WORDS.get(type_word)
        if etype is None:
            raise SpanParseError(idx, f"unknown type {type_word!r}", raw_output=output)
        spans.append(SpanPrediction(label, etype))
    return spans


def serialize_spans(spans: list[SpanPrediction]) -> str:
    """Inverse of :func:`parse_model_output` over the grammar alphabet;
    labels containing '|' or '[' are rejected, not escaped."""
    parts: list[str] = []
    for span in spans:
        if span.etype.kind not in _TYPE_WORDS:
            raise SpanSerializeError(f"cannot serialize type {span.etype}")
        if not span.label_text.strip():
            raise SpanSerializeError("cannot serialize empty span text")
        if "|" in span.label_text or "[" in span.label_text:
            raise SpanSerializeError(
                f"span text contains reserved character: {span.label_text!r}"
            )
        parts.append(f"{span.label_text} [{span.etype.kind}]")
    return " | ".join(parts)


class SpanDetector(Protocol):
    name: str

    def detect(self, question: str) -> list[SpanPrediction]: ...


def detect_remote(
    endpoint: str,
    model_name: str,
    question: str,
    timeout: float = 10.0,
    session: requests.Session | None = None,
) -> list[SpanPrediction]:
    """POST ``{"model", "question"}`` to a span model server and parse
    its ``{"output": "<grammar text>"}`` reply."""
    client = session or requests
    try:
        resp = client.post(
            endpoint,
            json={"model": model_name, "question": question},
            timeout=timeout,
        )
    except requests.RequestException as exc:
        raise RemoteUnavailableError(endpoint, str(exc)) from exc
    if resp.status_code != 200:
        raise RemoteUnavailableError(endpoint, f"status {resp.status_code}")
    try:
        data = resp.json()
    except ValueError:
        raise RemoteUnavailableError(endpoint, "response body is not JSON") from None
    output = data.get("output") if isinstance(data, dict) else None
    if not isinstance(output, str):
        raise RemoteUnavailableError(endpoint, "response lacks an 'output' string")
    return parse_model_output(output)


class RemoteSpanDetector:
    def __init__(
        self,
        name: str,
        endpoint: str,
        timeout: float = 10.0,
        session: requests.Session | None = None,
    ):
        self.name = name
        self.endpoint = endpoint
        self.timeout = timeout
        self._session = session

    def detect(self, question: str) -> list[SpanPrediction]:
        return detect_remote(
            self.endpoint, self.name, question, timeout=self.timeout, session=self._session
        )


def detect_lexicon(index: LabelIndex, question: str, max_ngram: int = MAX_NGRAM) -> list[SpanPrediction]:
    """Index-backed detection that needs no model server.

    Quoted segments (double quotes, or single quotes not touching word
    characters on the outside) become publication spans with their inner
    text verbatim. The unquoted remainder is scanned left to right for
    the longest known label n-gram (``max_ngram`` words down to 2)
    against the index's normalized texts; a hit yields a span with the
    matched entity's type. Spans come back in question order and never
    overlap.
    """
    found: list[tuple[int, SpanPrediction]] = []
    masked = list(question)
    for m in _QUOTE_RE.finditer(question):
        inner = m.group(1) if m.group(1) is not None else m.group(2)
        for i in range(m.start(), m.end()):
            masked[i] = " "
        if inner and inner.strip():
            found.append((m.start(), SpanPrediction(inner.strip(), PUBLICATION)))

    remainder = "".join(masked)
    tokens = [(m.start(), m.group(0)) for m in re.finditer(r"\S+", remainder)]
    # Per token: offset, normalized form, and edge-punctuation-stripped forms.
    words: list[tuple[int, str, str, str]] = []
    for off, raw in tokens:
        norm = normalize(raw)
        if norm:
            words.append(
                (
                    off,
                    norm,
                    normalize(raw.lstrip(_LEAD_PUNCT)),
                    normalize(raw.rstrip(_TRAIL_PUNCT)),
                )
            )

    def match(group: list[tuple[int, str, str, str]]) -> SpanPrediction | None:
        exact = [w[1] for w in group]
        cleaned = exact.copy()
        cleaned[0] = group[0][2] or cleaned[0]
        cleaned[-1] = group[-1][3] or cleaned[-1]
        keys = [" ".join(exact)]
        alt = " ".join(cleaned)
        if alt != keys[0]:
            keys.append(alt)
        for key in keys:
            for eid in index.by_norm.get(key, ()):
                etype = index.entries[eid].etype
                if etype.kind != "other":
                    return SpanPrediction(key, etype)
        return None

    i = 0
    while i < len(words):
        matched = False
        for n in range(min(max_ngram, len(words) - i), 1, -1):
            span = match(words[i : i + n])
            if span is not None:
                found.append((words[i][0], span))
                i += n
                matched = True
                break
        if not matched:
            i += 1
    found.sort(key=lambda item: item[0])
    return [span for _, span in found]


class LexiconSpanDetector:
    name = "lexicon"

    def __init__(self, index: LabelIndex, max_ngram: int = MAX_NGRAM):
        self.index = index
        self.max_ngram = max_ngram

    def detect(self, question: str) -> list[SpanPrediction]:
        return detect_lexicon(self.index, question, self.max_ngram)
