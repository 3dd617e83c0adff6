"""Evaluation: question datasets, set precision/recall/F1, grid reports.

A dataset is a JSON file holding question items with gold entity URIs.
Each configuration (span detector x mode x embedding kind) is scored by
taking the top-ranked entity of every span as the prediction set for a
question and comparing against the gold set:

    p = |pred & gold| / |pred|    (empty pred: 1 if gold also empty, else 0)
    r = |pred & gold| / |gold|    (empty gold: 1 if pred also empty, else 0)
    f1 = 2pr / (p + r), 0 when p + r = 0

Macro scores average per-question values (the primary number); micro
scores pool the counts. Reports are deterministic: no timestamps, fixed
float formatting, fixed row order (detector, then mode, then embedding).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DatasetSchemaError, DuplicateIdError, RemoteUnavailableError
from .kgembed import EmbeddingKind
from .pipeline import LinkMode, LinkRequest, LinkResult, Resources, link


@dataclass(frozen=True)
class FieldMap:
    """Names of the dataset's JSON fields, for format variants."""

    qid: str = "id"
    question: str = "question"
    entities: str = "entities"


@dataclass(frozen=True)
class GoldQuestion:
    qid: str
    question: str
    gold_entities: frozenset[str]


def _strip_brackets(value: str) -> str:
    value = value.strip()
    if value.startswith("<") and value.endswith(">"):
        value = value[1:-1]
    return value


def load_dataset(path: str | Path, fields: FieldMap = FieldMap()) -> list[GoldQuestion]:
    """Load a QA dataset; the root may be a list or an object with a
    ``questions`` list. Gold URIs may be wrapped in angle brackets.
    Gold sets may be empty (counted separately in reports)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetSchemaError(str(path), f"invalid JSON: {exc}") from None
    prefix = ""
    if isinstance(data, dict):
        if "questions" not in data:
            raise DatasetSchemaError(str(path), "object root lacks a 'questions' list")
        data = data["questions"]
        prefix = "questions"
    if not isinstance(data, list):
        raise DatasetSchemaError(str(path), "root is neither a list nor an object")
    if not data:
        raise DatasetSchemaError(str(path), "dataset is empty")
    items: list[GoldQuestion] = []
    seen: set[str] = set()
    for i, raw in enumerate(data):
        where = f"{prefix}[{i}]" if prefix else f"[{i}]"
        if not isinstance(raw, dict):
            raise DatasetSchemaError(str(path), f"{where} is not an object")
        qid = raw.get(fields.qid)
        question = raw.get(fields.question)
        entities = raw.get(fields.entities)
        if not isinstance(qid, (str, int)):
            raise DatasetSchemaError(str(path), f"{where}.{fields.qid} missing or not a string")
        qid = str(qid)
        if not isinstance(question, str) or not question.strip():
            raise DatasetSchemaError(str(path), f"{where}.{fields.question} missing or empty")
        if not isinstance(entities, list):
            raise DatasetSchemaError(str(path), f"{where}.{fields.entities} is not a list")
        gold: set[str] = set()
        for j, ent in enumerate(entities):
            if not isinstance(ent, str) or not ent.strip():
                raise DatasetSchemaError(
                    str(path), f"{where}.{fields.entities}[{j}] is not a non-empty string"
                )
            gold.add(_strip_brackets(ent))
        if qid in seen:
            raise DuplicateIdError(f"duplicate question id {qid!r}")
        seen.add(qid)
        items.append(GoldQuestion(qid=qid, question=question, gold_entities=frozenset(gold)))
    return items


@dataclass(frozen=True)
class PRF1:
    precision: float
    recall: float
    f1: float


def prf1(pred: Iterable[str], gold: Iterable[str]) -> PRF1:
    pred = frozenset(pred)
    gold = frozenset(gold)
    inter = len(pred & gold)
    if pred:
        p = inter / len(pred)
    else:
        p = 1.0 if not gold else 0.0
    if gold:
        r = inter / len(gold)
    else:
        r = 1.0 if not pred else 0.0
    f = 0.0 if p + r == 0.0 else 2.0 * p * r / (p + r)
    return PRF1(p, r, f)


def predicted_uris(result: LinkResult) -> frozenset[str]:
    """Top-1 URI of every span that produced a ranking."""
    return frozenset(s.ranked[0].uri for s in result.spans if s.ranked)


@dataclass(frozen=True)
class QuestionScore:
    qid: str
    scores: PRF1
    error: str | None = None


@dataclass(frozen=True)
class EvalRow:
    detector: str
    mode: LinkMode
    embedding: EmbeddingKind | None
    questions: int
    empty_gold: int
    remote_errors: int
    macro: PRF1
    micro: PRF1
    per_question: tuple[QuestionScore, ...] = ()

    @property
    def embedding_name(self) -> str:
        return self.embedding.value if self.embedding is not None else "-"


def evaluate_config(
    resources: Resources,
    items: Sequence[GoldQuestion],
    detector: str,
    mode: LinkMode,
    embedding: EmbeddingKind | None = None,
    k: int | None = None,
) -> EvalRow:
    """Score one configuration. Remote failures on individual questions
    become empty predictions flagged with the error, not aborts."""
    p_sum = r_sum = f_sum = 0.0
    inter_total = pred_total = gold_total = 0
    remote_errors = 0
    records: list[QuestionScore] = []
    for item in items:
        request = LinkRequest(
            question=item.question,
            span_model=detector,
            mode=mode,
            embedding=embedding,
            k=k,
        )
        error = None
        try:
            pred = predicted_uris(link(resources, request))
        except RemoteUnavailableError as exc:
            pred = frozenset()
            error = str(exc)
            remote_errors += 1
        scores = prf1(pred, item.gold_entities)
        records.append(QuestionScore(item.qid, scores, error))
        p_sum += scores.precision
        r_sum += scores.recall
        f_sum += scores.f1
        inter_total += len(pred & item.gold_entities)
        pred_total += len(pred)
        gold_total += len(item.gold_entities)
    n = len(items)
    macro = PRF1(p_sum / n, r_sum / n, f_sum / n) if n else PRF1(0.0, 0.0, 0.0)
    mp = inter_total / pred_total if pred_total else (1.0 if gold_total == 0 else 0.0)
    mr = inter_total / gold_total if gold_total else (1.0 if pred_total == 0 else 0.0)
    mf = 0.0 if mp + mr == 0.0 else 2.0 * mp * mr / (mp + mr)
    return EvalRow(
        detector=detector,
        mode=mode,
        embedding=embedding,
        questions=n,
        empty_gold=sum(1 for item in items if not item.gold_entities),
        remote_errors=remote_errors,
        macro=macro,
        micro=PRF1(mp, mr, mf),
        per_question=tuple(records),
    )


def run_grid(
    resources: Resources,
    items: Sequence[GoldQuestion],
    detectors: Iterable[str] | None = None,
    embeddings: Iterable[EmbeddingKind] | None = None,
    k: int | None = None,
) -> list[EvalRow]:
    """Score the full grid: per detector, one label-sorting row, then one
    conditional and one hard row per embedding kind."""
    names = list(detectors) if detectors is not None else list(resources.detectors)
    kinds = (
        list(embeddings)
        if embeddings is not None
        else [kind for kind in EmbeddingKind if kind in resources.embeddings]
    )
    rows: list[EvalRow] = []
    for name in names:
        rows.append(evaluate_config(resources, items, name, LinkMode.LABEL_SORTING, None, k))
        for mode in (LinkMode.CONDITIONAL, LinkMode.HARD):
            for kind in kinds:
                rows.append(evaluate_config(resources, items, name, mode, kind, k))
    return rows


CSV_HEADER = (
    "detector,mode,embedding,questions,empty_gold,remote_errors,"
    "macro_p,macro_r,macro_f1,micro_p,micro_r,micro_f1"
)


def report_csv(rows: Sequence[EvalRow]) -> str:
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(
            ",".join(
                [
                    row.detector,
                    row.mode.value,
                    row.embedding_name,
                    str(row.questions),
                    str(row.empty_gold),
                    str(row.remote_errors),
                    f"{row.macro.precision:.4f}",
                    f"{row.macro.recall:.4f}",
                    f"{row.macro.f1:.4f}",
                    f"{row.micro.precision:.4f}",
                    f"{row.micro.recall:.4f}",
                    f"{row.micro.f1:.4f}",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def report_table(rows: Sequence[EvalRow]) -> str:
    """Aligned text table; macro-averaged scores are the primary columns."""
    header = [
        "detector",
        "mode",
        "embedding",
        "q",
        "macro_p",
        "macro_r",
        "macro_f1",
        "micro_f1",
    ]
    body = [
        [
            row.detector,
            row.mode.value,
            row.embedding_name,
            str(row.questions),
            f"{row.macro.precision:.4f}",
            f"{row.macro.recall:.4f}",
            f"{row.macro.f1:.4f}",
            f"{row.micro.f1:.4f}",
        ]
        for row in rows
    ]
    widths = [
        max(len(h), *(len(b[i]) for b in body)) if body else len(h)
        for i, h in enumerate(header)
    ]

    def fmt(cells: list[str]) -> str:
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(cells)).rstrip()

    lines = [fmt(header), fmt(["-" * w for w in widths])]
    lines.extend(fmt(b) for b in body)
    return "\n".join(lines) + "\n"
