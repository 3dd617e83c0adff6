"""Command-line entry points.

Every subcommand wraps one library operation. Exit codes: 0 success,
1 user error (bad flags, bad input files, missing resources), 2
internal error (diverging training, non-finite numerics, misbehaving
remotes). Errors print to stderr as ``error[<machine-code>]: message``.
All randomness flows through ``--seed``; outputs carry no timestamps,
so a rerun with the same inputs and seed writes identical bytes.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import synthdata
from .errors import (
    BadRemoteVectorError,
    DivergedLossError,
    LinkerError,
    NonFiniteGradientError,
    NonFiniteOutputError,
    RemoteUnavailableError,
    SpanParseError,
)
from .evalharness import FieldMap, load_dataset, report_csv, report_table, run_grid
from .kgembed import (
    EmbeddingKind,
    EmbedTrainConfig,
    export_tsv,
    grad_check,
    import_tsv,
    load_embeddings,
    save_embeddings,
    train_embeddings,
)
from .kgstore import (
    SchemaConfig,
    extract_entities,
    load_store,
    open_triples,
    parse_ntriples,
    save_store,
    ParseStats,
)
from .labelindex import build_index, load_index, save_index
from .pipeline import (
    LinkMode,
    LinkRequest,
    embedding_file,
    link,
    load_resources,
)
from .reranker import (
    RerankTrainConfig,
    build_training_set,
    load_training_file,
    save_siamese,
    train_reranker,
)
from .service import link_result_json, load_service_config, serve as run_server
from .textencoder import backend_from_name, encode

_INTERNAL_ERRORS = (
    DivergedLossError,
    NonFiniteGradientError,
    NonFiniteOutputError,
    RemoteUnavailableError,
    BadRemoteVectorError,
    SpanParseError,
)


@click.group()
def cli() -> None:
    """Entity linking over a scholarly knowledge graph."""


# -- data generation ----------------------------------------------------------


@cli.group()
def synth() -> None:
    """Generate deterministic synthetic data."""


@synth.command("corpus")
@click.option("--out-dir", type=click.Path(path_type=Path), required=True)
@click.option("--persons", default=60, show_default=True)
@click.option("--papers", default=40, show_default=True)
@click.option("--questions", default=50, show_default=True)
@click.option("--duplicates", default=0, show_default=True, help="Extra persons reusing existing names.")
@click.option("--famous/--no-famous", default=True, show_default=True)
@click.option("--seed", default=0, show_default=True)
def synth_corpus(
    out_dir: Path,
    persons: int,
    papers: int,
    questions: int,
    duplicates: int,
    famous: bool,
    seed: int,
) -> None:
    """Write graph.nt, schema.txt, dataset.json and rerank.tsv."""
    bundle = synthdata.build_corpus(
        n_persons=persons,
        n_papers=papers,
        duplicate_names=duplicates,
        seed=seed,
        famous=famous,
    )
    qs = synthdata.build_questions(bundle, n=questions, seed=seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "graph.nt").write_text(bundle.ntriples_text(), encoding="utf-8")
    (out_dir / "schema.txt").write_text(bundle.schema_text, encoding="utf-8")
    (out_dir / "dataset.json").write_text(
        json.dumps(synthdata.dataset_json(qs), indent=2) + "\n", encoding="utf-8"
    )
    lines = synthdata.rerank_training_lines(bundle, qs, seed=seed)
    (out_dir / "rerank.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo(
        f"wrote corpus: {len(bundle.persons)} persons, {len(bundle.papers)} papers, "
        f"{len(qs)} questions -> {out_dir}"
    )


# -- ingest -------------------------------------------------------------------


@cli.command()
@click.option("--triples", "triples_path", type=click.Path(path_type=Path), required=True)
@click.option("--schema", "schema_path", type=click.Path(path_type=Path), required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option(
    "--on-error",
    type=click.Choice(["abort", "skip"]),
    default="abort",
    show_default=True,
)
def ingest(triples_path: Path, schema_path: Path, out_path: Path, on_error: str) -> None:
    """Parse an N-Triples file and build the entity store."""
    schema = SchemaConfig.load(schema_path)
    stats = ParseStats()
    with open_triples(triples_path) as stream:
        store = extract_entities(
            parse_ntriples(stream, on_error=on_error, stats=stats), schema
        )
    save_store(store, out_path)
    click.echo(
        f"parsed {stats.statements} statements ({stats.skipped} skipped), "
        f"stored {len(store)} entities ({store.skipped_subjects} subjects incomplete)"
    )


# -- index --------------------------------------------------------------------


@cli.group()
def index() -> None:
    """Label index operations."""


@index.command("build")
@click.option("--store", "store_path", type=click.Path(path_type=Path), required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
def index_build(store_path: Path, out_path: Path) -> None:
    """Build the trigram label index from a store file."""
    store = load_store(store_path)
    idx = build_index(store)
    save_index(idx, out_path)
    click.echo(f"indexed {len(idx.entries)} labels from {len(store)} entities")


# -- embeddings ---------------------------------------------------------------


def _kind_option(required: bool = True):
    return click.option(
        "--kind",
        type=click.Choice([k.value for k in EmbeddingKind]),
        required=required,
    )


@cli.group()
def embed() -> None:
    """Knowledge-graph embedding operations."""


@embed.command("train")
@_kind_option()
@click.option("--triples", "triples_path", type=click.Path(path_type=Path), required=True)
@click.option(
    "--store",
    "store_path",
    type=click.Path(path_type=Path),
    default=None,
    help="Keep only triples whose subject and object are stored entities.",
)
@click.option("--dim", default=200, show_default=True)
@click.option("--epochs", default=100, show_default=True)
@click.option("--lr", default=0.05, show_default=True)
@click.option("--margin", default=1.0, show_default=True)
@click.option("--negatives", default=1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
def embed_train(
    kind: str,
    triples_path: Path,
    store_path: Path | None,
    dim: int,
    epochs: int,
    lr: float,
    margin: float,
    negatives: int,
    seed: int,
    out_path: Path,
) -> None:
    """Train embeddings on the entity-entity triples of an N-Triples file."""
    with open_triples(triples_path) as stream:
        triples = [t for t in parse_ntriples(stream) if t.object_is_iri()]
    if store_path is not None:
        store = load_store(store_path)
        triples = [t for t in triples if t.subject in store.records and t.object in store.records]
    raw = [(t.subject, t.predicate, t.object) for t in triples]
    config = EmbedTrainConfig(
        dim=dim,
        epochs=epochs,
        learning_rate=lr,
        margin=margin,
        negatives_per_positive=negatives,
        seed=seed,
    )
    emb = train_embeddings(raw, config, EmbeddingKind(kind))
    save_embeddings(emb, out_path)
    click.echo(
        f"trained {kind} on {len(raw)} triples: "
        f"{len(emb.entities)} entities, {len(emb.relations)} relations, dim {emb.dim}"
    )


@embed.command("check")
@_kind_option()
@click.option("--dim", default=8, show_default=True)
@click.option("--points", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
def embed_check(kind: str, dim: int, points: int, seed: int) -> None:
    """Compare analytic loss gradients against central differences."""
    err = grad_check(EmbeddingKind(kind), dim=dim, n_points=points, seed=seed)
    click.echo(f"{kind} max relative gradient error: {err:.3e}")


@embed.command("export")
@click.option("--embeddings", "emb_path", type=click.Path(path_type=Path), required=True)
@click.option("--entities-out", type=click.Path(path_type=Path), required=True)
@click.option("--relations-out", type=click.Path(path_type=Path), required=True)
def embed_export(emb_path: Path, entities_out: Path, relations_out: Path) -> None:
    """Dump embeddings to two TSV files (id, then components)."""
    emb = load_embeddings(emb_path)
    export_tsv(emb, entities_out, relations_out)
    click.echo(f"exported {len(emb.entities)} entities, {len(emb.relations)} relations")


@embed.command("import")
@_kind_option()
@click.option("--entities", "entities_path", type=click.Path(path_type=Path), required=True)
@click.option("--relations", "relations_path", type=click.Path(path_type=Path), required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
def embed_import(kind: str, entities_path: Path, relations_path: Path, out_path: Path) -> None:
    """Load embeddings from TSV files produced elsewhere."""
    emb = import_tsv(EmbeddingKind(kind), entities_path, relations_path)
    save_embeddings(emb, out_path)
    click.echo(f"imported {len(emb.entities)} entities at dim {emb.dim}")


# -- text encoding ------------------------------------------------------------


@cli.command("encode")
@click.option("--backend", default="hash", show_default=True)
@click.option("--endpoint", default=None, help="Remote encoder URL (or env var).")
@click.option("--text", required=True)
def encode_cmd(backend: str, endpoint: str | None, text: str) -> None:
    """Encode one text and print a summary (debugging aid)."""
    vec = encode(backend_from_name(backend, endpoint=endpoint), text)
    head = " ".join(f"{v:.6f}" for v in vec[:6])
    click.echo(f"dim={vec.shape[0]} norm={float((vec ** 2).sum()) ** 0.5:.6f} head=[{head} ...]")


# -- reranker -----------------------------------------------------------------


@cli.group()
def rerank() -> None:
    """Siamese reranker operations."""


@rerank.command("train")
@click.option("--data", "data_path", type=click.Path(path_type=Path), required=True)
@click.option("--store", "store_path", type=click.Path(path_type=Path), required=True)
@click.option(
    "--embeddings",
    "emb_path",
    type=click.Path(path_type=Path),
    default=None,
    help="Optional KG embeddings supplying the 200-dim slot.",
)
@click.option("--epochs", default=300, show_default=True)
@click.option("--lr", default=0.05, show_default=True)
@click.option("--margin", default=1.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
def rerank_train(
    data_path: Path,
    store_path: Path,
    emb_path: Path | None,
    epochs: int,
    lr: float,
    margin: float,
    seed: int,
    out_path: Path,
) -> None:
    """Train the reranker from (question, positive, negative) records."""
    records = load_training_file(data_path)
    store = load_store(store_path)
    embeddings = load_embeddings(emb_path) if emb_path is not None else None
    dataset = build_training_set(records, store, embeddings=embeddings)
    config = RerankTrainConfig(epochs=epochs, learning_rate=lr, margin=margin, seed=seed)
    losses: list[float] = []
    params = train_reranker(dataset, config, on_epoch=lambda _, loss: losses.append(loss))
    save_siamese(params, out_path)
    click.echo(
        f"trained reranker on {len(dataset)} triplets: "
        f"loss {losses[0]:.4f} -> {losses[-1]:.4f}"
    )


# -- linking ------------------------------------------------------------------


@cli.command("link")
@click.option("--resources", "resource_dir", type=click.Path(path_type=Path), required=True)
@click.option("--question", required=True)
@click.option("--model", default="lexicon", show_default=True)
@click.option(
    "--embedding",
    type=click.Choice([k.value for k in EmbeddingKind]),
    default=None,
)
@click.option(
    "--mode",
    type=click.Choice([m.value for m in LinkMode]),
    default=LinkMode.CONDITIONAL.value,
    show_default=True,
)
@click.option("--k", default=None, type=int)
@click.option("--duplicate-rule", type=click.Choice(["top", "any"]), default="top", show_default=True)
def link_cmd(
    resource_dir: Path,
    question: str,
    model: str,
    embedding: str | None,
    mode: str,
    k: int | None,
    duplicate_rule: str,
) -> None:
    """Link one question and print the result as JSON."""
    resources = load_resources(resource_dir, duplicate_rule=duplicate_rule)
    request = LinkRequest(
        question=question,
        span_model=model,
        mode=LinkMode(mode),
        embedding=EmbeddingKind(embedding) if embedding else None,
        k=k,
    )
    result = link(resources, request)
    click.echo(json.dumps(link_result_json(result), indent=2))


# -- evaluation ---------------------------------------------------------------


@cli.command("eval")
@click.option("--resources", "resource_dir", type=click.Path(path_type=Path), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(path_type=Path), required=True)
@click.option("--detector", "detectors", multiple=True, help="Restrict to named detectors.")
@click.option(
    "--modes",
    default="all",
    show_default=True,
    help="'all' for the full grid, or one mode name.",
)
@click.option("--k", default=None, type=int)
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None)
@click.option("--id-field", default="id", show_default=True)
@click.option("--question-field", default="question", show_default=True)
@click.option("--entities-field", default="entities", show_default=True)
def eval_cmd(
    resource_dir: Path,
    dataset_path: Path,
    detectors: tuple[str, ...],
    modes: str,
    k: int | None,
    out_path: Path | None,
    id_field: str,
    question_field: str,
    entities_field: str,
) -> None:
    """Score detector x mode x embedding configurations on a dataset."""
    resources = load_resources(resource_dir)
    fields = FieldMap(qid=id_field, question=question_field, entities=entities_field)
    items = load_dataset(dataset_path, fields)
    names = list(detectors) if detectors else None
    if modes == "all":
        rows = run_grid(resources, items, detectors=names, k=k)
    else:
        try:
            mode = LinkMode(modes)
        except ValueError:
            raise click.UsageError(f"unknown mode {modes!r}") from None
        from .evalharness import evaluate_config

        use = names if names is not None else list(resources.detectors)
        kinds = [kind for kind in EmbeddingKind if kind in resources.embeddings]
        rows = []
        for name in use:
            if mode is LinkMode.LABEL_SORTING:
                rows.append(evaluate_config(resources, items, name, mode, None, k))
            else:
                for kind in kinds:
                    rows.append(evaluate_config(resources, items, name, mode, kind, k))
    click.echo(report_table(rows), nl=False)
    if out_path is not None:
        out_path.write_text(report_csv(rows), encoding="utf-8")
        click.echo(f"wrote {out_path}")


# -- service ------------------------------------------------------------------


@cli.command("serve")
@click.option("--config", "config_path", type=click.Path(path_type=Path), required=True)
def serve_cmd(config_path: Path) -> None:
    """Start the HTTP service from a JSON config file."""
    run_server(load_service_config(config_path))


# -- entry point --------------------------------------------------------------


def run(argv: list[str] | None = None) -> int:
    """Dispatch and map errors to exit codes (0 ok, 1 user, 2 internal)."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except _INTERNAL_ERRORS as exc:
        click.echo(f"error[{exc.code}]: {exc}", err=True)
        return 2
    except LinkerError as exc:
        click.echo(f"error[{exc.code}]: {exc}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"error[io]: {exc}", err=True)
        return 1
    except Exception as exc:  # pragma: no cover - last-resort guard
        click.echo(f"error[internal]: {exc}", err=True)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
