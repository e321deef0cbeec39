"""Command-line interface: corpus preparation, indexing, querying,
evaluation, and the HTTP server.

Commands read and write JSONL files so stages can be chained in shell
pipelines.  QA_CONFIG supplies a default pipeline config path and QA_BIND
a default serve address; explicit flags win over both.
"""

from __future__ import annotations

import json
import sys

import click

from .corpus import (
    ChunkStore,
    chunk_article,
    read_articles,
    read_qa_pairs,
    split_dataset,
    write_chunks,
    write_qa_pairs,
)
from .dense import (
    BaselineEmbeddingProvider,
    EndpointEmbeddingProvider,
    PrecomputedEmbeddingProvider,
    ProviderError,
    build_index,
    load_index,
    provider_for_fingerprint,
    save_index,
)
from .evaluation import FuzzyMatchConfig, fm_at_k, read_run
from .pipeline import PipelineConfig, retrieve
from .reader import answer_documents


def _load_config(path: str | None) -> PipelineConfig:
    return PipelineConfig.load(path) if path else PipelineConfig()


def _provider_from_spec(spec: str, dim: int, timeout: float):
    """Parse baseline | endpoint:<url> | file:<path> into a provider."""
    if spec == "baseline":
        return BaselineEmbeddingProvider(dim=dim)
    kind, sep, rest = spec.partition(":")
    if sep and rest:
        if kind == "endpoint":
            return EndpointEmbeddingProvider(rest, dim=dim, timeout=timeout)
        if kind == "file":
            return PrecomputedEmbeddingProvider(rest)
    raise click.BadParameter(
        f"{spec!r} is not baseline, endpoint:<url>, or file:<path>",
        param_hint="--provider")


@click.group()
def main() -> None:
    """Question answering over a passage corpus."""


@main.group()
def corpus() -> None:
    """Prepare articles and question sets."""


@corpus.command("chunk")
@click.option("--in", "in_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Articles JSONL.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Chunks JSONL to write.")
@click.option("--min", "min_tokens", default=100, show_default=True,
              help="Minimum chunk size in tokens.")
@click.option("--max", "max_tokens", default=200, show_default=True,
              help="Maximum chunk size in tokens.")
def corpus_chunk(in_path: str, out_path: str, min_tokens: int,
                 max_tokens: int) -> None:
    """Split articles into retrieval-sized passage chunks."""
    articles = read_articles(in_path)
    chunks = []
    for article in articles:
        chunks.extend(chunk_article(article, min_tokens, max_tokens))
    write_chunks(chunks, out_path)
    click.echo(f"wrote {len(chunks)} chunks from {len(articles)} articles "
               f"to {out_path}")


@corpus.command("split")
@click.option("--in", "in_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="QA pairs JSONL.")
@click.option("--seed", required=True, type=int,
              help="Shuffle seed; reruns reproduce the same split.")
@click.option("--out-dir", required=True,
              type=click.Path(file_okay=False),
              help="Directory receiving train/dev/test JSONL files.")
def corpus_split(in_path: str, seed: int, out_dir: str) -> None:
    """Shuffle and split QA pairs 70/10/20."""
    import pathlib

    pairs = read_qa_pairs(in_path)
    splits = split_dataset(pairs, seed)
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, subset in (("train", splits.train), ("dev", splits.dev),
                         ("test", splits.test),
                         ("excluded", splits.excluded)):
        write_qa_pairs(subset, out / f"{name}.jsonl")
    click.echo(f"train={len(splits.train)} dev={len(splits.dev)} "
               f"test={len(splits.test)} excluded={len(splits.excluded)}")


@main.group()
def index() -> None:
    """Build and inspect dense indexes."""


@index.command("build")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Chunks JSONL.")
@click.option("--provider", "provider_spec", default="baseline",
              show_default=True,
              help="baseline, endpoint:<url>, or file:<path>.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Index file to write.")
@click.option("--dim", default=256, show_default=True,
              help="Embedding dimension (baseline and endpoint providers).")
@click.option("--timeout", default=10.0, show_default=True,
              help="Endpoint request timeout in seconds.")
def index_build(corpus_path: str, provider_spec: str, out_path: str,
                dim: int, timeout: float) -> None:
    """Embed every chunk and write the index."""
    store = ChunkStore.from_jsonl(corpus_path)
    provider = _provider_from_spec(provider_spec, dim, timeout)
    try:
        built = build_index(store, provider)
    except ProviderError as exc:
        raise click.ClickException(f"embedding failed: {exc}") from exc
    save_index(built, out_path)
    click.echo(f"indexed {len(store)} chunks ({built.fingerprint}) "
               f"to {out_path}")


def _provider_for_index(idx, timeout: float = 10.0):
    try:
        return provider_for_fingerprint(idx.fingerprint, timeout=timeout)
    except ProviderError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command("query")
@click.option("--question", required=True, help="Question text.")
@click.option("--l", "l", default=5, show_default=True,
              help="Documents to return.")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Chunks JSONL.")
@click.option("--index", "index_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Dense index file.")
@click.option("--config", "config_path", envvar="QA_CONFIG",
              type=click.Path(exists=True, dir_okay=False),
              help="Pipeline config JSON (env QA_CONFIG).")
@click.option("--explain", is_flag=True,
              help="Include per-stage ranks and cluster details.")
def query_command(question: str, l: int, corpus_path: str, index_path: str,
                  config_path: str | None, explain: bool) -> None:
    """Answer a question from the corpus; prints JSON to stdout."""
    store = ChunkStore.from_jsonl(corpus_path)
    idx = load_index(index_path)
    provider = _provider_for_index(idx)
    config = _load_config(config_path).with_l(l)
    try:
        result = retrieve(question, idx, store, provider, config)
    except ProviderError as exc:
        raise click.ClickException(f"retrieval failed: {exc}") from exc
    documents = answer_documents(question, result.final, store,
                                 m=config.m, max_span_len=config.max_span_len)
    dense_rank = {e.chunk_id: r for r, e in enumerate(result.dense, start=1)}
    pool_rank = {e.chunk_id: r for r, e in enumerate(result.pool, start=1)}
    payload: dict = {"question": question, "documents": []}
    for doc in documents:
        chunk = store.get(doc.chunk_id)
        entry: dict = {
            "chunk_id": doc.chunk_id,
            "title": chunk.title,
            "confidence": doc.confidence,
            "spans": [{"start": s.start_char, "end": s.end_char,
                       "text": s.text, "confidence": s.confidence}
                      for s in doc.spans],
        }
        if doc.error is not None:
            entry["error"] = doc.error
        if explain:
            entry["dense_rank"] = dense_rank.get(doc.chunk_id)
            entry["bm25_rank"] = pool_rank.get(doc.chunk_id)
            if result.assignment is not None:
                entry["cluster"] = result.assignment.get(doc.chunk_id)
        payload["documents"].append(entry)
    if explain:
        payload["cluster_sizes"] = result.cluster_sizes
        payload["allocation"] = result.allocation
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


@main.group("eval")
def eval_group() -> None:
    """Score retrieval runs against gold answers."""


@eval_group.command("fm")
@click.option("--run", "run_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Run JSONL: question_id plus ranked chunk ids.")
@click.option("--gold", "gold_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Gold QA pairs JSONL.")
@click.option("--chunks", "chunks_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Chunks JSONL the run refers to.")
@click.option("--config", "config_path",
              type=click.Path(exists=True, dir_okay=False),
              help="Fuzzy matching thresholds JSON.")
@click.option("--out", "out_path", type=click.Path(),
              help="Also write the report JSON here.")
def eval_fm(run_path: str, gold_path: str, chunks_path: str,
            config_path: str | None, out_path: str | None) -> None:
    """Report fuzzy-match hit rate at each cutoff."""
    run = read_run(run_path)
    gold = read_qa_pairs(gold_path)
    store = ChunkStore.from_jsonl(chunks_path)
    config = FuzzyMatchConfig.load(config_path) if config_path else None
    report = fm_at_k(run, gold, store, config)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    click.echo(text)


@main.command("serve")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Chunks JSONL.")
@click.option("--index", "index_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Dense index file.")
@click.option("--config", "config_path", envvar="QA_CONFIG",
              type=click.Path(exists=True, dir_okay=False),
              help="Pipeline config JSON (env QA_CONFIG).")
@click.option("--bind", envvar="QA_BIND", default="127.0.0.1:8000",
              show_default=True,
              help="host:port to listen on (env QA_BIND).")
@click.option("--ui", "ui_dir",
              type=click.Path(exists=True, file_okay=False),
              help="Static directory served at the site root.")
def serve(corpus_path: str, index_path: str, config_path: str | None,
          bind: str, ui_dir: str | None) -> None:
    """Run the HTTP API (and optionally the browser UI)."""
    import uvicorn

    from .service import QAEngine, create_app

    host, sep, port_text = bind.rpartition(":")
    if not sep or not port_text.isdigit():
        raise click.BadParameter(f"{bind!r} is not host:port",
                                 param_hint="--bind")
    store = ChunkStore.from_jsonl(corpus_path)
    idx = load_index(index_path)
    provider = _provider_for_index(idx)
    engine = QAEngine(store, idx, provider, _load_config(config_path))
    app = create_app(engine, ui_dir=ui_dir)
    click.echo(f"serving {len(store)} chunks on http://{host}:{port_text}",
               err=True)
    uvicorn.run(app, host=host, port=int(port_text), log_level="warning")


if __name__ == "__main__":
    sys.exit(main())
