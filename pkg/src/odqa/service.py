"""HTTP service exposing the full pipeline with demo-style filters.

Requests run retrieval, an optional publication-date filter, and the span
reader, then return display-ready documents with character-offset answer
highlights.  Responses are deterministic byte for byte on an unchanged
index; per-stage timings are therefore opt-in via include_timings.
"""

from __future__ import annotations

import datetime
import time

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, field_validator, model_validator

from .corpus import ChunkStore
from .dense import DenseIndex, EmbeddingProvider, ProviderError
from .pipeline import PipelineConfig, retrieve
from .ranking import RankedList
from .reader import BaselineSpanScorer, SpanScorer, answer_documents

MIN_TOP_K = 1
MAX_TOP_K = 5


class EngineUnavailableError(RuntimeError):
    """The engine refuses queries, typically over a fingerprint mismatch."""


class StageFailureError(RuntimeError):
    """A pipeline stage failed; carries the stage name for the response."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage} stage failed: {message}")
        self.stage = stage


class QueryRequest(BaseModel):
    question: str
    top_k: int = Field(default=MAX_TOP_K, ge=MIN_TOP_K, le=MAX_TOP_K)
    date_from: datetime.date | None = None
    date_to: datetime.date | None = None
    include_timings: bool = False

    @field_validator("question")
    @classmethod
    def _question_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("question must not be empty")
        return value

    @model_validator(mode="after")
    def _dates_ordered(self) -> "QueryRequest":
        if (self.date_from is not None and self.date_to is not None
                and self.date_from > self.date_to):
            raise ValueError("date_from must not be after date_to")
        return self


class Highlight(BaseModel):
    start: int
    end: int
    text: str
    confidence: float


class RetrievalInfo(BaseModel):
    dense_rank: int | None = None
    dense_score: float | None = None
    bm25_rank: int | None = None
    bm25_score: float | None = None
    cluster: int | None = None


class DocumentResult(BaseModel):
    chunk_id: str
    title: str
    journal: str
    publish_date: str | None = None
    snippet: str
    highlights: list[Highlight]
    doc_confidence: float | None = None
    retrieval: RetrievalInfo
    error: str | None = None


class QueryResponse(BaseModel):
    documents: list[DocumentResult]
    date_filter_relaxed: bool
    stage_timings_ms: dict[str, float] | None = None


class HealthResponse(BaseModel):
    status: str
    corpus_size: int
    index_fingerprint: str
    provider_fingerprint: str
    provider_reachable: bool
    reader_reachable: bool
    notes: list[str]
    config: dict


class QAEngine:
    """Shared read-only pipeline state behind the HTTP endpoints."""

    def __init__(self, chunks: ChunkStore, index: DenseIndex,
                 provider: EmbeddingProvider,
                 config: PipelineConfig | None = None,
                 span_scorer: SpanScorer | None = None):
        self.chunks = chunks
        self.index = index
        self.provider = provider
        self.config = config if config is not None else PipelineConfig()
        self.span_scorer = span_scorer if span_scorer is not None \
            else BaselineSpanScorer()
        if self.config.k <= MAX_TOP_K:
            raise ValueError(
                f"config.k must exceed {MAX_TOP_K} so every allowed top_k "
                "leaves a pool to diversify")
        self.startup_error: str | None = None
        if index.fingerprint != provider.fingerprint:
            self.startup_error = (
                f"index fingerprint {index.fingerprint!r} does not match "
                f"provider fingerprint {provider.fingerprint!r}; rebuild the "
                "index or configure the provider it was built with")

    def _filter_dates(self, entries: RankedList,
                      date_from: datetime.date | None,
                      date_to: datetime.date | None) -> tuple[RankedList, bool]:
        """Keep entries inside the range; undated chunks fail an active
        filter.  An empty result relaxes the filter instead."""
        if date_from is None and date_to is None:
            return entries, False
        kept = []
        for entry in entries:
            published = self.chunks.get(entry.chunk_id).publish_date
            if published is None:
                continue
            if date_from is not None and published < date_from:
                continue
            if date_to is not None and published > date_to:
                continue
            kept.append(entry)
        if kept:
            return kept, False
        return entries, True

    def query(self, question: str, top_k: int,
              date_from: datetime.date | None = None,
              date_to: datetime.date | None = None):
        """Returns (answered documents, retrieval trace, relaxed flag,
        stage timings in milliseconds)."""
        if self.startup_error is not None:
            raise EngineUnavailableError(self.startup_error)
        timings: dict[str, float] = {}
        started = time.perf_counter()
        config = self.config.with_l(top_k)
        try:
            result = retrieve(question, self.index, self.chunks,
                              self.provider, config)
        except ProviderError as exc:
            raise StageFailureError("retrieval", str(exc)) from exc
        timings["retrieval_ms"] = (time.perf_counter() - started) * 1000.0
        kept, relaxed = self._filter_dates(result.final, date_from, date_to)
        reader_started = time.perf_counter()
        documents = answer_documents(question, kept, self.chunks,
                                     self.span_scorer, m=config.m,
                                     max_span_len=config.max_span_len)
        if documents and all(doc.error for doc in documents) \
                and not isinstance(self.span_scorer, BaselineSpanScorer):
            # Total reader outage: the local scorer stands in.
            documents = answer_documents(question, kept, self.chunks,
                                         BaselineSpanScorer(), m=config.m,
                                         max_span_len=config.max_span_len)
        timings["reader_ms"] = (time.perf_counter() - reader_started) * 1000.0
        timings["total_ms"] = (time.perf_counter() - started) * 1000.0
        return documents[:top_k], result, relaxed, timings

    def health(self) -> HealthResponse:
        notes: list[str] = []
        status = "ok"
        if self.startup_error is not None:
            status = "unavailable"
            notes.append(self.startup_error)
        try:
            provider_ok = bool(self.provider.ping())
        except Exception:
            provider_ok = False
        try:
            reader_ok = bool(self.span_scorer.ping())
        except Exception:
            reader_ok = False
        if not provider_ok:
            if status == "ok":
                status = "degraded"
            notes.append("embedding provider unreachable; queries will fail "
                         "at the retrieval stage until it returns")
        if not reader_ok:
            if status == "ok":
                status = "degraded"
            notes.append("span scorer unreachable; the baseline scorer "
                         "answers in its place")
        return HealthResponse(
            status=status,
            corpus_size=len(self.chunks),
            index_fingerprint=self.index.fingerprint,
            provider_fingerprint=self.provider.fingerprint,
            provider_reachable=provider_ok,
            reader_reachable=reader_ok,
            notes=notes,
            config=self.config.to_dict(),
        )


def _document_results(engine: QAEngine, documents, result) -> list[DocumentResult]:
    dense_by_id = {e.chunk_id: (rank, e.score)
                   for rank, e in enumerate(result.dense, start=1)}
    pool_by_id = {e.chunk_id: (rank, e.score)
                  for rank, e in enumerate(result.pool, start=1)}
    assignment = result.assignment or {}
    out = []
    for doc in documents:
        chunk = engine.chunks.get(doc.chunk_id)
        dense_rank, dense_score = dense_by_id.get(doc.chunk_id, (None, None))
        bm25_rank, bm25_score = pool_by_id.get(doc.chunk_id, (None, None))
        highlights = [Highlight(start=span.start_char, end=span.end_char,
                                text=span.text, confidence=span.confidence)
                      for span in doc.spans]
        out.append(DocumentResult(
            chunk_id=doc.chunk_id,
            title=chunk.title,
            journal=chunk.journal,
            publish_date=(chunk.publish_date.isoformat()
                          if chunk.publish_date is not None else None),
            snippet=chunk.text,
            highlights=highlights,
            doc_confidence=doc.confidence,
            retrieval=RetrievalInfo(dense_rank=dense_rank,
                                    dense_score=dense_score,
                                    bm25_rank=bm25_rank,
                                    bm25_score=bm25_score,
                                    cluster=assignment.get(doc.chunk_id)),
            error=doc.error,
        ))
    return out


def create_app(engine: QAEngine, ui_dir=None) -> FastAPI:
    """Build the FastAPI application; ui_dir optionally serves a static
    browser client from the site root."""
    app = FastAPI(title="odqa service")

    @app.post("/api/query", response_model=QueryResponse,
              response_model_exclude_none=True)
    def query(request: QueryRequest) -> QueryResponse:
        try:
            documents, result, relaxed, timings = engine.query(
                request.question, request.top_k,
                request.date_from, request.date_to)
        except EngineUnavailableError as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        except StageFailureError as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        return QueryResponse(
            documents=_document_results(engine, documents, result),
            date_filter_relaxed=relaxed,
            stage_timings_ms=timings if request.include_timings else None,
        )

    @app.get("/api/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return engine.health()

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
