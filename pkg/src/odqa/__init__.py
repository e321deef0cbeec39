"""Question answering over emerging-topic document corpora.

The pipeline retrieves dense candidates, re-ranks them lexically, samples
across topical clusters for diversity, and extracts answer spans with
character offsets.  Evaluation uses fuzzy matching tuned for answers whose
wording never appears verbatim in the corpus.
"""

from .corpus import (
    Article,
    ChunkStore,
    CorpusFormatError,
    DatasetSplits,
    PassageChunk,
    QAPair,
    build_retrieval_samples,
    chunk_article,
    read_articles,
    read_chunks,
    read_qa_pairs,
    split_dataset,
    write_chunks,
    write_qa_pairs,
)
from .dense import (
    BaselineEmbeddingProvider,
    DenseIndex,
    EmbeddingProvider,
    EndpointEmbeddingProvider,
    FingerprintMismatchError,
    PrecomputedEmbeddingProvider,
    ProviderError,
    baseline_embed,
    build_index,
    dense_search,
    load_index,
    provider_for_fingerprint,
    save_index,
)
from .evaluation import (
    FmReport,
    FuzzyMatchConfig,
    FuzzyMatcher,
    best_span_f1,
    exact_match,
    fm_at_k,
    fuzzy_match,
    normalize_answer,
    read_run,
    token_f1,
)
from .lexical import Bm25Params, bm25_plus_score, rerank_bm25, tfidf_vectors
from .pipeline import (
    PipelineConfig,
    RetrievalResult,
    diversity_select,
    kmeans,
    proportional_allocation,
    retrieve,
)
from .ranking import RankedEntry, RankedList
from .reader import (
    AnswerSpan,
    AnsweredDocument,
    BaselineSpanScorer,
    EndpointSpanScorer,
    SpanScorer,
    answer_documents,
    select_spans,
)
from .service import QAEngine, create_app
from .text import split_sentences, tokenize

__all__ = [
    "AnswerSpan",
    "AnsweredDocument",
    "Article",
    "BaselineEmbeddingProvider",
    "BaselineSpanScorer",
    "Bm25Params",
    "ChunkStore",
    "CorpusFormatError",
    "DatasetSplits",
    "DenseIndex",
    "EmbeddingProvider",
    "EndpointEmbeddingProvider",
    "EndpointSpanScorer",
    "FingerprintMismatchError",
    "FmReport",
    "FuzzyMatchConfig",
    "FuzzyMatcher",
    "PassageChunk",
    "PipelineConfig",
    "PrecomputedEmbeddingProvider",
    "ProviderError",
    "QAEngine",
    "QAPair",
    "RankedEntry",
    "RankedList",
    "RetrievalResult",
    "SpanScorer",
    "answer_documents",
    "baseline_embed",
    "best_span_f1",
    "bm25_plus_score",
    "build_index",
    "build_retrieval_samples",
    "chunk_article",
    "create_app",
    "dense_search",
    "diversity_select",
    "exact_match",
    "fm_at_k",
    "fuzzy_match",
    "kmeans",
    "load_index",
    "normalize_answer",
    "proportional_allocation",
    "provider_for_fingerprint",
    "read_articles",
    "read_chunks",
    "read_qa_pairs",
    "read_run",
    "rerank_bm25",
    "retrieve",
    "save_index",
    "select_spans",
    "split_dataset",
    "split_sentences",
    "tfidf_vectors",
    "token_f1",
    "tokenize",
    "write_chunks",
    "write_qa_pairs",
]
