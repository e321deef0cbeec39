"""Lexical scoring: BM25+ re-ranking and pool-local TF-IDF vectors.

Both operate on a candidate pool rather than the whole corpus: collection
statistics (document frequency, average length) are computed over the pool
so that scores adapt to whatever the dense retriever surfaced.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .ranking import RankedEntry, RankedList
from .text import default_stopwords, remove_stopwords, tokenize


@dataclass
class Bm25Params:
    """BM25+ hyperparameters.

    delta is the lower-bound bonus: any term occurrence contributes at
    least idf * delta no matter how long the document is.
    """

    k1: float = 1.5
    b_len: float = 0.75
    delta: float = 1.0


@dataclass
class TermStats:
    """Collection statistics over a document pool (after stopword removal)."""

    doc_count: int
    doc_freq: dict[str, int]
    avg_doc_len: float
    doc_lens: dict[str, int] = field(default_factory=dict)


@dataclass
class TfidfVector:
    """L2-normalized sparse TF-IDF weights for one chunk."""

    chunk_id: str
    weights: dict[str, float]

    @property
    def is_empty(self) -> bool:
        return not self.weights


def build_term_stats(docs: dict[str, list[str]]) -> TermStats:
    """Collection statistics for a pool given per-doc token lists."""
    doc_freq: Counter[str] = Counter()
    doc_lens: dict[str, int] = {}
    for cid, tokens in docs.items():
        doc_freq.update(set(tokens))
        doc_lens[cid] = len(tokens)
    n = len(docs)
    avg = sum(doc_lens.values()) / n if n else 0.0
    return TermStats(doc_count=n, doc_freq=dict(doc_freq), avg_doc_len=avg, doc_lens=doc_lens)


def bm25_plus_score(
    query_tokens: list[str],
    doc_tokens: list[str],
    stats: TermStats,
    params: Bm25Params,
) -> float:
    """BM25+ score of a document for a query.

    Sum over distinct query terms with tf > 0 of
    idf * ((k1+1)*tf / (k1*((1-b) + b*|D|/avgdl) + tf) + delta),
    with idf = ln((N+1)/df).  Terms missing from the pool vocabulary or
    from the document contribute nothing.
    """
    tf = Counter(doc_tokens)
    doc_len = len(doc_tokens)
    score = 0.0
    for term in dict.fromkeys(query_tokens):
        freq = tf.get(term, 0)
        df = stats.doc_freq.get(term, 0)
        if freq == 0 or df == 0:
            continue
        idf = math.log((stats.doc_count + 1) / df)
        norm = params.k1 * ((1 - params.b_len) + params.b_len * doc_len / stats.avg_doc_len)
        score += idf * ((params.k1 + 1) * freq / (norm + freq) + params.delta)
    return score


def rerank_bm25(
    query_tokens: list[str],
    pool: RankedList,
    chunks,
    params: Bm25Params | None = None,
    stopwords: frozenset[str] | None = None,
) -> RankedList:
    """Re-rank a dense candidate pool by BM25+ over pool-local statistics.

    Stopwords are stripped from both the documents and the query.  Ties
    keep the incoming (dense) order, so an all-zero scoring leaves the
    pool untouched.
    """
    if params is None:
        params = Bm25Params()
    if stopwords is None:
        stopwords = default_stopwords()
    doc_tokens = {
        entry.chunk_id: remove_stopwords(tokenize(chunks.get(entry.chunk_id).text), stopwords)
        for entry in pool
    }
    stats = build_term_stats(doc_tokens)
    query = remove_stopwords(list(query_tokens), stopwords)
    scored = [
        (bm25_plus_score(query, doc_tokens[entry.chunk_id], stats, params), pos, entry)
        for pos, entry in enumerate(pool)
    ]
    scored.sort(key=lambda item: (-item[0], item[1]))
    return [
        RankedEntry(chunk_id=entry.chunk_id, score=score, source="bm25+")
        for score, _, entry in scored
    ]


def tfidf_vectors(
    pool,
    chunks,
    stopwords: frozenset[str] | None = None,
) -> dict[str, TfidfVector]:
    """L2-normalized TF-IDF vectors for a pool of chunks.

    tf is the raw in-chunk count; idf = ln((N+1)/df) computed over the pool
    only.  A chunk with no content tokens gets an empty (zero) vector,
    observable through TfidfVector.is_empty.
    """
    if stopwords is None:
        stopwords = default_stopwords()
    ids = [getattr(entry, "chunk_id", entry) for entry in pool]
    doc_tokens = {
        cid: remove_stopwords(tokenize(chunks.get(cid).text), stopwords) for cid in ids
    }
    stats = build_term_stats(doc_tokens)
    vectors: dict[str, TfidfVector] = {}
    for cid in ids:
        tf = Counter(doc_tokens[cid])
        weights = {
            term: freq * math.log((stats.doc_count + 1) / stats.doc_freq[term])
            for term, freq in tf.items()
        }
        norm = math.sqrt(sum(w * w for w in weights.values()))
        if norm > 0:
            weights = {t: w / norm for t, w in weights.items()}
        else:
            weights = {}
        vectors[cid] = TfidfVector(chunk_id=cid, weights=weights)
    return vectors


__all__ = [
    "Bm25Params",
    "TermStats",
    "TfidfVector",
    "bm25_plus_score",
    "build_term_stats",
    "rerank_bm25",
    "tfidf_vectors",
]
