"""Retrieval pipeline: dense recall, BM25+ re-rank, clustered diversity
selection.

The candidate pool from dense search is re-ranked lexically, clustered on
TF-IDF features, and the final l documents are drawn from clusters in
proportion to cluster size, so near-duplicate top results cannot crowd out
a second topic.  Selected documents keep their BM25+ relative order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .dense import DenseIndex, EmbeddingProvider, dense_search
from .lexical import Bm25Params, TfidfVector, rerank_bm25, tfidf_vectors
from .ranking import RankedEntry, RankedList
from .text import tokenize

MAX_KMEANS_ITERATIONS = 100

ClusterAssignment = dict[str, int]


@dataclass
class PipelineConfig:
    """Stage sizes and scoring parameters for the whole pipeline.

    n: dense candidates fetched; k: pool kept after BM25+ re-rank;
    l: documents surviving diversity selection (must stay below k);
    m: answer spans per document; max_span_len: span length cap in tokens.
    """

    n: int = 100
    k: int = 20
    l: int = 5
    num_clusters: int = 3
    m: int = 3
    max_span_len: int = 50
    seed: int = 0
    bm25: Bm25Params = field(default_factory=Bm25Params)

    def __post_init__(self):
        if self.k > self.n:
            raise ValueError(f"k ({self.k}) cannot exceed n ({self.n})")
        if not 0 < self.l < self.k:
            raise ValueError(f"l ({self.l}) must satisfy 0 < l < k ({self.k})")
        if self.num_clusters < 1:
            raise ValueError("num_clusters must be at least 1")
        if self.m < 1 or self.max_span_len < 1:
            raise ValueError("m and max_span_len must be at least 1")

    def to_dict(self) -> dict:
        return {
            "n": self.n, "k": self.k, "l": self.l,
            "num_clusters": self.num_clusters, "m": self.m,
            "max_span_len": self.max_span_len, "seed": self.seed,
            "bm25": {"k1": self.bm25.k1, "b_len": self.bm25.b_len,
                     "delta": self.bm25.delta},
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        bm25_data = data.pop("bm25", {})
        known = {k: v for k, v in data.items()
                 if k in {"n", "k", "l", "num_clusters", "m", "max_span_len", "seed"}}
        return cls(bm25=Bm25Params(**bm25_data), **known)

    def with_l(self, l: int) -> "PipelineConfig":
        return replace(self, l=l)


@dataclass
class RetrievalResult:
    """Final ranking plus every intermediate stage, for explainability."""

    final: RankedList
    dense: RankedList
    pool: RankedList
    assignment: ClusterAssignment | None = None
    cluster_sizes: list[int] | None = None
    allocation: list[int] | None = None


def _densify(vectors: dict[str, TfidfVector]) -> tuple[list[str], np.ndarray]:
    ids = list(vectors)
    vocab = sorted({term for v in vectors.values() for term in v.weights})
    matrix = np.zeros((len(ids), max(len(vocab), 1)), dtype=np.float64)
    col = {term: j for j, term in enumerate(vocab)}
    for i, cid in enumerate(ids):
        for term, weight in vectors[cid].weights.items():
            matrix[i, col[term]] = weight
    return ids, matrix


def kmeans(
    vectors: dict[str, TfidfVector],
    num_clusters: int,
    seed: int = 0,
) -> ClusterAssignment:
    """Lloyd's k-means with a deterministic farthest-point initialization.

    The first center is the top-ranked document (first key of `vectors`);
    the rest greedily maximize distance to chosen centers, ties taken by
    lowest chunk id.  Assignment ties go to the lowest cluster index;
    empty clusters are repaired by moving in the point farthest from its
    centroid.  The seed parameter is accepted for interface stability but
    the procedure is already fully deterministic.
    """
    del seed
    ids, points = _densify(vectors)
    n = len(ids)
    if n == 0:
        return {}
    if num_clusters >= n:
        return {cid: i for i, cid in enumerate(ids)}
    k = num_clusters

    chosen = [0]
    min_dist = np.linalg.norm(points - points[0], axis=1)
    while len(chosen) < k:
        candidates = [i for i in range(n) if i not in chosen]
        best_d = max(min_dist[i] for i in candidates)
        tied = [i for i in candidates if min_dist[i] == best_d]
        pick = min(tied, key=lambda i: ids[i])
        chosen.append(pick)
        min_dist = np.minimum(min_dist, np.linalg.norm(points - points[pick], axis=1))
    centroids = points[chosen].copy()

    prev: list[int] | None = None
    assign = [0] * n
    for _ in range(MAX_KMEANS_ITERATIONS):
        dists = np.linalg.norm(points[:, None, :] - centroids[None, :, :], axis=2)
        assign = [int(np.argmin(dists[i])) for i in range(n)]

        members: dict[int, list[int]] = {c: [] for c in range(k)}
        for i, c in enumerate(assign):
            members[c].append(i)
        for empty in range(k):
            if members[empty]:
                continue
            donors = [i for c, pts in members.items() if len(pts) > 1 for i in pts]
            far = max(dists[i, assign[i]] for i in donors)
            mover = min((i for i in donors if dists[i, assign[i]] == far),
                        key=lambda i: ids[i])
            members[assign[mover]].remove(mover)
            assign[mover] = empty
            members[empty].append(mover)

        if assign == prev:
            break
        prev = list(assign)
        for c in range(k):
            centroids[c] = points[members[c]].mean(axis=0)
    return {cid: assign[i] for i, cid in enumerate(ids)}


def proportional_allocation(
    cluster_sizes: list[int],
    l: int,
    best_ranks: list[int] | None = None,
) -> list[int]:
    """Largest-remainder allocation of l slots over clusters.

    Quotas are size_i/k * l with k the pool size; floors are assigned
    first and leftover slots go to the largest fractional remainders.
    Remainder ties favor the cluster whose best member ranks higher
    (smaller best_ranks value), then the lower cluster index.  No cluster
    ever receives more than its size.
    """
    k = sum(cluster_sizes)
    count = len(cluster_sizes)
    if k == 0 or count == 0:
        return [0] * count
    if l >= k:
        return list(cluster_sizes)
    quotas = [Fraction(size * l, k) for size in cluster_sizes]
    alloc = [int(q) for q in quotas]
    remainders = [q - a for q, a in zip(quotas, alloc)]
    ranks = best_ranks if best_ranks is not None else list(range(count))
    order = sorted(range(count), key=lambda i: (-remainders[i], ranks[i], i))
    missing = l - sum(alloc)
    for i in order[:missing]:
        alloc[i] += 1

    # Defensive cap handling: under the l < k precondition the largest
    # remainder method cannot exceed a cluster's size, but redistribute
    # anyway so malformed inputs still return a feasible allocation.
    excess = 0
    for i in range(count):
        if alloc[i] > cluster_sizes[i]:
            excess += alloc[i] - cluster_sizes[i]
            alloc[i] = cluster_sizes[i]
    while excess > 0:
        open_clusters = [i for i in order if alloc[i] < cluster_sizes[i]]
        if not open_clusters:
            break
        for i in open_clusters:
            if excess == 0:
                break
            alloc[i] += 1
            excess -= 1
    return alloc


def diversity_select(
    pool: RankedList,
    assignment: ClusterAssignment,
    allocation: list[int],
) -> RankedList:
    """Take each cluster's allocation_i highest-ranked documents and return
    them in the pool's original order: membership changes, order never."""
    taken: set[str] = set()
    counts = [0] * len(allocation)
    for entry in pool:
        cluster = assignment[entry.chunk_id]
        if counts[cluster] < allocation[cluster]:
            counts[cluster] += 1
            taken.add(entry.chunk_id)
    return [entry for entry in pool if entry.chunk_id in taken]


def retrieve(
    question: str,
    index: DenseIndex,
    chunks,
    provider: EmbeddingProvider,
    config: PipelineConfig | None = None,
    stopwords: frozenset[str] | None = None,
) -> RetrievalResult:
    """Run the full retrieval pipeline for a question.

    dense top-n -> BM25+ re-rank -> keep k -> TF-IDF k-means ->
    proportional allocation -> diversity selection of l documents.
    Pools no larger than l skip the clustering stages.
    """
    if config is None:
        config = PipelineConfig()
    dense = dense_search(question, index, provider, config.n)
    reranked = rerank_bm25(tokenize(question), dense, chunks, config.bm25, stopwords)
    pool = reranked[:config.k]
    l_eff = min(config.l, len(pool))
    if len(pool) <= l_eff or not pool:
        return RetrievalResult(final=list(pool), dense=dense, pool=pool)

    vectors = tfidf_vectors(pool, chunks, stopwords)
    ordered = {entry.chunk_id: vectors[entry.chunk_id] for entry in pool}
    n_clusters = min(config.num_clusters, len(pool))
    assignment = kmeans(ordered, n_clusters, config.seed)

    used = max(assignment.values()) + 1
    sizes = [0] * used
    best_ranks = [len(pool)] * used
    for rank, entry in enumerate(pool):
        cluster = assignment[entry.chunk_id]
        sizes[cluster] += 1
        best_ranks[cluster] = min(best_ranks[cluster], rank)
    allocation = proportional_allocation(sizes, l_eff, best_ranks)
    final = diversity_select(pool, assignment, allocation)
    return RetrievalResult(
        final=final,
        dense=dense,
        pool=pool,
        assignment=assignment,
        cluster_sizes=sizes,
        allocation=allocation,
    )


__all__ = [
    "ClusterAssignment",
    "MAX_KMEANS_ITERATIONS",
    "PipelineConfig",
    "RetrievalResult",
    "diversity_select",
    "kmeans",
    "proportional_allocation",
    "retrieve",
]
