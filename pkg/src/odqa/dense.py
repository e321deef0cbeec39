"""Dense retrieval: embedding providers, index persistence, exact search.

The index stores one L2-normalized float32 vector per chunk and search is
an exact inner-product scan, so results are reproducible bit for bit.  A
provider fingerprint is stored with the index; search refuses to mix an
index with a differently-configured encoder.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np
import requests

from .ranking import RankedEntry, RankedList
from .text import default_stopwords, remove_stopwords, tokenize

_MAGIC = b"ODQAIDX\x00"
_VERSION = 1
_MIN_DIM = 16
DEFAULT_DIM = 256


class ProviderError(RuntimeError):
    """An embedding or scoring backend failed."""


class FingerprintMismatchError(RuntimeError):
    """Index was built by a different provider configuration."""


class IndexFormatError(ValueError):
    """The index file is not in the expected binary format."""


class EmbeddingProvider:
    """Common provider surface: batch text embedding plus identity."""

    dimension: int

    @property
    def fingerprint(self) -> str:
        raise NotImplementedError

    def embed_texts(self, texts: list[str]) -> list[np.ndarray]:
        raise NotImplementedError

    def embed_text(self, text: str) -> np.ndarray:
        return self.embed_texts([text])[0]

    def embed_chunks(self, chunks) -> list[np.ndarray]:
        """Embed chunk texts; a failure is re-raised naming the chunk."""
        vectors: list[np.ndarray] = []
        batch_size = getattr(self, "batch_size", 64)
        chunks = list(chunks)
        for start in range(0, len(chunks), batch_size):
            batch = chunks[start:start + batch_size]
            try:
                vectors.extend(self.embed_texts([c.text for c in batch]))
            except ProviderError:
                # Narrow down to the failing chunk for a useful error.
                for c in batch:
                    try:
                        vectors.append(self.embed_texts([c.text])[0])
                    except ProviderError as exc:
                        raise ProviderError(f"chunk {c.chunk_id}: {exc}") from exc
        return vectors

    def ping(self) -> bool:
        return True


def _signed_hash(feature: str) -> tuple[int, float]:
    digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=9).digest()
    bucket = int.from_bytes(digest[:8], "little")
    sign = 1.0 if digest[8] & 1 else -1.0
    return bucket, sign


def baseline_embed(
    text: str, dim: int = DEFAULT_DIM, stopwords: frozenset[str] | None = None
) -> np.ndarray:
    """Hash lowercased unigrams and bigrams (stopwords removed) into dim
    signed buckets and L2-normalize.  Text with no content tokens maps to
    the zero vector."""
    if dim < _MIN_DIM:
        raise ValueError(f"dim must be at least {_MIN_DIM}, got {dim}")
    if stopwords is None:
        stopwords = default_stopwords()
    tokens = remove_stopwords(tokenize(text), stopwords)
    vec = np.zeros(dim, dtype=np.float64)
    for feature in tokens:
        bucket, sign = _signed_hash(feature)
        vec[bucket % dim] += sign
    for first, second in zip(tokens, tokens[1:]):
        bucket, sign = _signed_hash(f"{first}\x1f{second}")
        vec[bucket % dim] += sign
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec.astype(np.float32)


def _stopwords_digest(stopwords: frozenset[str]) -> str:
    joined = "\n".join(sorted(stopwords)).encode("utf-8")
    return hashlib.blake2b(joined, digest_size=4).hexdigest()


class BaselineEmbeddingProvider(EmbeddingProvider):
    """Deterministic feature-hashing encoder; needs no external service."""

    def __init__(self, dim: int = DEFAULT_DIM, stopwords: frozenset[str] | None = None):
        if dim < _MIN_DIM:
            raise ValueError(f"dim must be at least {_MIN_DIM}, got {dim}")
        self.dimension = dim
        self.stopwords = stopwords if stopwords is not None else default_stopwords()

    @property
    def fingerprint(self) -> str:
        return f"baseline:v1:d={self.dimension}:sw={_stopwords_digest(self.stopwords)}"

    def embed_texts(self, texts: list[str]) -> list[np.ndarray]:
        return [baseline_embed(t, self.dimension, self.stopwords) for t in texts]


class EndpointEmbeddingProvider(EmbeddingProvider):
    """Neural encoder behind an HTTP inference endpoint.

    Protocol: POST {base_url}/embed with {"texts": [...]} returns
    {"vectors": [[...], ...]} in the same order.
    """

    def __init__(self, base_url: str, dim: int | None = None,
                 timeout: float = 10.0, batch_size: int = 32):
        self.base_url = base_url.rstrip("/")
        self.dimension = dim
        self.timeout = timeout
        self.batch_size = batch_size

    @property
    def fingerprint(self) -> str:
        return f"endpoint:v1:{self.base_url}:d={self.dimension}"

    def embed_texts(self, texts: list[str]) -> list[np.ndarray]:
        vectors: list[np.ndarray] = []
        for start in range(0, len(texts), self.batch_size):
            batch = texts[start:start + self.batch_size]
            try:
                resp = requests.post(
                    f"{self.base_url}/embed", json={"texts": batch}, timeout=self.timeout
                )
            except requests.RequestException as exc:
                raise ProviderError(f"embedding endpoint unreachable: {exc}") from exc
            if resp.status_code != 200:
                raise ProviderError(f"embedding endpoint returned {resp.status_code}")
            try:
                rows = resp.json()["vectors"]
            except (ValueError, KeyError) as exc:
                raise ProviderError(f"bad endpoint response: {exc}") from exc
            if len(rows) != len(batch):
                raise ProviderError(
                    f"endpoint returned {len(rows)} vectors for {len(batch)} texts"
                )
            for row in rows:
                vec = np.asarray(row, dtype=np.float32)
                if self.dimension is None:
                    self.dimension = int(vec.shape[0])
                if vec.shape != (self.dimension,):
                    raise ProviderError(
                        f"endpoint vector has shape {vec.shape}, expected ({self.dimension},)"
                    )
                vectors.append(vec)
        return vectors

    def ping(self) -> bool:
        try:
            self.embed_texts(["ping"])
            return True
        except ProviderError:
            return False


class PrecomputedEmbeddingProvider(EmbeddingProvider):
    """Vectors preloaded from a JSONL file.

    Records are {"chunk_id": ..., "vector": [...]} and may carry an
    optional "text" key; only exact known keys can be embedded.
    """

    def __init__(self, path):
        self._by_id: dict[str, np.ndarray] = {}
        self._by_text: dict[str, np.ndarray] = {}
        self.dimension = None
        raw = open(path, "rb").read()
        self._digest = hashlib.blake2b(raw, digest_size=8).hexdigest()
        for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                vec = np.asarray(rec["vector"], dtype=np.float32)
            except (ValueError, KeyError) as exc:
                raise ProviderError(f"{path}: line {lineno}: {exc}") from exc
            if self.dimension is None:
                self.dimension = int(vec.shape[0])
            if vec.shape != (self.dimension,):
                raise ProviderError(
                    f"{path}: line {lineno}: vector dimension {vec.shape[0]} "
                    f"differs from {self.dimension}"
                )
            if "chunk_id" in rec:
                self._by_id[str(rec["chunk_id"])] = vec
            if "text" in rec:
                self._by_text[str(rec["text"])] = vec

    @property
    def fingerprint(self) -> str:
        return f"file:v1:{self._digest}:d={self.dimension}"

    def embed_texts(self, texts: list[str]) -> list[np.ndarray]:
        out = []
        for text in texts:
            if text not in self._by_text:
                raise ProviderError("precomputed provider has no vector for this text")
            out.append(self._by_text[text])
        return out

    def embed_chunks(self, chunks) -> list[np.ndarray]:
        out = []
        for c in chunks:
            vec = self._by_id.get(c.chunk_id)
            if vec is None:
                raise ProviderError(f"chunk {c.chunk_id}: no precomputed vector")
            out.append(vec)
        return out


def provider_for_fingerprint(fingerprint: str,
                             timeout: float = 10.0) -> EmbeddingProvider:
    """Reconstruct the provider an index was built with from its stored
    fingerprint.  File-backed providers cannot be rebuilt this way because
    the fingerprint records only a digest of the vector file."""
    if fingerprint.startswith("baseline:v1:d="):
        rest = fingerprint[len("baseline:v1:d="):]
        dim_text, _, _ = rest.partition(":sw=")
        try:
            provider = BaselineEmbeddingProvider(dim=int(dim_text))
        except ValueError as exc:
            raise ProviderError(f"malformed fingerprint {fingerprint!r}") from exc
        if provider.fingerprint != fingerprint:
            raise ProviderError(
                "index was built with a customized stopword list; construct "
                "the matching baseline provider explicitly")
        return provider
    if fingerprint.startswith("endpoint:v1:"):
        rest = fingerprint[len("endpoint:v1:"):]
        url, sep, dim_text = rest.rpartition(":d=")
        try:
            dim = int(dim_text)
        except ValueError:
            sep = ""
        if not sep or not url:
            raise ProviderError(f"malformed fingerprint {fingerprint!r}")
        return EndpointEmbeddingProvider(url, dim=dim, timeout=timeout)
    if fingerprint.startswith("file:v1:"):
        raise ProviderError(
            "index was built from a precomputed vector file; that file must "
            "be supplied explicitly because the fingerprint stores only its "
            "digest")
    raise ProviderError(f"unrecognized index fingerprint {fingerprint!r}")


@dataclass
class DenseIndex:
    chunk_ids: list[str]
    matrix: np.ndarray  # float32, shape (len(chunk_ids), dim)
    fingerprint: str

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return len(self.chunk_ids)


def build_index(chunks, provider: EmbeddingProvider) -> DenseIndex:
    """Embed chunks in order into a dense index.

    Any provider failure aborts the build; the error names the chunk that
    could not be embedded.
    """
    chunks = list(chunks)
    vectors = provider.embed_chunks(chunks)
    dim = provider.dimension
    if vectors:
        matrix = np.vstack([v.astype(np.float32) for v in vectors])
    else:
        matrix = np.zeros((0, dim or 0), dtype=np.float32)
    return DenseIndex(
        chunk_ids=[c.chunk_id for c in chunks],
        matrix=matrix,
        fingerprint=provider.fingerprint,
    )


def dense_search(
    query: str,
    index: DenseIndex,
    provider: EmbeddingProvider,
    n: int,
) -> RankedList:
    """Exact top-n inner-product search, ties broken by chunk id.

    Refuses to run when the provider fingerprint differs from the one the
    index was built with.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if provider.fingerprint != index.fingerprint:
        raise FingerprintMismatchError(
            f"index built with {index.fingerprint!r}, provider is {provider.fingerprint!r}"
        )
    if not index.chunk_ids:
        return []
    qv = provider.embed_text(query).astype(np.float32)
    scores = index.matrix @ qv
    order = sorted(range(len(index.chunk_ids)),
                   key=lambda i: (-float(scores[i]), index.chunk_ids[i]))
    return [
        RankedEntry(chunk_id=index.chunk_ids[i], score=float(scores[i]), source="dense")
        for i in order[:n]
    ]


def save_index(index: DenseIndex, path) -> None:
    """Write the index: magic, version, dim, count, fingerprint, id table,
    then the row-major little-endian float32 matrix."""
    fp = index.fingerprint.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", _VERSION, index.dim, len(index.chunk_ids)))
        fh.write(struct.pack("<I", len(fp)))
        fh.write(fp)
        for cid in index.chunk_ids:
            raw = cid.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
        fh.write(np.ascontiguousarray(index.matrix, dtype="<f4").tobytes())


def load_index(path) -> DenseIndex:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:len(_MAGIC)] != _MAGIC:
        raise IndexFormatError(f"{path}: not a dense index file")
    offset = len(_MAGIC)

    def unpack(fmt):
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(data):
            raise IndexFormatError(f"{path}: truncated index file")
        values = struct.unpack_from(fmt, data, offset)
        offset += size
        return values

    version, dim, count = unpack("<III")
    if version != _VERSION:
        raise IndexFormatError(f"{path}: unsupported index version {version}")
    (fp_len,) = unpack("<I")
    fingerprint = data[offset:offset + fp_len].decode("utf-8")
    offset += fp_len
    chunk_ids = []
    for _ in range(count):
        (id_len,) = unpack("<I")
        chunk_ids.append(data[offset:offset + id_len].decode("utf-8"))
        offset += id_len
    expected = count * dim * 4
    if len(data) - offset != expected:
        raise IndexFormatError(
            f"{path}: matrix payload is {len(data) - offset} bytes, expected {expected}"
        )
    matrix = np.frombuffer(data[offset:], dtype="<f4").reshape(count, dim).copy()
    return DenseIndex(chunk_ids=chunk_ids, matrix=matrix, fingerprint=fingerprint)


__all__ = [
    "DEFAULT_DIM",
    "BaselineEmbeddingProvider",
    "DenseIndex",
    "EmbeddingProvider",
    "EndpointEmbeddingProvider",
    "FingerprintMismatchError",
    "IndexFormatError",
    "PrecomputedEmbeddingProvider",
    "ProviderError",
    "baseline_embed",
    "build_index",
    "dense_search",
    "load_index",
    "save_index",
]
