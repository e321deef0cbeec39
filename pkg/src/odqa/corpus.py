"""Corpus model: articles, passage chunks, QA pairs, and dataset splits.

Articles are chunked into passages of bounded token length so that retrieval
and reading operate on units small enough for scoring but large enough to
carry context.  Chunk boundaries never lose text: every chunk is a contiguous
span of the article body and consecutive chunks are separated by whitespace
only.
"""

from __future__ import annotations

import dataclasses
import datetime
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .text import sentence_spans, tokenize, tokenize_with_offsets

DEFAULT_MIN_TOKENS = 100
DEFAULT_MAX_TOKENS = 200

# Questions that point at "this study" only make sense next to the source
# article, so they are excluded from open-domain test sets.
DEFAULT_DEICTIC_PATTERNS = (
    r"this\s+study",
    r"this\s+paper",
    r"this\s+article",
    r"this\s+review",
)

_PARAGRAPH_SEPARATOR = "\n\n"


class CorpusFormatError(ValueError):
    """A corpus file record could not be parsed."""


@dataclass
class Article:
    article_id: str
    title: str
    journal: str
    publish_date: datetime.date | None
    paragraphs: list[str]

    @property
    def body(self) -> str:
        return _PARAGRAPH_SEPARATOR.join(self.paragraphs)


@dataclass
class PassageChunk:
    chunk_id: str
    article_id: str
    text: str
    token_count: int
    char_start: int
    char_end: int
    title: str = ""
    journal: str = ""
    publish_date: datetime.date | None = None


@dataclass
class QAPair:
    question_id: str
    question: str
    answer: str
    article_id: str
    split: str | None = None


@dataclass
class RetrievalSample:
    question_id: str
    question: str
    positive_chunk_id: str
    negative_chunk_ids: list[str]


@dataclass
class SampleBuildResult:
    samples: list[RetrievalSample]
    dropped: int


@dataclass
class DatasetSplits:
    train: list[QAPair]
    dev: list[QAPair]
    test: list[QAPair]
    excluded: list[QAPair] = field(default_factory=list)


class ChunkStore:
    """Ordered chunk collection with id and article lookups."""

    def __init__(self, chunks: Iterable[PassageChunk] = ()):
        self._chunks: dict[str, PassageChunk] = {}
        self._by_article: dict[str, list[str]] = {}
        for chunk in chunks:
            self.add(chunk)

    def add(self, chunk: PassageChunk) -> None:
        if chunk.chunk_id in self._chunks:
            raise CorpusFormatError(f"duplicate chunk id {chunk.chunk_id!r}")
        self._chunks[chunk.chunk_id] = chunk
        self._by_article.setdefault(chunk.article_id, []).append(chunk.chunk_id)

    def get(self, chunk_id: str) -> PassageChunk:
        return self._chunks[chunk_id]

    def ids(self) -> list[str]:
        return list(self._chunks)

    def for_article(self, article_id: str) -> list[PassageChunk]:
        return [self._chunks[cid] for cid in self._by_article.get(article_id, [])]

    def __contains__(self, chunk_id: str) -> bool:
        return chunk_id in self._chunks

    def __iter__(self) -> Iterator[PassageChunk]:
        return iter(self._chunks.values())

    def __len__(self) -> int:
        return len(self._chunks)

    @classmethod
    def from_jsonl(cls, path) -> "ChunkStore":
        return cls(read_chunks(path))

    def to_jsonl(self, path) -> None:
        write_chunks(list(self), path)


@dataclass
class _Unit:
    """A contiguous span of the article body, at most max_tokens long."""

    start: int
    end: int
    tokens: list[tuple[int, int]]  # absolute (start, end) per token

    @property
    def token_count(self) -> int:
        return len(self.tokens)


def _unit_for(body: str, start: int, end: int) -> _Unit:
    toks = [(start + s, start + e) for _, s, e in tokenize_with_offsets(body[start:end])]
    return _Unit(start, end, toks)


def _slice_unit(unit: _Unit, cut_tokens: int, body: str) -> tuple[_Unit, _Unit]:
    """Split a unit after its first cut_tokens tokens.

    Punctuation between the parts stays attached (trailing to the left,
    leading to the right) so no non-whitespace text falls between chunks.
    """
    left_toks = unit.tokens[:cut_tokens]
    right_toks = unit.tokens[cut_tokens:]
    left_end = left_toks[-1][1]
    right_start = right_toks[0][0]
    while left_end < right_start and not body[left_end].isspace():
        left_end += 1
    while right_start > left_end and not body[right_start - 1].isspace():
        right_start -= 1
    return (
        _Unit(unit.start, left_end, left_toks),
        _Unit(right_start, unit.end, right_toks),
    )


def _sentence_cut_counts(body: str, unit: _Unit) -> list[int]:
    """Token counts at sentence boundaries inside the unit (exclusive of 0 and total)."""
    spans = sentence_spans(body[unit.start:unit.end])
    counts = []
    for _, rel_end in spans[:-1]:
        edge = unit.start + rel_end
        n = sum(1 for ts, _ in unit.tokens if ts < edge)
        if 0 < n < unit.token_count:
            counts.append(n)
    return sorted(set(counts))


def _split_near_equal(body: str, unit: _Unit, max_tokens: int) -> list[_Unit]:
    """Recursively halve an oversized unit at the sentence boundary nearest
    its token midpoint, falling back to a word boundary when a single
    sentence is itself too long."""
    if unit.token_count <= max_tokens:
        return [unit]
    target = unit.token_count / 2
    cuts = _sentence_cut_counts(body, unit)
    if cuts:
        cut = min(cuts, key=lambda c: (abs(c - target), c))
    else:
        cut = max(1, unit.token_count // 2)
    left, right = _slice_unit(unit, cut, body)
    return _split_near_equal(body, left, max_tokens) + _split_near_equal(body, right, max_tokens)


def _take_prefix(body: str, unit: _Unit, lo: int, hi: int) -> tuple[_Unit, _Unit]:
    """Cut a prefix of lo..hi tokens off a unit, preferring the first
    sentence boundary that reaches lo; otherwise cut at exactly lo tokens."""
    cut = None
    for c in _sentence_cut_counts(body, unit):
        if c >= lo:
            cut = c if c <= hi else None
            break
    if cut is None:
        cut = lo
    return _slice_unit(unit, cut, body)


def chunk_article(
    article: Article,
    min_tokens: int = DEFAULT_MIN_TOKENS,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> list[PassageChunk]:
    """Split an article into passage chunks of min_tokens..max_tokens.

    Consecutive paragraphs are merged greedily until a chunk reaches
    min_tokens; oversized paragraphs are split at sentence boundaries into
    near-equal parts.  When merging would overflow max_tokens, the chunk
    borrows a sentence prefix from the next block instead of shipping short.
    Only the article's final chunk may fall below min_tokens.
    """
    if min_tokens <= 0 or max_tokens <= min_tokens:
        raise ValueError("require 0 < min_tokens < max_tokens")
    body = article.body
    units: list[_Unit] = []
    pos = 0
    for para in article.paragraphs:
        start, end = pos, pos + len(para)
        pos = end + len(_PARAGRAPH_SEPARATOR)
        if not para.strip():
            continue
        unit = _unit_for(body, start, end)
        if unit.token_count > max_tokens:
            units.extend(_split_near_equal(body, unit, max_tokens))
        else:
            units.append(unit)

    chunks: list[PassageChunk] = []
    acc: list[_Unit] = []
    acc_tokens = 0

    def flush() -> None:
        nonlocal acc, acc_tokens
        start, end = acc[0].start, acc[-1].end
        chunks.append(
            PassageChunk(
                chunk_id=f"{article.article_id}::{len(chunks):04d}",
                article_id=article.article_id,
                text=body[start:end],
                token_count=acc_tokens,
                char_start=start,
                char_end=end,
                title=article.title,
                journal=article.journal,
                publish_date=article.publish_date,
            )
        )
        acc = []
        acc_tokens = 0

    for unit in units:
        pending: _Unit | None = unit
        while pending is not None:
            if acc_tokens + pending.token_count <= max_tokens:
                acc.append(pending)
                acc_tokens += pending.token_count
                pending = None
                if acc_tokens >= min_tokens:
                    flush()
            else:
                prefix, rest = _take_prefix(
                    body, pending, min_tokens - acc_tokens, max_tokens - acc_tokens
                )
                acc.append(prefix)
                acc_tokens += prefix.token_count
                flush()
                pending = rest
    if acc:
        flush()
    return chunks


def _normalize_for_match(text: str) -> str:
    return " ".join(text.split()).lower()


def build_retrieval_samples(
    qa_pairs: Iterable[QAPair], chunks: ChunkStore
) -> SampleBuildResult:
    """Mine weak-supervision samples: positives are same-article chunks that
    contain the answer (case- and whitespace-insensitive substring match),
    negatives are the article's remaining chunks.  Pairs without any
    positive are dropped and counted."""
    samples: list[RetrievalSample] = []
    dropped = 0
    for qa in qa_pairs:
        article_chunks = chunks.for_article(qa.article_id)
        needle = _normalize_for_match(qa.answer)
        positives = [
            c.chunk_id for c in article_chunks
            if needle and needle in _normalize_for_match(c.text)
        ]
        if not positives:
            dropped += 1
            continue
        positive_set = set(positives)
        negatives = [c.chunk_id for c in article_chunks if c.chunk_id not in positive_set]
        for pid in positives:
            samples.append(
                RetrievalSample(
                    question_id=qa.question_id,
                    question=qa.question,
                    positive_chunk_id=pid,
                    negative_chunk_ids=negatives,
                )
            )
    return SampleBuildResult(samples=samples, dropped=dropped)


def split_dataset(
    qa_pairs: list[QAPair],
    seed: int,
    deictic_patterns: Iterable[str] | None = None,
) -> DatasetSplits:
    """Shuffle deterministically by seed and split 70/10/20.

    Boundaries fall at floor(0.7*N) and floor(0.8*N) of the shuffled order;
    the tail is the test set.  Test questions matching any deictic pattern
    are excluded (they reference a specific document, not a topic).
    """
    patterns = [
        re.compile(p, re.IGNORECASE)
        for p in (deictic_patterns if deictic_patterns is not None else DEFAULT_DEICTIC_PATTERNS)
    ]
    order = list(range(len(qa_pairs)))
    random.Random(seed).shuffle(order)
    shuffled = [qa_pairs[i] for i in order]
    n = len(shuffled)
    t_train = int(n * 0.7)
    t_dev = int(n * 0.8)

    def tag(pairs: list[QAPair], name: str) -> list[QAPair]:
        return [dataclasses.replace(p, split=name) for p in pairs]

    train = tag(shuffled[:t_train], "train")
    dev = tag(shuffled[t_train:t_dev], "dev")
    test_raw = shuffled[t_dev:]
    test = tag([p for p in test_raw if not any(rx.search(p.question) for rx in patterns)], "test")
    excluded = tag(
        [p for p in test_raw if any(rx.search(p.question) for rx in patterns)], "excluded"
    )
    return DatasetSplits(train=train, dev=dev, test=test, excluded=excluded)


def _parse_date(value, lineno: int) -> datetime.date | None:
    if value is None or value == "":
        return None
    try:
        return datetime.date.fromisoformat(str(value))
    except ValueError as exc:
        raise CorpusFormatError(f"line {lineno}: bad publish_date {value!r}: {exc}") from exc


def _iter_jsonl(path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise CorpusFormatError(f"line {lineno}: expected an object")
            yield lineno, record


def read_articles(path) -> list[Article]:
    """Load articles from JSONL; malformed records name their line."""
    articles = []
    for lineno, rec in _iter_jsonl(path):
        try:
            article_id = str(rec["article_id"])
        except KeyError:
            raise CorpusFormatError(f"line {lineno}: missing article_id") from None
        paragraphs = rec.get("paragraphs")
        if paragraphs is None and "body" in rec:
            paragraphs = str(rec["body"]).split(_PARAGRAPH_SEPARATOR)
        if not isinstance(paragraphs, list):
            raise CorpusFormatError(f"line {lineno}: missing paragraphs list")
        articles.append(
            Article(
                article_id=article_id,
                title=str(rec.get("title", "")),
                journal=str(rec.get("journal", "")),
                publish_date=_parse_date(rec.get("publish_date"), lineno),
                paragraphs=[str(p) for p in paragraphs],
            )
        )
    return articles


def read_qa_pairs(path) -> list[QAPair]:
    """Load QA pairs from JSONL; question ids default to file position."""
    pairs = []
    for lineno, rec in _iter_jsonl(path):
        try:
            question = str(rec["question"])
            answer = str(rec["answer"])
        except KeyError as exc:
            raise CorpusFormatError(f"line {lineno}: missing {exc.args[0]}") from None
        article_id = rec.get("article_id", rec.get("context_article_id", ""))
        pairs.append(
            QAPair(
                question_id=str(rec.get("question_id", f"q{len(pairs):05d}")),
                question=question,
                answer=answer,
                article_id=str(article_id),
                split=rec.get("split"),
            )
        )
    return pairs


def write_qa_pairs(pairs: Iterable[QAPair], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            rec = {
                "question_id": p.question_id,
                "question": p.question,
                "answer": p.answer,
                "article_id": p.article_id,
            }
            if p.split is not None:
                rec["split"] = p.split
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_chunks(path) -> list[PassageChunk]:
    chunks = []
    for lineno, rec in _iter_jsonl(path):
        try:
            chunks.append(
                PassageChunk(
                    chunk_id=str(rec["chunk_id"]),
                    article_id=str(rec["article_id"]),
                    text=str(rec["text"]),
                    token_count=int(rec["token_count"]),
                    char_start=int(rec["char_start"]),
                    char_end=int(rec["char_end"]),
                    title=str(rec.get("title", "")),
                    journal=str(rec.get("journal", "")),
                    publish_date=_parse_date(rec.get("publish_date"), lineno),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, CorpusFormatError):
                raise
            raise CorpusFormatError(f"line {lineno}: bad chunk record: {exc!r}") from exc
    return chunks


def write_chunks(chunks: Iterable[PassageChunk], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in chunks:
            rec = {
                "chunk_id": c.chunk_id,
                "article_id": c.article_id,
                "text": c.text,
                "token_count": c.token_count,
                "char_start": c.char_start,
                "char_end": c.char_end,
                "title": c.title,
                "journal": c.journal,
                "publish_date": c.publish_date.isoformat() if c.publish_date else None,
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


__all__ = [
    "Article",
    "ChunkStore",
    "CorpusFormatError",
    "DatasetSplits",
    "PassageChunk",
    "QAPair",
    "RetrievalSample",
    "SampleBuildResult",
    "build_retrieval_samples",
    "chunk_article",
    "read_articles",
    "read_chunks",
    "read_qa_pairs",
    "split_dataset",
    "write_chunks",
    "write_qa_pairs",
    "DEFAULT_DEICTIC_PATTERNS",
    "DEFAULT_MAX_TOKENS",
    "DEFAULT_MIN_TOKENS",
]
