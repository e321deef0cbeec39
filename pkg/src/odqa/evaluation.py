"""Retrieval and reader evaluation metrics.

Retrieval quality is judged by fuzzy matching: each sentence of a candidate
chunk is compared against the gold answer with a cosine-similarity condition,
a combined similarity-and-overlap condition, and a keyword condition reserved
for short answers.  FM@k aggregates those judgments over a ranked run.
Reader quality uses the usual token-level F1 and normalized exact match.
"""

from __future__ import annotations

import string
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import json

import numpy as np

from .corpus import ChunkStore, CorpusFormatError, PassageChunk, QAPair, _iter_jsonl
from .dense import EmbeddingProvider
from .text import split_sentences, tokenize

DEFAULT_KS = (5, 20, 50)

CONDITION_SIMILARITY = "similarity"
CONDITION_SIMILARITY_AND_F1 = "similarity_and_f1"
CONDITION_SHORT_ANSWER = "short_answer_f1"

_ARTICLES = frozenset({"a", "an", "the"})
_PUNCTUATION = frozenset(string.punctuation)

_THRESHOLD_FIELDS = ("sim_alone", "sim_paired", "f1_paired", "f1_short")


def token_f1(prediction_tokens: Sequence[str], gold_tokens: Sequence[str]) -> float:
    """Multiset token overlap F1; 0.0 when either side is empty or disjoint."""
    overlap = sum((Counter(prediction_tokens) & Counter(gold_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(prediction_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def normalize_answer(text: str) -> str:
    """Lowercase, drop punctuation and articles, collapse whitespace."""
    lowered = text.lower()
    stripped = "".join(ch for ch in lowered if ch not in _PUNCTUATION)
    kept = [token for token in stripped.split() if token not in _ARTICLES]
    return " ".join(kept)


def exact_match(prediction: str, gold: str) -> int:
    return int(normalize_answer(prediction) == normalize_answer(gold))


def best_span_f1(span_texts: Iterable[str], gold: str) -> float:
    """Best token F1 any of the given span texts achieves against the gold
    answer; 0.0 when no spans were produced."""
    gold_tokens = tokenize(gold)
    best = 0.0
    for text in span_texts:
        best = max(best, token_f1(tokenize(text), gold_tokens))
    return best


@dataclass
class FuzzyMatchConfig:
    """Thresholds for the sentence-level fuzzy match.

    A sentence counts as a match when its clamped cosine against the
    comparison target reaches sim_alone on its own, when it reaches
    sim_paired and the token F1 against the answer reaches f1_paired, or
    when the answer has at most short_answer_max_tokens tokens and the F1
    alone reaches f1_short.  The comparison target is the gold answer by
    default; compare_against="question" switches it to the question text.
    """

    sim_alone: float = 0.75
    sim_paired: float = 0.60
    f1_paired: float = 0.50
    f1_short: float = 0.80
    short_answer_max_tokens: int = 3
    compare_against: str = "answer"
    sentence_encoder: EmbeddingProvider | None = None

    def __post_init__(self) -> None:
        for name in _THRESHOLD_FIELDS:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.sim_paired > self.sim_alone:
            raise ValueError("sim_paired must not exceed sim_alone")
        if self.f1_paired > self.f1_short:
            raise ValueError("f1_paired must not exceed f1_short")
        if self.short_answer_max_tokens < 0:
            raise ValueError("short_answer_max_tokens must be non-negative")
        if self.compare_against not in ("answer", "question"):
            raise ValueError("compare_against must be 'answer' or 'question'")

    def thresholds(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in _THRESHOLD_FIELDS}

    def save(self, path) -> None:
        data = dict(self.thresholds())
        data["short_answer_max_tokens"] = self.short_answer_max_tokens
        data["compare_against"] = self.compare_against
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path, encoder: EmbeddingProvider | None = None) -> "FuzzyMatchConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        known = set(_THRESHOLD_FIELDS) | {"short_answer_max_tokens", "compare_against"}
        kept = {key: value for key, value in data.items() if key in known}
        return cls(sentence_encoder=encoder, **kept)


@dataclass(frozen=True)
class FuzzyJudgment:
    """Outcome of judging one chunk against one answer.

    When matched, records the first sentence that satisfied a condition,
    which condition fired, and the scores the decision was based on.
    """

    matched: bool
    condition: str | None = None
    sentence: str | None = None
    sentence_index: int | None = None
    cosine: float = 0.0
    f1: float = 0.0


@dataclass
class _ChunkView:
    sentences: list[str]
    token_lists: list[list[str]]
    vectors: list[np.ndarray]


def _clamped_cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity floored at zero; zero vectors score zero."""
    norm_u = float(np.linalg.norm(u))
    norm_v = float(np.linalg.norm(v))
    if norm_u == 0.0 or norm_v == 0.0:
        return 0.0
    return max(0.0, float(np.dot(u, v)) / (norm_u * norm_v))


class FuzzyMatcher:
    """Applies the fuzzy-match conditions, caching per-chunk sentence splits
    and embeddings so repeated questions over the same pool stay cheap."""

    def __init__(self, config: FuzzyMatchConfig | None = None):
        self.config = config if config is not None else FuzzyMatchConfig()
        encoder = self.config.sentence_encoder
        if encoder is None:
            # Imported lazily to keep the default path explicit at one site.
            from .dense import BaselineEmbeddingProvider

            encoder = BaselineEmbeddingProvider()
        self._encoder = encoder
        self._views: dict[str, _ChunkView] = {}
        self._targets: dict[str, np.ndarray] = {}

    def _view(self, document: PassageChunk) -> _ChunkView:
        view = self._views.get(document.chunk_id)
        if view is None:
            sentences = split_sentences(document.text)
            vectors = self._encoder.embed_texts(sentences) if sentences else []
            view = _ChunkView(sentences=sentences,
                              token_lists=[tokenize(s) for s in sentences],
                              vectors=list(vectors))
            self._views[document.chunk_id] = view
        return view

    def _target(self, text: str) -> np.ndarray:
        vector = self._targets.get(text)
        if vector is None:
            vector = self._encoder.embed_text(text)
            self._targets[text] = vector
        return vector

    def judge(self, document: PassageChunk, answer: str,
              question: str | None = None) -> FuzzyJudgment:
        view = self._view(document)
        if not view.sentences:
            return FuzzyJudgment(matched=False)
        if self.config.compare_against == "question":
            if question is None:
                raise ValueError(
                    "compare_against='question' requires the question text")
            target_text = question
        else:
            target_text = answer
        target = self._target(target_text)
        answer_tokens = tokenize(answer)
        short_answer = len(answer_tokens) <= self.config.short_answer_max_tokens
        for index, sentence in enumerate(view.sentences):
            cosine = _clamped_cosine(view.vectors[index], target)
            f1 = token_f1(view.token_lists[index], answer_tokens)
            if cosine >= self.config.sim_alone:
                condition = CONDITION_SIMILARITY
            elif cosine >= self.config.sim_paired and f1 >= self.config.f1_paired:
                condition = CONDITION_SIMILARITY_AND_F1
            elif short_answer and f1 >= self.config.f1_short:
                condition = CONDITION_SHORT_ANSWER
            else:
                continue
            return FuzzyJudgment(matched=True, condition=condition,
                                 sentence=sentence, sentence_index=index,
                                 cosine=cosine, f1=f1)
        return FuzzyJudgment(matched=False)


def fuzzy_match(answer: str, document: PassageChunk, config: FuzzyMatchConfig,
                question: str | None = None) -> FuzzyJudgment:
    """Judge a single chunk; build a FuzzyMatcher for repeated judging."""
    return FuzzyMatcher(config).judge(document, answer, question)


@dataclass
class FmReport:
    """FM@k scores plus everything needed to interpret them."""

    scores: dict[int, float]
    thresholds: dict[str, float]
    short_answer_max_tokens: int
    compare_against: str
    condition_counts: dict[str, int]
    num_questions: int
    missing: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "fm": {str(k): score for k, score in sorted(self.scores.items())},
            "thresholds": dict(self.thresholds),
            "short_answer_max_tokens": self.short_answer_max_tokens,
            "compare_against": self.compare_against,
            "conditions": dict(self.condition_counts),
            "num_questions": self.num_questions,
            "missing": list(self.missing),
        }


def fm_at_k(run: Mapping[str, Sequence[str]], gold: Iterable[QAPair],
            chunks: ChunkStore, config: FuzzyMatchConfig | None = None,
            ks: Sequence[int] = DEFAULT_KS) -> FmReport:
    """Fraction of questions whose top-k run entries contain a fuzzy match.

    Questions absent from the run are counted as misses and warned about.
    The condition histogram counts the first matching chunk per question.
    """
    cutoffs = sorted({int(k) for k in ks})
    if not cutoffs or cutoffs[0] < 1:
        raise ValueError("every k must be a positive integer")
    matcher = FuzzyMatcher(config)
    hits = {k: 0 for k in cutoffs}
    condition_counts: Counter[str] = Counter()
    missing: list[str] = []
    pairs = list(gold)
    for pair in pairs:
        ranked = run.get(pair.question_id)
        if ranked is None:
            warnings.warn(f"question {pair.question_id!r} missing from run; "
                          "counted as a miss")
            missing.append(pair.question_id)
            continue
        for rank, chunk_id in enumerate(ranked[:cutoffs[-1]]):
            try:
                document = chunks.get(chunk_id)
            except KeyError:
                raise ValueError(
                    f"run for question {pair.question_id!r} references "
                    f"unknown chunk {chunk_id!r}") from None
            judgment = matcher.judge(document, pair.answer, pair.question)
            if judgment.matched:
                condition_counts[judgment.condition] += 1
                for k in cutoffs:
                    if rank < k:
                        hits[k] += 1
                break
    total = len(pairs)
    scores = {k: (hits[k] / total if total else 0.0) for k in cutoffs}
    active = matcher.config
    return FmReport(scores=scores, thresholds=active.thresholds(),
                    short_answer_max_tokens=active.short_answer_max_tokens,
                    compare_against=active.compare_against,
                    condition_counts=dict(condition_counts),
                    num_questions=total, missing=missing)


def read_run(path) -> dict[str, list[str]]:
    """Parse a JSONL run file of question_id to ranked_chunk_ids records."""
    run: dict[str, list[str]] = {}
    for lineno, record in _iter_jsonl(path):
        try:
            question_id = record["question_id"]
            ranked = record["ranked_chunk_ids"]
        except KeyError as exc:
            raise CorpusFormatError(f"line {lineno}: missing field {exc}") from exc
        if not isinstance(question_id, str) or not isinstance(ranked, list):
            raise CorpusFormatError(
                f"line {lineno}: question_id must be a string and "
                "ranked_chunk_ids a list")
        if question_id in run:
            raise CorpusFormatError(
                f"line {lineno}: duplicate question {question_id!r}")
        run[question_id] = [str(chunk_id) for chunk_id in ranked]
    return run
