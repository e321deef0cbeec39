"""Answer span extraction and confidence-based document re-ranking.

A span scorer produces per-token start and end confidences for a passage.
Span selection then picks up to m non-overlapping spans by combined score,
and documents are re-ordered by their best span's confidence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import requests

from .dense import ProviderError
from .ranking import RankedEntry, RankedList
from .text import default_stopwords, remove_stopwords, tokenize, tokenize_with_offsets

DEFAULT_WINDOW = 10
DEFAULT_DECAY = 0.9
DEFAULT_SPANS_PER_DOC = 3
DEFAULT_MAX_SPAN_LEN = 50


@dataclass
class SpanScores:
    """Token-level start/end confidences plus the token -> char map."""

    chunk_id: str
    text: str
    start: list[float]
    end: list[float]
    offsets: list[tuple[int, int]]


@dataclass
class AnswerSpan:
    start_token: int
    end_token: int
    start_char: int
    end_char: int
    text: str
    confidence: float


@dataclass
class AnsweredDocument:
    """A retrieved document with its extracted spans.

    confidence is the best span's combined score, or None when the reader
    found no span (or its backend failed, in which case error says why).
    """

    chunk_id: str
    retrieval_entry: RankedEntry
    spans: list[AnswerSpan] = field(default_factory=list)
    confidence: float | None = None
    error: str | None = None


def baseline_span_scorer(
    question: str,
    chunk,
    window: int = DEFAULT_WINDOW,
    decay: float = DEFAULT_DECAY,
    stopwords: frozenset[str] | None = None,
) -> SpanScores:
    """Lexical span scorer: a token matches when it is a non-stopword that
    appears among the question's content tokens.

    start(i) sums matches over the window [i, i+W-1] discounted by
    decay^(j-i); end(i) mirrors it backwards over [i-W+1, i].
    """
    if stopwords is None:
        stopwords = default_stopwords()
    question_terms = set(remove_stopwords(tokenize(question), stopwords))
    triples = tokenize_with_offsets(chunk.text)
    tokens = [t for t, _, _ in triples]
    offsets = [(s, e) for _, s, e in triples]
    match = [
        1.0 if tok not in stopwords and tok in question_terms else 0.0
        for tok in tokens
    ]
    n = len(tokens)
    start = [0.0] * n
    end = [0.0] * n
    for i in range(n):
        acc = 0.0
        for j in range(i, min(i + window, n)):
            if match[j]:
                acc += match[j] * decay ** (j - i)
        start[i] = acc
        acc = 0.0
        for j in range(max(0, i - window + 1), i + 1):
            if match[j]:
                acc += match[j] * decay ** (i - j)
        end[i] = acc
    return SpanScores(chunk_id=chunk.chunk_id, text=chunk.text,
                      start=start, end=end, offsets=offsets)


def select_spans(
    scores: SpanScores,
    m: int = DEFAULT_SPANS_PER_DOC,
    max_span_len: int = DEFAULT_MAX_SPAN_LEN,
) -> list[AnswerSpan]:
    """Pick up to m non-overlapping spans by combined start+end score.

    Candidates are every (s, e) pair with s <= e and length within
    max_span_len; they are ranked by combined score, ties preferring the
    shorter span and then the smaller start.  Greedy acceptance skips
    candidates overlapping an already-accepted span.  Candidates whose
    combined score is not positive are suppressed, so an all-zero scoring
    yields no spans.
    """
    n = len(scores.start)
    candidates = []
    for s in range(n):
        start_score = scores.start[s]
        for e in range(s, min(s + max_span_len, n)):
            combined = start_score + scores.end[e]
            if combined > 0:
                candidates.append((-combined, e - s, s, e))
    candidates.sort()
    selected: list[AnswerSpan] = []
    covered: list[tuple[int, int]] = []
    for neg_combined, _, s, e in candidates:
        if len(selected) >= m:
            break
        if any(s <= ce and cs <= e for cs, ce in covered):
            continue
        covered.append((s, e))
        start_char = scores.offsets[s][0]
        end_char = scores.offsets[e][1]
        selected.append(
            AnswerSpan(
                start_token=s,
                end_token=e,
                start_char=start_char,
                end_char=end_char,
                text=scores.text[start_char:end_char],
                confidence=-neg_combined,
            )
        )
    return selected


class SpanScorer:
    """Interface: score passages for a question."""

    def score(self, question: str, chunks: list) -> list[SpanScores]:
        raise NotImplementedError

    def ping(self) -> bool:
        return True


class BaselineSpanScorer(SpanScorer):
    def __init__(self, window: int = DEFAULT_WINDOW, decay: float = DEFAULT_DECAY,
                 stopwords: frozenset[str] | None = None):
        self.window = window
        self.decay = decay
        self.stopwords = stopwords

    def score(self, question: str, chunks: list) -> list[SpanScores]:
        return [
            baseline_span_scorer(question, c, self.window, self.decay, self.stopwords)
            for c in chunks
        ]


class EndpointSpanScorer(SpanScorer):
    """Neural reader behind an HTTP endpoint.

    Protocol: POST {base_url}/score_spans with
    {"question": ..., "passages": [{"id": ..., "text": ...}, ...]} returns
    {"scores": [{"id": ..., "start": [...], "end": [...],
                 "offsets": [[s, e], ...]}, ...]}.
    """

    def __init__(self, base_url: str, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def score(self, question: str, chunks: list) -> list[SpanScores]:
        payload = {
            "question": question,
            "passages": [{"id": c.chunk_id, "text": c.text} for c in chunks],
        }
        try:
            resp = requests.post(f"{self.base_url}/score_spans", json=payload,
                                 timeout=self.timeout)
        except requests.RequestException as exc:
            raise ProviderError(f"span endpoint unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderError(f"span endpoint returned {resp.status_code}")
        try:
            rows = {row["id"]: row for row in resp.json()["scores"]}
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderError(f"bad span endpoint response: {exc}") from exc
        out = []
        for c in chunks:
            row = rows.get(c.chunk_id)
            if row is None:
                raise ProviderError(f"span endpoint returned no scores for {c.chunk_id}")
            try:
                out.append(
                    SpanScores(
                        chunk_id=c.chunk_id,
                        text=c.text,
                        start=[float(x) for x in row["start"]],
                        end=[float(x) for x in row["end"]],
                        offsets=[(int(s), int(e)) for s, e in row["offsets"]],
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ProviderError(f"bad span scores for {c.chunk_id}: {exc}") from exc
        return out

    def ping(self) -> bool:
        try:
            self.score("ping", [])
            return True
        except ProviderError:
            return False


def answer_documents(
    question: str,
    docs: RankedList,
    chunks,
    scorer: SpanScorer | None = None,
    m: int = DEFAULT_SPANS_PER_DOC,
    max_span_len: int = DEFAULT_MAX_SPAN_LEN,
) -> list[AnsweredDocument]:
    """Extract spans for each retrieved document and re-rank by confidence.

    Documents are scored one at a time so a backend failure only marks
    that document unanswered.  Answered documents sort by best-span
    confidence (ties keep retrieval order); unanswered documents follow,
    still in retrieval order.
    """
    if scorer is None:
        scorer = BaselineSpanScorer()
    answered: list[tuple[float, int, AnsweredDocument]] = []
    unanswered: list[AnsweredDocument] = []
    for pos, entry in enumerate(docs):
        chunk = chunks.get(entry.chunk_id)
        doc = AnsweredDocument(chunk_id=entry.chunk_id, retrieval_entry=entry)
        try:
            (scores,) = scorer.score(question, [chunk])
            doc.spans = select_spans(scores, m=m, max_span_len=max_span_len)
        except ProviderError as exc:
            doc.error = str(exc)
        if doc.spans:
            doc.confidence = doc.spans[0].confidence
            answered.append((-doc.confidence, pos, doc))
        else:
            unanswered.append(doc)
    answered.sort(key=lambda item: (item[0], item[1]))
    return [doc for _, _, doc in answered] + unanswered


__all__ = [
    "AnswerSpan",
    "AnsweredDocument",
    "BaselineSpanScorer",
    "DEFAULT_DECAY",
    "DEFAULT_MAX_SPAN_LEN",
    "DEFAULT_SPANS_PER_DOC",
    "DEFAULT_WINDOW",
    "EndpointSpanScorer",
    "SpanScorer",
    "SpanScores",
    "answer_documents",
    "baseline_span_scorer",
    "select_spans",
]
