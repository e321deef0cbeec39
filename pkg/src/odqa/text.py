"""Tokenization, sentence splitting, and stopword handling.

Every stage of the pipeline shares this tokenizer so that scores computed in
one module line up with offsets computed in another.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

# Alphanumeric runs, optionally joined by single hyphens ("covid-19" stays one
# token).  Underscore is excluded on purpose: it is not part of natural text.
_TOKEN_RE = re.compile(r"[^\W_]+(?:-[^\W_]+)*", re.UNICODE)

_SENTENCE_END = ".!?"
_CLOSERS = "\"')]’”"

# Words that commonly precede a period without ending the sentence.
_ABBREVIATIONS = {
    "al", "approx", "ca", "cf", "dr", "eg", "etc", "fig", "figs", "ie",
    "inc", "jr", "ltd", "mr", "mrs", "ms", "no", "nos", "prof", "resp",
    "sr", "st", "vol", "vs",
}


def tokenize_with_offsets(text: str) -> list[tuple[str, int, int]]:
    """Return (token, start, end) triples; tokens lowercased, offsets into text."""
    return [(m.group().lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens: alphanumeric runs plus hyphenated compounds."""
    return [m.group().lower() for m in _TOKEN_RE.finditer(text)]


def remove_stopwords(tokens: list[str], stopwords: frozenset[str] | set[str]) -> list[str]:
    """Drop tokens whose lowercase form appears in the stopword set."""
    return [t for t in tokens if t.lower() not in stopwords]


def load_stopwords(path) -> frozenset[str]:
    """Load a stopword file: UTF-8, one token per line, '#' starts a comment."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if not word or word.startswith("#"):
                continue
            words.add(word.lower())
    return frozenset(words)


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    """The stopword list shipped with the package."""
    data = resources.files("odqa.data").joinpath("stopwords.txt").read_text("utf-8")
    words = set()
    for line in data.splitlines():
        word = line.strip()
        if word and not word.startswith("#"):
            words.add(word.lower())
    return frozenset(words)


def _is_abbreviation(text: str, dot: int) -> bool:
    """True when the period at `dot` ends an abbreviation rather than a sentence."""
    m = re.search(r"[A-Za-z]+$", text[:dot])
    if m is None:
        return False
    word = m.group()
    if word.lower() in _ABBREVIATIONS:
        return True
    if len(word) == 1 and word.isupper():
        return True
    # A period right before the word marks a dotted abbreviation ("e.g.").
    return m.start() > 0 and text[m.start() - 1] == "."


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Split text into sentence (start, end) spans.

    A sentence ends at terminal punctuation (plus any closing quotes or
    brackets) followed by whitespace and an uppercase letter or digit.
    Periods after known abbreviations or single initials do not split.
    """
    spans: list[tuple[int, int]] = []
    n = len(text)
    start = 0
    i = 0
    while i < n:
        ch = text[i]
        if ch in _SENTENCE_END:
            if ch == "." and _is_abbreviation(text, i):
                i += 1
                continue
            end = i + 1
            while end < n and text[end] in _CLOSERS:
                end += 1
            k = end
            while k < n and text[k].isspace():
                k += 1
            if k < n and k > end and (text[k].isupper() or text[k].isdigit()):
                spans.append((start, end))
                start = k
                i = k
                continue
        i += 1
    if start < n:
        spans.append((start, n))
    # Trim whitespace from span edges.
    trimmed = []
    for s, e in spans:
        while s < e and text[s].isspace():
            s += 1
        while e > s and text[e - 1].isspace():
            e -= 1
        if s < e:
            trimmed.append((s, e))
    return trimmed


def split_sentences(text: str) -> list[str]:
    """Sentence texts in order; deterministic, rule-based."""
    return [text[s:e] for s, e in sentence_spans(text)]
