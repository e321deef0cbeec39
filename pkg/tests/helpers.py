"""Shared builders for synthetic articles used across test modules."""

from __future__ import annotations

import random

from odqa.corpus import Article

_VOCAB = [
    "virus", "mask", "vaccine", "antibody", "fever", "cough", "droplet",
    "aerosol", "ward", "icu", "triage", "swab", "assay", "cohort", "dose",
    "titer", "spike", "protein", "receptor", "cell", "lung", "plasma",
    "serum", "trial", "variant", "mutation", "genome", "sequence", "clinic",
    "patient", "outcome", "risk", "factor", "study-group", "follow-up",
]


def sentence_of(n_tokens: int, rng: random.Random | None = None, end: str = ".") -> str:
    """A sentence containing exactly n_tokens word tokens."""
    if rng is None:
        words = [f"w{i}" for i in range(n_tokens)]
    else:
        words = [rng.choice(_VOCAB) for _ in range(n_tokens)]
    text = " ".join(words) + end
    return text[0].upper() + text[1:]


def paragraph_of(sentence_lengths: list[int], rng: random.Random | None = None) -> str:
    return " ".join(sentence_of(n, rng) for n in sentence_lengths)


def make_random_article(rng: random.Random, article_id: str) -> Article:
    """Random article with varied paragraph and sentence lengths.

    Includes occasional oversized paragraphs and single sentences longer
    than any chunk budget so splitting fallbacks get exercised.
    """
    paragraphs = []
    for _ in range(rng.randint(1, 7)):
        roll = rng.random()
        if roll < 0.10:
            lengths = [rng.randint(220, 420)]
        elif roll < 0.30:
            lengths = [rng.randint(20, 70) for _ in range(rng.randint(4, 9))]
        else:
            lengths = [rng.randint(3, 45) for _ in range(rng.randint(1, 6))]
        paragraphs.append(paragraph_of(lengths, rng))
    return Article(
        article_id=article_id,
        title=f"Synthetic article {article_id}",
        journal=rng.choice(["J Virol", "Lancet", "BMJ", "Cell"]),
        publish_date=None,
        paragraphs=paragraphs,
    )
