"""Structural guarantees for the shipped fixture corpora."""

from __future__ import annotations

from odqa.dense import BaselineEmbeddingProvider
from odqa.evaluation import FuzzyMatchConfig, FuzzyMatcher
from odqa.fixtures import (
    DEMO_QUESTION,
    TWO_TOPIC_QUESTION,
    service_corpus,
    synthetic_corpus,
    two_topic_chunks,
)
from odqa.text import tokenize


class TestSyntheticCorpus:
    def test_size_and_shape(self):
        store, pairs = synthetic_corpus()
        assert len(store) == 200
        assert len(pairs) == 24
        assert len({p.question_id for p in pairs}) == 24
        assert len({p.answer for p in pairs}) == 24

    def test_token_counts_within_chunk_bounds(self):
        store, _ = synthetic_corpus()
        for chunk in store:
            assert chunk.token_count == len(tokenize(chunk.text))
            assert chunk.token_count <= 200

    def test_each_question_has_a_gold_chunk(self):
        store, pairs = synthetic_corpus()
        for pair in pairs:
            owned = store.for_article(pair.article_id)
            assert len(owned) == 1

    def test_gold_chunks_fuzzy_match_their_answers(self):
        store, pairs = synthetic_corpus()
        matcher = FuzzyMatcher(
            FuzzyMatchConfig(sentence_encoder=BaselineEmbeddingProvider()))
        for pair in pairs:
            gold = store.for_article(pair.article_id)[0]
            assert matcher.judge(gold, pair.answer, pair.question).matched

    def test_answer_words_reserved_to_their_gold_chunk(self):
        store, pairs = synthetic_corpus()
        for pair in pairs:
            answer_words = set(tokenize(pair.answer)) - {"and"}
            for chunk in store:
                if chunk.article_id == pair.article_id:
                    continue
                assert not answer_words & set(tokenize(chunk.text)), \
                    f"{pair.answer!r} leaks into {chunk.chunk_id}"

    def test_deterministic_across_calls(self):
        store_a, pairs_a = synthetic_corpus()
        store_b, pairs_b = synthetic_corpus()
        assert list(store_a) == list(store_b)
        assert pairs_a == pairs_b


class TestTwoTopicChunks:
    def test_ten_chunks_per_topic(self):
        store = two_topic_chunks()
        topics = [c.chunk_id.split("-")[0] for c in store]
        assert topics.count("mask") == 10
        assert topics.count("vent") == 10

    def test_question_names_one_topic(self):
        assert "mask" in TWO_TOPIC_QUESTION
        assert "vent" not in TWO_TOPIC_QUESTION

    def test_deterministic_across_calls(self):
        assert list(two_topic_chunks()) == list(two_topic_chunks())


class TestServiceCorpus:
    def test_six_documents_one_undated(self):
        store = service_corpus()
        assert len(store) == 6
        undated = [c for c in store if c.publish_date is None]
        assert len(undated) == 1

    def test_display_fields_populated(self):
        store = service_corpus()
        for chunk in store:
            assert chunk.title
            assert chunk.journal

    def test_demo_question_terms_present(self):
        store = service_corpus()
        token_sets = [set(tokenize(c.text)) for c in store]
        assert all("covid" in tokens for tokens in token_sets)
        symptom_docs = [tokens for tokens in token_sets if "symptoms" in tokens]
        assert symptom_docs
        assert "covid" in tokenize(DEMO_QUESTION)
