"""Tests for retrieval and reader evaluation metrics."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from odqa.corpus import ChunkStore, CorpusFormatError, PassageChunk, QAPair
from odqa.dense import EmbeddingProvider
from odqa.evaluation import (
    CONDITION_SHORT_ANSWER,
    CONDITION_SIMILARITY,
    CONDITION_SIMILARITY_AND_F1,
    FuzzyJudgment,
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


def chunk(cid, text):
    return PassageChunk(chunk_id=cid, article_id="a", text=text,
                        token_count=len(text.split()), char_start=0,
                        char_end=len(text))


class MappedEncoder(EmbeddingProvider):
    """Returns a fixed vector per known text and zeros otherwise, so every
    cosine in a test is chosen by construction."""

    def __init__(self, table: dict[str, list[float]], dim: int = 2):
        self.dimension = dim
        self._table = {key: np.asarray(vec, dtype=np.float32)
                       for key, vec in table.items()}

    @property
    def fingerprint(self) -> str:
        return f"mapped:v1:d={self.dimension}"

    def embed_texts(self, texts):
        zero = np.zeros(self.dimension, dtype=np.float32)
        return [self._table.get(text, zero) for text in texts]


class CountingEncoder(MappedEncoder):
    def __init__(self, table, dim=2):
        super().__init__(table, dim)
        self.calls = 0

    def embed_texts(self, texts):
        self.calls += 1
        return super().embed_texts(texts)


class TestTokenF1:
    def test_identical_lists(self):
        assert token_f1(["fever", "cough"], ["fever", "cough"]) == 1.0

    def test_disjoint_lists(self):
        assert token_f1(["fever"], ["cough"]) == 0.0

    def test_partial_overlap(self):
        # overlap 1, precision 1/2, recall 1 -> harmonic mean 2/3
        assert token_f1(["fever", "cough"], ["fever"]) == pytest.approx(2 / 3)

    def test_symmetric_in_roles(self):
        assert token_f1(["fever"], ["fever", "cough"]) == pytest.approx(2 / 3)
        a = ["dry", "cough", "and", "fever"]
        b = ["fever", "or", "chills"]
        assert token_f1(a, b) == pytest.approx(token_f1(b, a))

    def test_multiset_overlap(self):
        # Counter intersection credits each shared occurrence once.
        assert token_f1(["a", "a", "b"], ["a", "b", "b"]) == pytest.approx(2 / 3)
        assert token_f1(["fever", "fever"], ["fever"]) == pytest.approx(2 / 3)

    def test_empty_sides(self):
        assert token_f1([], ["fever"]) == 0.0
        assert token_f1(["fever"], []) == 0.0
        assert token_f1([], []) == 0.0


class TestExactMatch:
    def test_punctuation_and_case_stripped(self):
        assert normalize_answer("Fever.") == "fever"
        assert exact_match("Fever.", "fever") == 1

    def test_articles_stripped(self):
        assert normalize_answer("the fever") == "fever"
        assert exact_match("the fever", "fever") == 1
        assert exact_match("an apple", "Apple!") == 1

    def test_different_answers(self):
        assert exact_match("fever", "cough") == 0
        assert exact_match("fevers", "fever") == 0

    def test_whitespace_collapsed(self):
        assert normalize_answer("The  quick,  brown FOX!") == "quick brown fox"

    def test_articles_only(self):
        assert normalize_answer("a an the") == ""

    def test_inner_punctuation_removed(self):
        assert normalize_answer("COVID-19") == "covid19"


ANSWER = "masks prevent viral spread"


def fuzzy_fixture():
    encoder = MappedEncoder({
        ANSWER: [1.0, 0.0],
        "Masks reliably prevent spread.": [1.0, 0.0],
        "Masks prevent illness.": [0.65, math.sqrt(1 - 0.65 ** 2)],
        "Opposite direction sentence.": [-1.0, 0.0],
        "Do masks work?": [1.0, 0.0],
        "fomites transmission": [0.0, 1.0],
    })
    return FuzzyMatchConfig(sentence_encoder=encoder)


class TestFuzzyMatch:
    def test_high_similarity_alone(self):
        cfg = fuzzy_fixture()
        doc = chunk("c1", "Masks reliably prevent spread. Filler sentence here.")
        judgment = fuzzy_match(ANSWER, doc, cfg)
        assert judgment.matched
        assert judgment.condition == CONDITION_SIMILARITY
        assert judgment.sentence == "Masks reliably prevent spread."
        assert judgment.sentence_index == 0
        assert judgment.cosine == pytest.approx(1.0)
        # tokens [masks, reliably, prevent, spread] vs the 4-token answer
        assert judgment.f1 == pytest.approx(0.75)

    def test_moderate_similarity_needs_overlap(self):
        cfg = fuzzy_fixture()
        doc = chunk("c2", "Masks prevent illness.")
        judgment = fuzzy_match(ANSWER, doc, cfg)
        assert judgment.matched
        assert judgment.condition == CONDITION_SIMILARITY_AND_F1
        assert judgment.cosine == pytest.approx(0.65, abs=1e-6)
        # overlap 2, precision 2/3, recall 1/2 -> 4/7
        assert judgment.f1 == pytest.approx(4 / 7)

    def test_short_answer_keyword_overlap(self):
        cfg = fuzzy_fixture()
        judgment = fuzzy_match("fomites", chunk("c3", "Fomites!"), cfg)
        assert judgment.matched
        assert judgment.condition == CONDITION_SHORT_ANSWER
        assert judgment.f1 == pytest.approx(1.0)

    def test_short_answer_in_long_sentence(self):
        # One shared token out of seven gives F1 = 0.25, below the default
        # threshold but above a relaxed one.
        doc = chunk("c4", "Fomites were found on every handrail surface.")
        strict = fuzzy_fixture()
        assert not fuzzy_match("fomites", doc, strict).matched
        relaxed = FuzzyMatchConfig(f1_paired=0.2, f1_short=0.25,
                                   sentence_encoder=strict.sentence_encoder)
        judgment = fuzzy_match("fomites", doc, relaxed)
        assert judgment.matched
        assert judgment.condition == CONDITION_SHORT_ANSWER
        assert judgment.f1 == pytest.approx(0.25)

    def test_long_answer_never_uses_short_condition(self):
        # Four answer tokens exceed the short-answer cap, so a perfect F1
        # sentence with low cosine stays unmatched.
        cfg = fuzzy_fixture()
        doc = chunk("c5", "Masks prevent viral spread entirely unseen here.")
        judgment = fuzzy_match(ANSWER, doc, cfg)
        assert not judgment.matched

    def test_unrelated_document(self):
        cfg = fuzzy_fixture()
        judgment = fuzzy_match(ANSWER, chunk("c6", "Totally different topic entirely."), cfg)
        assert not judgment.matched
        assert judgment.condition is None
        assert judgment.sentence is None

    def test_empty_document(self):
        cfg = fuzzy_fixture()
        assert not fuzzy_match(ANSWER, chunk("c7", ""), cfg).matched
        assert not fuzzy_match(ANSWER, chunk("c8", "   "), cfg).matched

    def test_negative_cosine_clamped_to_zero(self):
        # With every threshold at zero the similarity condition fires for
        # any sentence, including one pointing the opposite way.
        encoder = fuzzy_fixture().sentence_encoder
        cfg = FuzzyMatchConfig(sim_alone=0.0, sim_paired=0.0,
                               f1_paired=0.0, f1_short=0.0,
                               sentence_encoder=encoder)
        judgment = fuzzy_match(ANSWER, chunk("c9", "Opposite direction sentence."), cfg)
        assert judgment.matched
        assert judgment.condition == CONDITION_SIMILARITY
        assert judgment.cosine == 0.0

    def test_equal_thresholds_degenerate_to_cosine(self):
        # a = b with both F1 thresholds at zero reduces the judgment to a
        # cosine cut when the answer is too long for the short condition.
        encoder = fuzzy_fixture().sentence_encoder
        cfg = FuzzyMatchConfig(sim_alone=0.7, sim_paired=0.7,
                               f1_paired=0.0, f1_short=0.0,
                               sentence_encoder=encoder)
        hit = chunk("c10", "Masks reliably prevent spread.")
        miss = chunk("c11", "Masks prevent illness.")
        assert fuzzy_match(ANSWER, hit, cfg).matched
        assert not fuzzy_match(ANSWER, miss, cfg).matched

    def test_relaxing_thresholds_never_drops_a_match(self):
        encoder = fuzzy_fixture().sentence_encoder
        strict = FuzzyMatchConfig(sentence_encoder=encoder)
        relaxed = FuzzyMatchConfig(sim_alone=0.5, sim_paired=0.3,
                                   f1_paired=0.2, f1_short=0.3,
                                   sentence_encoder=encoder)
        docs = [
            chunk("m1", "Masks reliably prevent spread."),
            chunk("m2", "Masks prevent illness."),
            chunk("m3", "Fomites were found on every handrail surface."),
            chunk("m4", "Totally different topic entirely."),
        ]
        for doc in docs:
            for answer in (ANSWER, "fomites"):
                if fuzzy_match(answer, doc, strict).matched:
                    assert fuzzy_match(answer, doc, relaxed).matched

    def test_compare_against_question(self):
        cfg = fuzzy_fixture()
        doc = chunk("c12", "Masks reliably prevent spread.")
        answer = "fomites transmission"
        assert not fuzzy_match(answer, doc, cfg).matched
        against_question = FuzzyMatchConfig(compare_against="question",
                                            sentence_encoder=cfg.sentence_encoder)
        judgment = fuzzy_match(answer, doc, against_question,
                               question="Do masks work?")
        assert judgment.matched
        assert judgment.condition == CONDITION_SIMILARITY

    def test_compare_against_question_requires_question(self):
        cfg = FuzzyMatchConfig(compare_against="question",
                               sentence_encoder=fuzzy_fixture().sentence_encoder)
        with pytest.raises(ValueError):
            fuzzy_match(ANSWER, chunk("c13", "Masks reliably prevent spread."), cfg)


class TestFuzzyMatchConfig:
    def test_defaults(self):
        cfg = FuzzyMatchConfig()
        assert cfg.sim_alone == 0.75
        assert cfg.sim_paired == 0.60
        assert cfg.f1_paired == 0.50
        assert cfg.f1_short == 0.80
        assert cfg.short_answer_max_tokens == 3
        assert cfg.compare_against == "answer"

    def test_paired_similarity_must_not_exceed_alone(self):
        with pytest.raises(ValueError):
            FuzzyMatchConfig(sim_alone=0.5, sim_paired=0.6)

    def test_paired_f1_must_not_exceed_short(self):
        with pytest.raises(ValueError):
            FuzzyMatchConfig(f1_paired=0.9, f1_short=0.8)

    def test_thresholds_bounded_by_unit_interval(self):
        with pytest.raises(ValueError):
            FuzzyMatchConfig(sim_alone=1.2)
        with pytest.raises(ValueError):
            FuzzyMatchConfig(f1_paired=-0.1, f1_short=0.5)

    def test_compare_against_validated(self):
        with pytest.raises(ValueError):
            FuzzyMatchConfig(compare_against="document")

    def test_round_trip(self, tmp_path):
        path = tmp_path / "fuzzy.json"
        cfg = FuzzyMatchConfig(sim_alone=0.8, sim_paired=0.4,
                               f1_paired=0.3, f1_short=0.9,
                               short_answer_max_tokens=2,
                               compare_against="question")
        cfg.save(path)
        loaded = FuzzyMatchConfig.load(path)
        assert loaded.sim_alone == 0.8
        assert loaded.sim_paired == 0.4
        assert loaded.f1_paired == 0.3
        assert loaded.f1_short == 0.9
        assert loaded.short_answer_max_tokens == 2
        assert loaded.compare_against == "question"
        assert loaded.sentence_encoder is None

    def test_load_attaches_encoder_and_ignores_unknown_keys(self, tmp_path):
        path = tmp_path / "fuzzy.json"
        path.write_text(json.dumps({"sim_alone": 0.9, "note": "ignored"}),
                        encoding="utf-8")
        encoder = fuzzy_fixture().sentence_encoder
        cfg = FuzzyMatchConfig.load(path, encoder=encoder)
        assert cfg.sim_alone == 0.9
        assert cfg.sim_paired == 0.60
        assert cfg.sentence_encoder is encoder


class TestFuzzyMatcherCaching:
    def test_sentences_embedded_once_per_chunk(self):
        encoder = CountingEncoder({
            ANSWER: [1.0, 0.0],
            "second answer": [0.0, 1.0],
            "Masks reliably prevent spread.": [1.0, 0.0],
        })
        matcher = FuzzyMatcher(FuzzyMatchConfig(sentence_encoder=encoder))
        doc = chunk("c1", "Masks reliably prevent spread. Filler sentence here.")
        matcher.judge(doc, ANSWER)
        calls_after_first = encoder.calls
        matcher.judge(doc, ANSWER)
        assert encoder.calls == calls_after_first
        matcher.judge(doc, "second answer")
        # Only the new target text needs an embedding call.
        assert encoder.calls == calls_after_first + 1


def fm_fixture():
    store = ChunkStore()
    store.add(chunk("m1", "Fever."))
    store.add(chunk("m2", "Cough."))
    for i in range(20):
        store.add(chunk(f"f{i}", f"filler block number {i} entirely unrelated."))
    fillers = [f"f{i}" for i in range(20)]
    run = {
        # first match in position 7 (index 6): inside top-20, outside top-5
        "q1": fillers[:6] + ["m1"] + fillers[6:12],
        # first match in position 3 (index 2): inside top-5
        "q2": fillers[:2] + ["m2"] + fillers[2:8],
    }
    gold = [
        QAPair(question_id="q1", question="What symptom is common?",
               answer="fever", article_id="a"),
        QAPair(question_id="q2", question="What else occurs?",
               answer="cough", article_id="a"),
    ]
    cfg = FuzzyMatchConfig(sentence_encoder=MappedEncoder({}))
    return store, run, gold, cfg


class TestFmAtK:
    def test_rank_cutoffs(self):
        store, run, gold, cfg = fm_fixture()
        report = fm_at_k(run, gold, store, cfg)
        assert report.scores == {5: 0.5, 20: 1.0, 50: 1.0}
        assert report.num_questions == 2
        assert report.missing == []

    def test_condition_histogram_counts_first_match_per_question(self):
        store, run, gold, cfg = fm_fixture()
        report = fm_at_k(run, gold, store, cfg)
        assert report.condition_counts == {CONDITION_SHORT_ANSWER: 2}

    def test_monotone_in_k(self):
        store, run, gold, cfg = fm_fixture()
        report = fm_at_k(run, gold, store, cfg, ks=(1, 5, 20, 50))
        scores = [report.scores[k] for k in (1, 5, 20, 50)]
        assert scores == sorted(scores)

    def test_every_top_one_matches(self):
        store, run, gold, cfg = fm_fixture()
        run = {"q1": ["m1"], "q2": ["m2"]}
        report = fm_at_k(run, gold, store, cfg)
        assert report.scores == {5: 1.0, 20: 1.0, 50: 1.0}

    def test_no_document_ever_matches(self):
        store, run, gold, cfg = fm_fixture()
        run = {"q1": ["f0", "f1"], "q2": ["f2"]}
        report = fm_at_k(run, gold, store, cfg)
        assert report.scores == {5: 0.0, 20: 0.0, 50: 0.0}
        assert report.condition_counts == {}

    def test_missing_question_counts_as_miss_and_warns(self):
        store, run, gold, cfg = fm_fixture()
        gold = gold + [QAPair(question_id="q3", question="Rarely seen?",
                              answer="sneeze", article_id="a")]
        with pytest.warns(UserWarning, match="q3"):
            report = fm_at_k(run, gold, store, cfg)
        assert report.missing == ["q3"]
        assert report.num_questions == 3
        assert report.scores[5] == pytest.approx(1 / 3)
        assert report.scores[20] == pytest.approx(2 / 3)

    def test_unknown_chunk_id_rejected(self):
        store, run, gold, cfg = fm_fixture()
        run["q1"] = ["ghost"]
        with pytest.raises(ValueError, match="ghost"):
            fm_at_k(run, gold, store, cfg)

    def test_ks_must_be_positive(self):
        store, run, gold, cfg = fm_fixture()
        with pytest.raises(ValueError):
            fm_at_k(run, gold, store, cfg, ks=(0, 5))

    def test_report_serializes_with_thresholds(self):
        store, run, gold, cfg = fm_fixture()
        report = fm_at_k(run, gold, store, cfg)
        data = report.to_dict()
        assert data["fm"] == {"5": 0.5, "20": 1.0, "50": 1.0}
        assert data["thresholds"] == {"sim_alone": 0.75, "sim_paired": 0.60,
                                      "f1_paired": 0.50, "f1_short": 0.80}
        assert data["short_answer_max_tokens"] == 3
        assert data["compare_against"] == "answer"
        assert data["conditions"] == {CONDITION_SHORT_ANSWER: 2}
        assert data["num_questions"] == 2
        assert data["missing"] == []
        json.dumps(data)


class TestBestSpanF1:
    def test_takes_the_best_span(self):
        assert best_span_f1(["the fever", "cough"], "fever") == pytest.approx(2 / 3)

    def test_empty_spans(self):
        assert best_span_f1([], "fever") == 0.0

    def test_uses_package_tokenizer(self):
        assert best_span_f1(["Fever!"], "fever") == 1.0


class TestReadRun:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "run.jsonl"
        lines = [
            json.dumps({"question_id": "q1", "ranked_chunk_ids": ["a", "b"]}),
            json.dumps({"question_id": "q2", "ranked_chunk_ids": []}),
        ]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        assert read_run(path) == {"q1": ["a", "b"], "q2": []}

    def test_bad_json_reports_line(self, tmp_path):
        path = tmp_path / "run.jsonl"
        path.write_text('{"question_id": "q1", "ranked_chunk_ids": []}\nnot json\n',
                        encoding="utf-8")
        with pytest.raises(CorpusFormatError, match="line 2"):
            read_run(path)

    def test_missing_field_reports_line(self, tmp_path):
        path = tmp_path / "run.jsonl"
        path.write_text('{"question_id": "q1"}\n', encoding="utf-8")
        with pytest.raises(CorpusFormatError, match="line 1"):
            read_run(path)

    def test_duplicate_question_rejected(self, tmp_path):
        path = tmp_path / "run.jsonl"
        record = json.dumps({"question_id": "q1", "ranked_chunk_ids": ["a"]})
        path.write_text(record + "\n" + record + "\n", encoding="utf-8")
        with pytest.raises(CorpusFormatError, match="line 2"):
            read_run(path)
