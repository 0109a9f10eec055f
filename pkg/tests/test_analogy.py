"""Divergence retrieval, majority voting, and analogical decisions."""

import math
from datetime import date

import pytest

from define_engine.analogy import (
    Neighbor,
    analogical_decision,
    kl_divergence,
    majority_vote,
    retrieve,
)
from define_engine.errors import (
    EmptyCorpus,
    IdxOutOfRange,
    MalformedResponse,
    SchemaMismatch,
    UnknownAction,
    ValidationError,
)
from define_engine.extractor import CannedClient
from define_engine.ingest import ProfileRecord
from define_engine.labeler import DecisionLabel
from define_engine.schema import FactorProfile

from ._sample import analogy_examples, mini_profile, random_profile
from .conftest import make_item_schema


def toy(probabilities, schema=None):
    schema = schema or make_item_schema(len(probabilities))
    return FactorProfile(schema, (tuple(probabilities),))


def direct_kl(p_rows, q_rows):
    """Independent summation oracle over per-factor distributions."""
    total = 0.0
    for p_row, q_row in zip(p_rows, q_rows):
        for p, q in zip(p_row, q_row):
            total += p * math.log(p / q)
    return total


class TestKlDivergence:
    def test_identity_is_zero(self, rng):
        profile = random_profile(rng)
        assert kl_divergence(profile, profile) == 0.0

    def test_worked_value(self):
        schema = make_item_schema(2)
        p = toy((0.75, 0.25), schema)
        q = toy((0.25, 0.75), schema)
        # 0.75*ln(3) + 0.25*ln(1/3) = 0.5*ln(3)
        assert kl_divergence(p, q) == pytest.approx(0.5 * math.log(3.0), abs=1e-9)

    def test_asymmetry(self):
        schema = make_item_schema(2)
        p = toy((0.9, 0.1), schema)
        q = toy((0.5, 0.5), schema)
        forward = kl_divergence(p, q)
        backward = kl_divergence(q, p)
        assert forward == pytest.approx(direct_kl([(0.9, 0.1)], [(0.5, 0.5)]), abs=1e-12)
        assert backward == pytest.approx(direct_kl([(0.5, 0.5)], [(0.9, 0.1)]), abs=1e-12)
        assert forward == pytest.approx(0.368, abs=5e-4)
        assert backward == pytest.approx(0.511, abs=5e-4)
        assert forward != backward

    def test_matches_direct_sum_on_full_profiles(self, rng):
        for _ in range(20):
            p = random_profile(rng)
            q = random_profile(rng)
            expected = direct_kl(p.probabilities, q.probabilities)
            assert kl_divergence(p, q) == pytest.approx(expected, abs=1e-12)

    def test_non_negative_and_zero_iff_equal(self, rng):
        for _ in range(200):
            p = random_profile(rng)
            q = random_profile(rng)
            div = kl_divergence(p, q)
            assert div >= -1e-12
            if p.probabilities == q.probabilities:
                assert abs(div) <= 1e-12
            else:
                assert div > 1e-12

    def test_equals_sum_of_per_factor_divergences(self, rng):
        p = random_profile(rng)
        q = random_profile(rng)
        schema = make_item_schema(2)
        per_factor = 0.0
        for p_row, q_row in zip(p.probabilities, q.probabilities):
            sub_schema = make_item_schema(len(p_row))
            per_factor += kl_divergence(
                FactorProfile(sub_schema, (p_row,)), FactorProfile(sub_schema, (q_row,))
            )
        assert kl_divergence(p, q) == pytest.approx(per_factor, abs=1e-12)

    def test_schema_mismatch(self, rng):
        with pytest.raises(SchemaMismatch):
            kl_divergence(random_profile(rng), toy((0.5, 0.5)))


def corpus_records(rng, n=12, schema=None):
    labels = list(DecisionLabel)
    return [
        ProfileRecord(
            profile_id=f"c{i:03d}",
            ticker=f"T{i % 4}",
            date=date(2024, 1, 1),
            profile=random_profile(rng, schema),
            label=labels[i % 5],
            sector="Tech",
        )
        for i in range(n)
    ]


class TestRetrieve:
    def test_exact_copy_retrieved_first(self, rng):
        corpus = corpus_records(rng)
        target = corpus[4].profile
        neighbors = retrieve(target, corpus, k=5)
        assert neighbors[0].profile_id == "c004"
        assert neighbors[0].divergence == 0.0

    def test_default_k_is_five(self, rng):
        import inspect

        assert inspect.signature(retrieve).parameters["k"].default == 5
        corpus = corpus_records(rng, n=9)
        neighbors = retrieve(random_profile(rng), corpus)
        assert len(neighbors) == 5

    def test_ascending_and_deterministic(self, rng):
        corpus = corpus_records(rng, n=30)
        target = random_profile(rng)
        a = retrieve(target, corpus, k=10)
        b = retrieve(target, corpus, k=10)
        assert a == b
        divergences = [n.divergence for n in a]
        assert divergences == sorted(divergences)

    def test_k_larger_than_corpus(self, rng):
        corpus = corpus_records(rng, n=3)
        neighbors = retrieve(random_profile(rng), corpus, k=10)
        assert len(neighbors) == 3

    def test_self_exclusion_by_id(self, rng):
        corpus = corpus_records(rng, n=6)
        target = corpus[0]
        neighbors = retrieve(target.profile, corpus, k=6, target_id=target.profile_id)
        assert all(n.profile_id != target.profile_id for n in neighbors)

    def test_exclude_ticker(self, rng):
        corpus = corpus_records(rng, n=8)
        neighbors = retrieve(random_profile(rng), corpus, k=8, exclude_ticker="T0")
        assert all(not n.profile_id.endswith(("000", "004")) for n in neighbors)

    def test_empty_corpus(self, rng):
        with pytest.raises(EmptyCorpus):
            retrieve(random_profile(rng), [], k=5)
        corpus = corpus_records(rng, n=1)
        with pytest.raises(EmptyCorpus):
            retrieve(corpus[0].profile, corpus, k=5, target_id=corpus[0].profile_id)

    def test_tie_break_by_profile_id(self, rng):
        profile = random_profile(rng)
        records = [
            ProfileRecord(
                profile_id=pid, ticker="T", date=date(2024, 1, 1),
                profile=profile, label=DecisionLabel.HOLD,
            )
            for pid in ("zz", "aa", "mm")
        ]
        neighbors = retrieve(profile, records, k=3)
        assert [n.profile_id for n in neighbors] == ["aa", "mm", "zz"]


class TestMajorityVote:
    def neighbor(self, pid, divergence, label):
        return Neighbor(profile_id=pid, divergence=divergence, label=label)

    def test_strict_majority(self):
        neighbors = [
            self.neighbor("a", 0.1, DecisionLabel.STRONG_BUY),
            self.neighbor("b", 0.2, DecisionLabel.STRONG_BUY),
            self.neighbor("c", 0.3, DecisionLabel.HOLD),
        ]
        assert majority_vote(neighbors) is DecisionLabel.STRONG_BUY

    def test_tie_goes_to_nearest(self):
        neighbors = [
            self.neighbor("a", 0.1, DecisionLabel.STRONG_BUY),
            self.neighbor("b", 0.2, DecisionLabel.HOLD),
        ]
        assert majority_vote(neighbors) is DecisionLabel.STRONG_BUY
        assert majority_vote(neighbors[::-1]) is DecisionLabel.HOLD

    def test_single_neighbor(self):
        assert majority_vote([self.neighbor("a", 0.5, DecisionLabel.SELL)]) is DecisionLabel.SELL

    def test_unanimous_any_order(self):
        neighbors = [
            self.neighbor(pid, d, DecisionLabel.BUY)
            for pid, d in (("a", 0.3), ("b", 0.1), ("c", 0.2))
        ]
        assert majority_vote(neighbors) is DecisionLabel.BUY
        assert majority_vote(list(reversed(neighbors))) is DecisionLabel.BUY

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            majority_vote([])


class TestAnalogicalDecision:
    def test_parses_fixture_reply(self):
        client = CannedClient(
            lambda exchange: '{"idx": 2, "recommendation": "buy", "justification": "closest match"}'
        )
        decision = analogical_decision(
            client, mini_profile(), analogy_examples(5), "ACME", date(2024, 5, 1)
        )
        assert decision.chosen_idx == 2
        assert decision.label is DecisionLabel.BUY
        assert decision.justification == "closest match"

    def test_idx_out_of_range(self):
        client = CannedClient(lambda e: '{"idx": 9, "recommendation": "buy", "justification": ""}')
        with pytest.raises(IdxOutOfRange):
            analogical_decision(
                client, mini_profile(), analogy_examples(5), "ACME", date(2024, 5, 1)
            )

    def test_malformed_reply(self):
        from define_engine.errors import MalformedJSON

        client = CannedClient(lambda e: "not json at all")
        with pytest.raises(MalformedJSON):
            analogical_decision(
                client, mini_profile(), analogy_examples(2), "ACME", date(2024, 5, 1)
            )
        missing_keys = CannedClient(lambda e: '{"recommendation": "buy"}')
        with pytest.raises(MalformedResponse):
            analogical_decision(
                missing_keys, mini_profile(), analogy_examples(2), "ACME", date(2024, 5, 1)
            )

    def test_unknown_action(self):
        client = CannedClient(
            lambda e: '{"idx": 1, "recommendation": "yolo", "justification": ""}'
        )
        with pytest.raises(UnknownAction):
            analogical_decision(
                client, mini_profile(), analogy_examples(3), "ACME", date(2024, 5, 1)
            )
