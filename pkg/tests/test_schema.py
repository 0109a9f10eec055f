"""Taxonomy, grade parsing, normalization, and profile flattening."""

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from define_engine.errors import ArityMismatch, UnknownGrade, ValidationError
from define_engine.schema import (
    Category,
    FactorProfile,
    FactorSchema,
    FactorSpec,
    LikelihoodGrade,
    OutcomeId,
    OutcomeSpec,
    Polarity,
    flatten,
    load_schema,
    normalize_factor,
    parse_grade,
    render_grade,
    save_schema,
    unflatten,
)

from ._sample import random_profile


class TestDefaultSchema:
    def test_fifteen_factors_and_33_items(self, schema):
        assert schema.n == 15
        assert schema.size == 33
        assert sum(f.arity for f in schema.factors) == 12 * 2 + 3 * 3

    def test_category_arities(self, schema):
        for factor in schema.factors:
            if factor.category is Category.HISTORICAL_METRIC:
                assert factor.arity == 3
                assert [o.name for o in factor.outcomes] == ["bullish", "stable", "bearish"]
            else:
                assert factor.arity == 2

    def test_natural_disasters_factor(self, schema):
        factor = schema.factor_by_name("Natural Disasters and Black Swan Events")
        assert factor.id == 3
        assert [(o.name, o.polarity) for o in factor.outcomes] == [
            ("major-impact", Polarity.NEGATIVE),
            ("unknown-or-uncertain", Polarity.NEUTRAL_UNCERTAIN),
        ]

    def test_historical_eps_factor(self, schema):
        factor = schema.factor_by_name("Historical EPS")
        assert factor.id == 12
        assert [o.name for o in factor.outcomes] == ["bullish", "stable", "bearish"]
        assert [o.polarity for o in factor.outcomes] == [
            Polarity.POSITIVE,
            Polarity.NEUTRAL_UNCERTAIN,
            Polarity.NEGATIVE,
        ]

    def test_unique_names_and_pairs(self, schema):
        names = [f.name for f in schema.factors]
        assert len(set(names)) == len(names)
        pairs = [(f.name, o.name) for f in schema.factors for o in f.outcomes]
        assert len(set(pairs)) == len(pairs)

    def test_polarity_partition_counts(self, schema):
        positive = schema.polarity_indices(Polarity.POSITIVE)
        negative = schema.polarity_indices(Polarity.NEGATIVE)
        neutral = schema.polarity_indices(Polarity.NEUTRAL_UNCERTAIN)
        assert len(positive) + len(negative) + len(neutral) == 33
        assert len(positive) == 12
        assert len(negative) == 6
        assert len(neutral) == 15

    def test_json_round_trip(self, schema, tmp_path):
        path = tmp_path / "schema.json"
        save_schema(schema, path)
        assert load_schema(path) == schema
        assert load_schema(path).content_hash() == schema.content_hash()

    def test_item_label(self, schema):
        assert schema.item_label(0) == "Economic Health (positive-outlook)"
        assert schema.item_label(OutcomeId(14, 2)) == "Historical Stock Prices (bearish)"


class TestSchemaValidation:
    def test_duplicate_factor_names_rejected(self):
        outcome = (OutcomeSpec("a", Polarity.POSITIVE), OutcomeSpec("b", Polarity.NEGATIVE))
        factors = (
            FactorSpec(0, "Same", Category.MACROECONOMIC, "", outcome),
            FactorSpec(1, "Same", Category.MACROECONOMIC, "", outcome),
        )
        with pytest.raises(ValidationError):
            FactorSchema(factors)

    def test_single_outcome_rejected(self):
        with pytest.raises(ValidationError):
            FactorSpec(0, "One", Category.MACROECONOMIC, "", (OutcomeSpec("a", Polarity.POSITIVE),))

    def test_flat_index_round_trip(self, schema):
        for flat in range(schema.size):
            assert schema.flat_index(schema.outcome_id(flat)) == flat

    def test_bad_schema_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"factors": "nope"}')
        with pytest.raises(ValidationError):
            load_schema(path)


class TestGrades:
    @pytest.mark.parametrize(
        "text,value",
        [
            ("very likely", 6),
            ("Somewhat_Unlikely", 3),
            ("VERY-UNLIKELY", 1),
            ("  likely ", 5),
            ("somewhat  likely", 4),
            ("unlikely", 2),
        ],
    )
    def test_parse_grade(self, text, value):
        assert parse_grade(text) == value

    def test_unknown_grade(self):
        with pytest.raises(UnknownGrade):
            parse_grade("maybe")

    def test_render_parse_round_trip(self):
        for grade in LikelihoodGrade:
            assert parse_grade(render_grade(grade)) is grade


class TestNormalizeFactor:
    def test_worked_examples(self):
        assert normalize_factor((6, 2)) == (0.75, 0.25)
        assert normalize_factor((6, 6)) == (0.5, 0.5)
        assert normalize_factor((5, 4, 1)) == (0.5, 0.4, 0.1)

    def test_arity_mismatch(self):
        with pytest.raises(ArityMismatch):
            normalize_factor((1, 2, 3), arity=2)
        with pytest.raises(ArityMismatch):
            normalize_factor((5,))

    def test_nonpositive_rejected(self):
        with pytest.raises(ValidationError):
            normalize_factor((0, 3))

    @given(st.lists(st.integers(min_value=1, max_value=6), min_size=2, max_size=6))
    def test_sums_to_one_with_floor(self, grades):
        probs = normalize_factor(grades)
        assert abs(sum(probs) - 1.0) <= 1e-9
        assert all(p >= 1.0 / (6 * len(grades)) for p in probs)

    @given(
        st.lists(st.integers(min_value=1, max_value=6), min_size=2, max_size=6),
        st.floats(min_value=0.001, max_value=1000.0),
    )
    def test_scale_invariance(self, grades, c):
        base = normalize_factor(grades)
        scaled = normalize_factor([c * g for g in grades])
        assert max(abs(a - b) for a, b in zip(base, scaled)) < 1e-9


class TestFactorProfile:
    def test_from_grades_validates(self, schema):
        grades = [(1,) * f.arity for f in schema.factors]
        profile = FactorProfile.from_grades(schema, grades)
        for row in profile.probabilities:
            assert abs(sum(row) - 1.0) <= 1e-9

    def test_bad_sum_rejected(self, schema):
        probs = [[0.4, 0.4]] + [[1.0 / f.arity] * f.arity for f in schema.factors[1:]]
        with pytest.raises(ValidationError):
            FactorProfile(schema, tuple(tuple(r) for r in probs))

    def test_wrong_arity_rejected(self, schema):
        grades = [(3,) * f.arity for f in schema.factors]
        grades[0] = (3, 3, 3)
        with pytest.raises(ArityMismatch):
            FactorProfile.from_grades(schema, grades)

    def test_flatten_ordering_and_sum(self, schema, rng):
        for _ in range(25):
            profile = random_profile(rng)
            flat = flatten(profile)
            assert flat.shape == (33,)
            assert flat[0] == profile.probabilities[0][0]
            assert flat[1] == profile.probabilities[0][1]
            assert abs(flat.sum() - schema.n) <= 1e-9

    def test_flatten_unflatten_round_trip(self, schema, rng):
        profile = random_profile(rng)
        rebuilt = unflatten(schema, flatten(profile))
        assert rebuilt == profile.probabilities

    def test_probability_accessor(self, schema):
        grades = [(6, 2)] + [(3,) * f.arity for f in schema.factors[1:]]
        profile = FactorProfile.from_grades(schema, grades)
        assert profile.probability(OutcomeId(0, 0)) == 0.75
