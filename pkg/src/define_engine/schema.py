"""Factor taxonomy, verbalized-likelihood grades, and probability profiles.

The default taxonomy covers 15 investment factors in three groups:
macroeconomic, company-specific, and historical-metric. The first twelve
factors carry two possible outcomes each, the three historical factors carry
three (bullish / stable / bearish), for 33 outcome items total. Schemas are
data: any taxonomy with >= 2 outcomes per factor can be loaded from JSON.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum, IntEnum
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ArityMismatch, UnknownGrade, ValidationError

PROB_ATOL = 1e-9


class Category(str, Enum):
    MACROECONOMIC = "macroeconomic"
    COMPANY_SPECIFIC = "company-specific"
    HISTORICAL_METRIC = "historical-metric"


class Polarity(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL_UNCERTAIN = "neutral-uncertain"


class LikelihoodGrade(IntEnum):
    """Six ordered confidence grades with fixed numeric values."""

    VERY_UNLIKELY = 1
    UNLIKELY = 2
    SOMEWHAT_UNLIKELY = 3
    SOMEWHAT_LIKELY = 4
    LIKELY = 5
    VERY_LIKELY = 6

    @property
    def text(self) -> str:
        return self.name.lower().replace("_", " ")


_GRADE_BY_TEXT = {g.text: g for g in LikelihoodGrade}


def _normalize_token(text: str) -> str:
    """Case-fold and collapse hyphens/underscores/whitespace runs to one space."""
    return re.sub(r"[\s_\-]+", " ", text.strip()).lower()


def parse_grade(text: str) -> LikelihoodGrade:
    """Parse a likelihood token such as "Somewhat_Unlikely" into a grade."""
    grade = _GRADE_BY_TEXT.get(_normalize_token(text))
    if grade is None:
        raise UnknownGrade(f"not a likelihood grade: {text!r}")
    return grade


def render_grade(grade: LikelihoodGrade | int) -> str:
    return LikelihoodGrade(grade).text


def grade_vocabulary() -> tuple[str, ...]:
    """The six grade tokens, most likely first (prompt-facing order)."""
    return tuple(g.text for g in sorted(LikelihoodGrade, reverse=True))


@dataclass(frozen=True)
class OutcomeSpec:
    name: str
    polarity: Polarity

    def __post_init__(self):
        if not self.name.strip():
            raise ValidationError("outcome name must be non-empty")
        object.__setattr__(self, "polarity", Polarity(self.polarity))


@dataclass(frozen=True)
class FactorSpec:
    id: int
    name: str
    category: Category
    description: str
    outcomes: tuple[OutcomeSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        object.__setattr__(self, "category", Category(self.category))
        if not self.name.strip():
            raise ValidationError("factor name must be non-empty")
        if len(self.outcomes) < 2:
            raise ValidationError(f"factor {self.name!r} needs at least 2 outcomes")
        names = [o.name for o in self.outcomes]
        if len(set(names)) != len(names):
            raise ValidationError(f"factor {self.name!r} repeats an outcome name")

    @property
    def arity(self) -> int:
        return len(self.outcomes)


@dataclass(frozen=True)
class OutcomeId:
    """Position of one outcome item: (factor index, outcome index within factor)."""

    factor_index: int
    outcome_index: int


@dataclass(frozen=True)
class FactorSchema:
    factors: tuple[FactorSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValidationError("schema needs at least one factor")
        for expected, factor in enumerate(self.factors):
            if factor.id != expected:
                raise ValidationError(
                    f"factor ids must be consecutive from 0; got {factor.id} at {expected}"
                )
        names = [f.name for f in self.factors]
        if len(set(names)) != len(names):
            raise ValidationError("factor names must be unique")
        offsets, total = [], 0
        for factor in self.factors:
            offsets.append(total)
            total += factor.arity
        object.__setattr__(self, "_offsets", tuple(offsets))
        object.__setattr__(self, "_size", total)
        object.__setattr__(
            self, "_by_name", {_normalize_token(f.name): f for f in self.factors}
        )

    @property
    def n(self) -> int:
        """Number of factors."""
        return len(self.factors)

    @property
    def size(self) -> int:
        """Total number of outcome items across all factors (M)."""
        return self._size

    def arities(self) -> tuple[int, ...]:
        return tuple(f.arity for f in self.factors)

    def factor_by_name(self, name: str) -> FactorSpec:
        factor = self._by_name.get(_normalize_token(name))
        if factor is None:
            raise ValidationError(f"no factor named {name!r}")
        return factor

    def flat_index(self, item: OutcomeId) -> int:
        if not 0 <= item.factor_index < self.n:
            raise ValidationError(f"factor index {item.factor_index} out of range")
        factor = self.factors[item.factor_index]
        if not 0 <= item.outcome_index < factor.arity:
            raise ValidationError(
                f"outcome index {item.outcome_index} out of range for {factor.name!r}"
            )
        return self._offsets[item.factor_index] + item.outcome_index

    def outcome_id(self, flat: int) -> OutcomeId:
        if not 0 <= flat < self.size:
            raise ValidationError(f"flat index {flat} out of range [0, {self.size})")
        for i in reversed(range(self.n)):
            if flat >= self._offsets[i]:
                return OutcomeId(i, flat - self._offsets[i])
        raise AssertionError("unreachable")

    def item_label(self, item: OutcomeId | int) -> str:
        """Human-readable "Factor Name (outcome-name)" for reports."""
        if isinstance(item, int):
            item = self.outcome_id(item)
        factor = self.factors[item.factor_index]
        return f"{factor.name} ({factor.outcomes[item.outcome_index].name})"

    def item_polarity(self, flat: int) -> Polarity:
        item = self.outcome_id(flat)
        return self.factors[item.factor_index].outcomes[item.outcome_index].polarity

    def polarity_indices(self, polarity: Polarity) -> tuple[int, ...]:
        return tuple(
            i for i in range(self.size) if self.item_polarity(i) is Polarity(polarity)
        )

    def to_json_dict(self) -> dict:
        return {
            "factors": [
                {
                    "id": f.id,
                    "name": f.name,
                    "category": f.category.value,
                    "description": f.description,
                    "outcomes": [
                        {"name": o.name, "polarity": o.polarity.value}
                        for o in f.outcomes
                    ],
                }
                for f in self.factors
            ]
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "FactorSchema":
        try:
            factors = tuple(
                FactorSpec(
                    id=int(f["id"]),
                    name=str(f["name"]),
                    category=Category(f["category"]),
                    description=str(f.get("description", "")),
                    outcomes=tuple(
                        OutcomeSpec(str(o["name"]), Polarity(o["polarity"]))
                        for o in f["outcomes"]
                    ),
                )
                for f in data["factors"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad schema document: {exc}") from exc
        return cls(factors)

    def content_hash(self) -> str:
        canonical = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_schema(schema: FactorSchema, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(schema.to_json_dict(), indent=2) + "\n", encoding="utf-8"
    )


def load_schema(path: str | Path) -> FactorSchema:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"schema file {path}: {exc}") from exc
    return FactorSchema.from_json_dict(data)


def normalize_factor(
    grades: Sequence[float], arity: int | None = None
) -> tuple[float, ...]:
    """Convert one factor's grade values into outcome probabilities.

    Each probability is the grade value divided by the factor's grade-value
    sum, so the vector always sums to 1. Raises ArityMismatch when the list
    length disagrees with the expected outcome count.
    """
    values = [float(g) for g in grades]
    if arity is not None and len(values) != arity:
        raise ArityMismatch(f"expected {arity} grades, got {len(values)}")
    if len(values) < 2:
        raise ArityMismatch("a factor needs at least 2 graded outcomes")
    for v in values:
        if not np.isfinite(v) or v <= 0:
            raise ValidationError(f"grade values must be positive and finite, got {v}")
    total = sum(values)
    return tuple(v / total for v in values)


def _check_grade_value(value: int) -> int:
    try:
        return int(LikelihoodGrade(int(value)))
    except ValueError as exc:
        raise UnknownGrade(f"grade value must be in 1..6, got {value!r}") from exc


@dataclass(frozen=True)
class FactorProfile:
    """Per-factor outcome probability distributions for one transcript.

    `probabilities[i][j]` is the probability of factor i resolving to its
    j-th outcome; each factor's vector sums to 1 and every entry is strictly
    positive. `grades` keeps the raw 1..6 values the probabilities were
    normalized from, when known (required for lossless persistence).
    """

    schema: FactorSchema
    probabilities: tuple[tuple[float, ...], ...]
    summaries: tuple[str, ...] = ()
    grades: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        probs = tuple(tuple(float(p) for p in row) for row in self.probabilities)
        object.__setattr__(self, "probabilities", probs)
        if not self.summaries:
            object.__setattr__(self, "summaries", ("",) * self.schema.n)
        else:
            object.__setattr__(self, "summaries", tuple(str(s) for s in self.summaries))
        if len(probs) != self.schema.n:
            raise ArityMismatch(
                f"profile has {len(probs)} factors, schema has {self.schema.n}"
            )
        if len(self.summaries) != self.schema.n:
            raise ArityMismatch("one summary per factor required")
        for factor, row in zip(self.schema.factors, probs):
            if len(row) != factor.arity:
                raise ArityMismatch(
                    f"factor {factor.name!r} expects {factor.arity} probabilities, "
                    f"got {len(row)}"
                )
            if any(not np.isfinite(p) or p <= 0 for p in row):
                raise ValidationError(
                    f"factor {factor.name!r} has a non-positive probability"
                )
            if abs(sum(row) - 1.0) > PROB_ATOL:
                raise ValidationError(
                    f"factor {factor.name!r} probabilities sum to {sum(row)!r}, not 1"
                )
        if self.grades is not None:
            g = tuple(tuple(_check_grade_value(v) for v in row) for row in self.grades)
            object.__setattr__(self, "grades", g)
            if tuple(len(r) for r in g) != self.schema.arities():
                raise ArityMismatch("grade rows must match schema arities")

    @classmethod
    def from_grades(
        cls,
        schema: FactorSchema,
        grades: Sequence[Sequence[int]],
        summaries: Sequence[str] | None = None,
    ) -> "FactorProfile":
        grades = tuple(tuple(int(v) for v in row) for row in grades)
        if len(grades) != schema.n:
            raise ArityMismatch(
                f"expected grades for {schema.n} factors, got {len(grades)}"
            )
        probs = tuple(
            normalize_factor(row, arity=factor.arity)
            for factor, row in zip(schema.factors, grades)
        )
        return cls(
            schema=schema,
            probabilities=probs,
            summaries=tuple(summaries) if summaries is not None else (),
            grades=grades,
        )

    def probability(self, item: OutcomeId) -> float:
        return self.probabilities[item.factor_index][item.outcome_index]


def flatten(profile: FactorProfile) -> np.ndarray:
    """Concatenate per-factor probability vectors in schema order."""
    return np.fromiter(
        (p for row in profile.probabilities for p in row),
        dtype=np.float64,
        count=profile.schema.size,
    )


def unflatten(schema: FactorSchema, vector: Sequence[float]) -> tuple[tuple[float, ...], ...]:
    """Split a length-M vector back into per-factor probability tuples."""
    values = tuple(float(v) for v in vector)
    if len(values) != schema.size:
        raise ArityMismatch(f"expected {schema.size} values, got {len(values)}")
    rows = []
    pos = 0
    for factor in schema.factors:
        rows.append(values[pos : pos + factor.arity])
        pos += factor.arity
    return tuple(rows)


def _spec(name, category, description, outcomes):
    return dict(name=name, category=category, description=description, outcomes=outcomes)


_POS = Polarity.POSITIVE
_NEG = Polarity.NEGATIVE
_NEU = Polarity.NEUTRAL_UNCERTAIN

_HISTORICAL_OUTCOMES = (
    OutcomeSpec("bullish", _POS),
    OutcomeSpec("stable", _NEU),
    OutcomeSpec("bearish", _NEG),
)

_DEFAULT_FACTORS = (
    _spec(
        "Economic Health",
        Category.MACROECONOMIC,
        "Overall strength of the economy reflected in the call: growth, "
        "employment, inflation, and the demand environment management describes.",
        (OutcomeSpec("positive-outlook", _POS), OutcomeSpec("unknown-or-uncertain", _NEU)),
    ),
    _spec(
        "Market Sentiment and Investor Psychology",
        Category.MACROECONOMIC,
        "Prevailing investor mood toward the company and its market, including "
        "the enthusiasm or anxiety conveyed around the announcement.",
        (OutcomeSpec("optimistic", _POS), OutcomeSpec("unknown-or-uncertain", _NEU)),
    ),
    _spec(
        "Political Events and Government Policies",
        Category.MACROECONOMIC,
        "Elections, legislation, and fiscal or trade policy shifts that could "
        "move the company's markets.",
        (OutcomeSpec("major-upheaval", _NEG), OutcomeSpec("unknown-or-uncertain", _NEU)),
    ),
    _spec(
        "Natural Disasters and Black Swan Events",
        Category.MACROECONOMIC,
        "Rare, high-impact events such as disasters or pandemics that disrupt "
        "operations, supply, or demand.",
        (OutcomeSpec("major-impact", _NEG), OutcomeSpec("unknown-or-uncertain", _NEU)),
    ),
    _spec(
        "Geopolitical Issues",
        Category.MACROECONOMIC,
        "International tensions, conflicts, or sanctions affecting sourcing, "
        "demand, or market access.",
        (OutcomeSpec("escalation-to-conflict", _NEG), OutcomeSpec("unknown-or-uncertain", _NEU)),
    ),
    _spec(
        "Mergers and Major Acquisitions",
        Category.COMPANY_SPECIFIC,
        "Completed or announced M&A activity and its expected effect on the "
        "business.",
        (OutcomeSpec("happened-positive-outlook", _POS), OutcomeSpec("unknown-or-uncertain", _NEU)),
    ),
    _spec(
        "Regulatory Changes and Legal Issues",
        Category.COMPANY_SPECIFIC,
        "New regulation, litigation, or compliance developments that open "
        "opportunities or create burdens for the company.",
        (OutcomeSpec("positive-outlook", _POS), OutcomeSpec("unknown-or-uncertain", _NEU)),
    ),
    _spec(
        "Financial Health",
        Category.COMPANY_SPECIFIC,
        "Balance-sheet strength: margins, cash flow, debt levels, and liquidity "
        "as discussed in the call.",
        (OutcomeSpec("positive-outlook", _POS), OutcomeSpec("unknown-or-uncertain", _NEU)),
    ),
    _spec(
        "Company Growth",
        Category.COMPANY_SPECIFIC,
        "Trajectory of the company's expansion: customers, markets, capacity, "
        "and forward guidance.",
        (OutcomeSpec("positive-outlook", _POS), OutcomeSpec("unknown-or-uncertain", _NEU)),
    ),
    _spec(
        "Company Product Launches",
        Category.COMPANY_SPECIFIC,
        "New products or services introduced or scheduled, and their expected "
        "reception.",
        (OutcomeSpec("happened-positive-outlook", _POS), OutcomeSpec("unknown-or-uncertain", _NEU)),
    ),
    _spec(
        "Supply Chain",
        Category.COMPANY_SPECIFIC,
        "Sourcing, logistics, and production pipeline condition, including "
        "constraints or easing called out by management.",
        (OutcomeSpec("positive-outlook", _POS), OutcomeSpec("unknown-or-uncertain", _NEU)),
    ),
    _spec(
        "Technological Innovation",
        Category.COMPANY_SPECIFIC,
        "R&D progress and adoption of new technology that could change the "
        "company's competitive position.",
        (OutcomeSpec("positive-outlook", _POS), OutcomeSpec("unknown-or-uncertain", _NEU)),
    ),
    _spec(
        "Historical EPS",
        Category.HISTORICAL_METRIC,
        "Trend in reported earnings per share over recent quarters.",
        _HISTORICAL_OUTCOMES,
    ),
    _spec(
        "Historical Revenue",
        Category.HISTORICAL_METRIC,
        "Trend in reported revenue over recent quarters.",
        _HISTORICAL_OUTCOMES,
    ),
    _spec(
        "Historical Stock Prices",
        Category.HISTORICAL_METRIC,
        "Trend in the company's share price leading up to the announcement.",
        _HISTORICAL_OUTCOMES,
    ),
)

_DEFAULT_SCHEMA = FactorSchema(
    tuple(FactorSpec(id=i, **spec) for i, spec in enumerate(_DEFAULT_FACTORS))
)


def default_schema() -> FactorSchema:
    """The built-in 15-factor taxonomy (33 outcome items)."""
    return _DEFAULT_SCHEMA
