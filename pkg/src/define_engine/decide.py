"""Scoring profiles under a salience model and assigning five-way decisions.

A profile's score is the salience-weighted sum of its item probabilities.
The batch assigner ranks profiles by score and fills the five classes to
match a target count per class (most bullish classes first); the threshold
assigner maps a single score through four fixed cutpoints for online use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .btmodel import SalienceModel
from .errors import (
    CountMismatch,
    NonMonotoneCutpoints,
    SchemaMismatch,
    ValidationError,
)
from .labeler import LABEL_ORDER, DecisionLabel
from .schema import FactorProfile, flatten


@dataclass(frozen=True)
class DecisionScore:
    profile_id: str
    score: float

    def __post_init__(self):
        if not np.isfinite(self.score):
            raise ValidationError(f"score for {self.profile_id!r} is not finite")


def score_profile(profile: FactorProfile, model: SalienceModel) -> float:
    """Salience-weighted probability mass: sum_x p_x * P(x | transcript)."""
    if profile.schema.content_hash() != model.schema.content_hash():
        raise SchemaMismatch("profile and model use different schemas")
    return float(model.p @ flatten(profile))


def score_records(records, model: SalienceModel) -> list[DecisionScore]:
    """Score a batch of ProfileRecords."""
    return [DecisionScore(r.profile_id, score_profile(r.profile, model)) for r in records]


def assign_by_quantile(
    scores: Sequence[DecisionScore],
    target_counts: Mapping[DecisionLabel, int],
) -> dict[str, DecisionLabel]:
    """Fill the five classes by score rank to match the target counts.

    Profiles are sorted by descending score (ties by ascending profile_id)
    and the top counts[strong-buy] become strong-buy, the next counts[buy]
    become buy, and so on down to strong-sell.
    """
    counts = {label: int(target_counts.get(label, 0)) for label in LABEL_ORDER}
    if any(c < 0 for c in counts.values()):
        raise CountMismatch("target counts must be non-negative")
    total = sum(counts.values())
    if total != len(scores):
        raise CountMismatch(
            f"target counts sum to {total} but {len(scores)} profiles were scored"
        )
    if len({s.profile_id for s in scores}) != len(scores):
        raise ValidationError("scores contain duplicate profile ids")
    ranked = sorted(scores, key=lambda s: (-s.score, s.profile_id))
    assignment: dict[str, DecisionLabel] = {}
    position = 0
    for label in LABEL_ORDER:
        for _ in range(counts[label]):
            assignment[ranked[position].profile_id] = label
            position += 1
    return assignment


def assign_by_threshold(score: float, cutpoints: Sequence[float]) -> DecisionLabel:
    """Map one score through four ascending cutpoints (low score = bearish).

    With cutpoints (a, b, c, d): score < a is strong-sell, [a, b) sell,
    [b, c) hold, [c, d) buy, and >= d strong-buy.
    """
    cuts = [float(c) for c in cutpoints]
    if len(cuts) != 4:
        raise NonMonotoneCutpoints(f"expected 4 cutpoints, got {len(cuts)}")
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise NonMonotoneCutpoints(f"cutpoints must be strictly ascending: {cuts}")
    bearish_to_bullish = list(reversed(LABEL_ORDER))
    position = sum(float(score) >= c for c in cuts)
    return bearish_to_bullish[position]


def fit_cutpoints(
    scores: Sequence[DecisionScore],
    target_counts: Mapping[DecisionLabel, int],
) -> tuple[float, float, float, float]:
    """Derive threshold cutpoints from a calibration batch.

    Each cutpoint is the midpoint between the adjacent scores on either side
    of a class boundary under the quantile assignment, so thresholding the
    calibration scores reproduces that assignment (up to tied scores). Every
    class needs at least one member.
    """
    counts = {label: int(target_counts.get(label, 0)) for label in LABEL_ORDER}
    if any(c < 1 for c in counts.values()):
        raise ValidationError("fit_cutpoints needs at least one profile per class")
    if sum(counts.values()) != len(scores):
        raise CountMismatch(
            f"target counts sum to {sum(counts.values())} but got {len(scores)} scores"
        )
    ranked = sorted(scores, key=lambda s: (-s.score, s.profile_id))
    boundaries = []
    position = 0
    for label in LABEL_ORDER[:-1]:
        position += counts[label]
        upper = ranked[position - 1].score
        lower = ranked[position].score
        boundaries.append((upper + lower) / 2.0)
    # boundaries run bullish to bearish; cutpoints are reported ascending
    a, b, c, d = boundaries[3], boundaries[2], boundaries[1], boundaries[0]
    if not a < b < c < d:
        raise NonMonotoneCutpoints(
            "calibration scores are too tied to separate the classes"
        )
    return (a, b, c, d)
