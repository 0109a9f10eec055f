"""Metrics, experiment regimes, and the planted-signal synthetic corpus.

Evaluation is standard five-class machinery: accuracy, per-class
precision/recall/F1 (zero-division yields 0), unweighted macro averages, and
a gold-by-predicted confusion matrix. The synthetic corpus plants the
decision signal in one chosen outcome item so the whole pipeline - pairing,
matrix accumulation, strength fitting, quantile assignment - can be checked
against a generator whose answer is known by construction.
"""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Mapping, Sequence

import numpy as np

from . import decide, extractor
from .decide import DecisionScore
from .errors import DegenerateMatrix, IdMismatch, NotConverged, ValidationError
from .ingest import ProfileRecord
from .labeler import LABEL_ORDER, DecisionLabel, class_distribution
from .schema import (
    FactorProfile,
    FactorSchema,
    OutcomeId,
    Polarity,
    default_schema,
)

# Five-way label mix used when generating synthetic corpora: the observed
# 2024 test split (strong buy 34%, buy 15%, hold 21%, sell 9%, strong sell 21%).
DEFAULT_LABEL_MIX: dict[DecisionLabel, float] = {
    DecisionLabel.STRONG_BUY: 0.34,
    DecisionLabel.BUY: 0.15,
    DecisionLabel.HOLD: 0.21,
    DecisionLabel.SELL: 0.09,
    DecisionLabel.STRONG_SELL: 0.21,
}

SECTORS = (
    "Technology",
    "Financial Services",
    "Healthcare",
    "Consumer Cyclical",
    "Industrials",
    "Communication Services",
    "Consumer Defensive",
    "Energy",
    "Real Estate",
    "Basic Materials",
    "Utilities",
)


def _check_same_ids(preds: Mapping[str, DecisionLabel], golds: Mapping[str, DecisionLabel]):
    if set(preds) != set(golds):
        missing = set(golds) - set(preds)
        extra = set(preds) - set(golds)
        raise IdMismatch(
            f"prediction ids differ from gold ids "
            f"(missing {sorted(missing)[:3]}..., extra {sorted(extra)[:3]}...)"
        )


def confusion(
    preds: Mapping[str, DecisionLabel], golds: Mapping[str, DecisionLabel]
) -> np.ndarray:
    """5x5 count matrix, rows = gold class, columns = predicted class."""
    _check_same_ids(preds, golds)
    index = {label: i for i, label in enumerate(LABEL_ORDER)}
    matrix = np.zeros((5, 5), dtype=np.int64)
    for pid, gold in golds.items():
        matrix[index[gold], index[preds[pid]]] += 1
    return matrix


def confusion_csv(matrix: np.ndarray) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["gold\\pred"] + [label.value for label in LABEL_ORDER])
    for label, row in zip(LABEL_ORDER, matrix):
        writer.writerow([label.value] + [int(v) for v in row])
    return buffer.getvalue()


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class: dict[DecisionLabel, ClassMetrics]
    confusion: np.ndarray
    total: int

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "per_class": {
                label.value: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for label, m in self.per_class.items()
            },
            "confusion": [[int(v) for v in row] for row in self.confusion],
            "confusion_labels": [label.value for label in LABEL_ORDER],
        }


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def evaluate(
    preds: Mapping[str, DecisionLabel], golds: Mapping[str, DecisionLabel]
) -> EvalReport:
    """Multi-class metrics over the five decision labels."""
    matrix = confusion(preds, golds)
    total = int(matrix.sum())
    per_class = {}
    for i, label in enumerate(LABEL_ORDER):
        tp = float(matrix[i, i])
        precision = _safe_div(tp, float(matrix[:, i].sum()))
        recall = _safe_div(tp, float(matrix[i, :].sum()))
        f1 = _safe_div(2 * precision * recall, precision + recall)
        per_class[label] = ClassMetrics(
            precision=precision, recall=recall, f1=f1, support=int(matrix[i, :].sum())
        )
    return EvalReport(
        accuracy=_safe_div(float(np.trace(matrix)), float(total)),
        macro_precision=float(np.mean([m.precision for m in per_class.values()])),
        macro_recall=float(np.mean([m.recall for m in per_class.values()])),
        macro_f1=float(np.mean([m.f1 for m in per_class.values()])),
        per_class=per_class,
        confusion=matrix,
        total=total,
    )


@dataclass(frozen=True)
class AgreementReport:
    """How often system predictions match the nearest-example labels."""

    agreement_rate: float
    total: int
    table: dict[DecisionLabel, dict[DecisionLabel, float]]
    nearest_counts: dict[DecisionLabel, int]

    def to_dict(self) -> dict:
        return {
            "agreement_rate": self.agreement_rate,
            "total": self.total,
            "nearest_counts": {k.value: v for k, v in self.nearest_counts.items()},
            "table": {
                near.value: {pred.value: rate for pred, rate in row.items()}
                for near, row in self.table.items()
            },
        }


def agreement_analysis(
    system_preds: Mapping[str, DecisionLabel],
    nearest_labels: Mapping[str, DecisionLabel],
) -> AgreementReport:
    """Overall match rate plus, per nearest-label, the system prediction mix."""
    _check_same_ids(system_preds, nearest_labels)
    total = len(system_preds)
    if total == 0:
        raise ValidationError("agreement analysis needs at least one prediction")
    matches = sum(system_preds[pid] == nearest_labels[pid] for pid in system_preds)
    counts: dict[DecisionLabel, dict[DecisionLabel, int]] = {}
    for pid, near in nearest_labels.items():
        counts.setdefault(near, {})
        counts[near][system_preds[pid]] = counts[near].get(system_preds[pid], 0) + 1
    table = {
        near: {
            pred: row.get(pred, 0) / sum(row.values())
            for pred in LABEL_ORDER
            if row.get(pred, 0)
        }
        for near, row in counts.items()
    }
    return AgreementReport(
        agreement_rate=matches / total,
        total=total,
        table=table,
        nearest_counts={near: sum(row.values()) for near, row in counts.items()},
    )


def density_report(
    records: Sequence[ProfileRecord],
) -> dict[DecisionLabel, list[tuple[float, float]]]:
    """Per-label (positive-mass, negative-mass) pairs for density plotting.

    positive-mass is the mean probability across positive-polarity items,
    negative-mass across negative-polarity items. Emitted as data only;
    rendering happens elsewhere.
    """
    groups: dict[DecisionLabel, list[tuple[float, float]]] = {
        label: [] for label in LABEL_ORDER
    }
    for record in records:
        if record.label is None:
            raise ValidationError(f"profile {record.profile_id!r} has no label")
        schema = record.profile.schema
        flat = [p for row in record.profile.probabilities for p in row]
        pos = schema.polarity_indices(Polarity.POSITIVE)
        neg = schema.polarity_indices(Polarity.NEGATIVE)
        positive_mass = float(np.mean([flat[i] for i in pos])) if pos else 0.0
        negative_mass = float(np.mean([flat[i] for i in neg])) if neg else 0.0
        groups[record.label].append((positive_mass, negative_mass))
    return groups


def density_csv(report: Mapping[DecisionLabel, Sequence[tuple[float, float]]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["label", "positive_mass", "negative_mass"])
    for label in LABEL_ORDER:
        for positive_mass, negative_mass in report.get(label, ()):
            writer.writerow([label.value, repr(positive_mass), repr(negative_mass)])
    return buffer.getvalue()


# --- synthetic corpus ------------------------------------------------------------


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a planted-signal corpus.

    The planted item's grades are sampled per `grade_dist`; every other
    factor keeps a fixed grade pattern, so the planted item's probability is
    the only thing separating profiles. Labels follow the quantiles of that
    probability (most mass on top = most bullish), then `noise` of them are
    resampled uniformly at random.
    """

    seed: int
    size: int
    planted: OutcomeId
    noise: float = 0.0
    grade_dist: str = "uniform"  # "uniform" | "extreme"

    def __post_init__(self):
        if self.size < 5:
            raise ValidationError("synthetic corpora need at least 5 profiles")
        if not 0.0 <= self.noise <= 1.0:
            raise ValidationError(f"noise must be in [0, 1], got {self.noise}")
        if self.grade_dist not in ("uniform", "extreme"):
            raise ValidationError(f"unknown grade_dist {self.grade_dist!r}")


def label_mix_counts(
    n: int, mix: Mapping[DecisionLabel, float] | None = None
) -> dict[DecisionLabel, int]:
    """Apportion n items to the five classes by largest remainder."""
    mix = dict(mix) if mix is not None else dict(DEFAULT_LABEL_MIX)
    raw = {label: n * mix.get(label, 0.0) for label in LABEL_ORDER}
    counts = {label: int(raw[label]) for label in LABEL_ORDER}
    leftover = n - sum(counts.values())
    by_remainder = sorted(
        LABEL_ORDER, key=lambda lab: (-(raw[lab] - counts[lab]), lab.value)
    )
    for label in by_remainder[:leftover]:
        counts[label] += 1
    return counts


def synth_corpus(
    spec: SynthSpec, schema: FactorSchema | None = None
) -> list[ProfileRecord]:
    """Generate a seed-deterministic corpus with one planted signal item."""
    schema = schema or default_schema()
    planted_flat = schema.flat_index(spec.planted)  # validates the item
    planted_factor = schema.factors[spec.planted.factor_index]
    rng = np.random.default_rng(spec.seed)

    if spec.grade_dist == "uniform":
        sample = lambda size: rng.integers(1, 7, size=size)
    else:  # "extreme": pile weight on the 1 and 6 grades for wider spread
        weights = np.array([3, 1, 1, 1, 1, 3], dtype=np.float64)
        weights /= weights.sum()
        sample = lambda size: rng.choice(np.arange(1, 7), size=size, p=weights)

    n_tickers = max(1, spec.size // 12)
    records = []
    latents = []
    for i in range(spec.size):
        grades = []
        for factor in schema.factors:
            if factor.id == planted_factor.id:
                grades.append(tuple(int(v) for v in sample(factor.arity)))
            else:
                # fixed background pattern: varies by position, not by profile
                grades.append(
                    tuple(((factor.id + j) % 3) + 2 for j in range(factor.arity))
                )
        profile = FactorProfile.from_grades(schema, grades)
        profile_id = f"synth-{spec.seed}-{i:05d}"
        ticker_idx = i % n_tickers
        records.append(
            ProfileRecord(
                profile_id=profile_id,
                ticker=f"SYN{ticker_idx:04d}",
                date=date(2023, 1, 2) + timedelta(days=i),
                profile=profile,
                sector=SECTORS[ticker_idx % len(SECTORS)],
            )
        )
        latents.append(
            DecisionScore(profile_id, profile.probability(spec.planted))
        )

    assignment = decide.assign_by_quantile(latents, label_mix_counts(spec.size))
    flip = rng.random(spec.size) < spec.noise
    random_labels = rng.integers(0, len(LABEL_ORDER), size=spec.size)
    labeled = []
    for i, record in enumerate(records):
        label = assignment[record.profile_id]
        if flip[i]:
            label = LABEL_ORDER[int(random_labels[i])]
        labeled.append(
            ProfileRecord(
                profile_id=record.profile_id,
                ticker=record.ticker,
                date=record.date,
                profile=record.profile,
                label=label,
                sector=record.sector,
            )
        )
    return labeled


# --- experiment runners -----------------------------------------------------------


def knn_vote_predictions(
    records: Sequence[ProfileRecord], k: int = 5
) -> dict[str, DecisionLabel]:
    """Leave-one-out nearest-neighbor majority vote over a labeled corpus.

    Supports sweeping k to study how the neighbor count affects accuracy;
    each profile is predicted from the rest of the corpus only.
    """
    from . import analogy

    labeled = [r for r in records if r.label is not None]
    if len(labeled) < 2:
        raise ValidationError("leave-one-out voting needs at least two labeled profiles")
    preds = {}
    for record in labeled:
        neighbors = analogy.retrieve(
            record.profile, labeled, k=k, target_id=record.profile_id
        )
        preds[record.profile_id] = analogy.majority_vote(neighbors)
    return preds


@dataclass(frozen=True)
class CotCase:
    profile_id: str
    company: str
    announce_date: date
    payload_kind: str  # "transcript" | "summary" | "profile"
    payload: str


def run_cot_baseline(
    client: extractor.CompletionClient, cases: Sequence[CotCase]
) -> dict[str, DecisionLabel]:
    """Step-by-step decision baseline over prepared payloads."""
    preds = {}
    for case in cases:
        decision = extractor.cot_decision(
            client, case.payload, case.payload_kind, case.company, case.announce_date
        )
        preds[case.profile_id] = decision.label
    return preds


@dataclass(frozen=True)
class SectorGrid:
    sectors: tuple[str, ...]
    macro_f1: np.ndarray  # [train_sector, test_sector]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(["train\\test"] + list(self.sectors))
        for sector, row in zip(self.sectors, self.macro_f1):
            writer.writerow([sector] + [f"{v:.4f}" if np.isfinite(v) else "" for v in row])
        return buffer.getvalue()


def sector_grid(
    records: Sequence[ProfileRecord],
    seed: int = 0,
    cap: int | None = None,
    tol: float = 1e-8,
    max_iter: int = 10000,
) -> SectorGrid:
    """Train-on-sector-i / test-on-sector-j macro-F1 grid.

    Each cell fits strengths on pairs drawn within the training sector and
    quantile-assigns the test sector's profiles against its own gold counts.
    Cells whose training sector yields no usable pairs are NaN.
    """
    from . import btmodel  # local import keeps module load light

    labeled = [r for r in records if r.label is not None and r.sector is not None]
    sectors = tuple(sorted({r.sector for r in labeled}))
    if not sectors:
        raise ValidationError("sector grid needs labeled records with sectors")
    by_sector = {s: [r for r in labeled if r.sector == s] for s in sectors}
    grid = np.full((len(sectors), len(sectors)), np.nan)
    for i, train in enumerate(sectors):
        pairs = btmodel.preference_pairs(by_sector[train], "same-sector", seed=seed, cap=cap)
        if not pairs:
            continue
        profiles = {r.profile_id: r.profile for r in by_sector[train]}
        matrix = btmodel.accumulate(pairs, profiles)
        try:
            model = btmodel.fit(matrix, tol=tol, max_iter=max_iter)
        except (DegenerateMatrix, NotConverged):
            continue
        for j, test in enumerate(sectors):
            test_records = by_sector[test]
            scores = decide.score_records(test_records, model)
            golds = {r.profile_id: r.label for r in test_records}
            preds = decide.assign_by_quantile(scores, class_distribution(golds.values()))
            grid[i, j] = evaluate(preds, golds).macro_f1
    return SectorGrid(sectors=sectors, macro_f1=grid)
