"""Pairwise salience over outcome items, fitted from label-ordered profile pairs.

Labeled transcripts are paired A over B whenever A's decision label strictly
dominates B's in the comparison list (strong-buy over hold / sell /
strong-sell; buy over sell / strong-sell; hold over strong-sell - adjacent
classes are never paired). Each pair contributes expected-occurrence weights
to an M x M matrix: for every ordered item pair x != y,
``w[x, y] += P(x | A) * P(y | B)``. Item strengths are then fitted with the
minorization update

    p'_x = (sum_y w[x, y]) / (sum_{y != x} (w[x, y] + w[y, x]) / (p_x + p_y))

renormalized to the simplex each sweep. The fitted vector is the salience:
higher means the item carries more of the bullish-vs-bearish signal.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import (
    DegenerateMatrix,
    MissingProfile,
    NotConverged,
    SchemaMismatch,
    ValidationError,
)
from .ingest import ProfileRecord
from .labeler import DecisionLabel
from .schema import FactorProfile, FactorSchema, OutcomeId, default_schema, flatten

REGIMES = ("same-sector", "cross-sector", "same-company")

# Ordered label dominance used to build pairs: winner label beats loser label.
BEATS: frozenset[tuple[DecisionLabel, DecisionLabel]] = frozenset(
    {
        (DecisionLabel.STRONG_BUY, DecisionLabel.HOLD),
        (DecisionLabel.STRONG_BUY, DecisionLabel.SELL),
        (DecisionLabel.STRONG_BUY, DecisionLabel.STRONG_SELL),
        (DecisionLabel.BUY, DecisionLabel.SELL),
        (DecisionLabel.BUY, DecisionLabel.STRONG_SELL),
        (DecisionLabel.HOLD, DecisionLabel.STRONG_SELL),
    }
)


@dataclass(frozen=True)
class PreferencePair:
    winner_profile_id: str
    loser_profile_id: str
    regime: str


def _regime_allows(regime: str, a: ProfileRecord, b: ProfileRecord) -> bool:
    if regime == "same-sector":
        return a.sector is not None and a.sector == b.sector
    if regime == "cross-sector":
        return a.sector is not None and b.sector is not None and a.sector != b.sector
    if regime == "same-company":
        return a.ticker != "" and a.ticker == b.ticker
    raise ValidationError(f"unknown regime {regime!r}; expected one of {REGIMES}")


def preference_pairs(
    labeled: Sequence[ProfileRecord],
    regime: str,
    seed: int = 0,
    cap: int | None = None,
) -> list[PreferencePair]:
    """Emit winner-over-loser pairs for a regime, optionally downsampled.

    Records without a label are skipped. When more than `cap` candidate pairs
    exist, a uniform sample of size `cap` is drawn with the given seed; the
    surviving pairs keep their enumeration order, so a run is reproducible.
    """
    if regime not in REGIMES:
        raise ValidationError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    usable = [r for r in labeled if r.label is not None]
    candidates = [
        PreferencePair(a.profile_id, b.profile_id, regime)
        for a in usable
        for b in usable
        if a.profile_id != b.profile_id
        and (a.label, b.label) in BEATS
        and _regime_allows(regime, a, b)
    ]
    if cap is not None and cap < len(candidates):
        rng = random.Random(seed)
        keep = sorted(rng.sample(range(len(candidates)), cap))
        candidates = [candidates[i] for i in keep]
    return candidates


@dataclass(frozen=True)
class ComparisonMatrix:
    """M x M expected-occurrence win weights between outcome items."""

    weights: np.ndarray
    schema: FactorSchema

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        m = self.schema.size
        if w.shape != (m, m):
            raise ValidationError(f"weights must be {m}x{m}, got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite")
        if np.any(w < 0):
            raise ValidationError("weights must be non-negative")
        if np.any(np.diagonal(w) != 0):
            raise ValidationError("weight diagonal must be zero")


def accumulate(
    pairs: Sequence[PreferencePair],
    profiles: Mapping[str, FactorProfile],
    schema: FactorSchema | None = None,
    literal_diagonal: bool = False,
) -> ComparisonMatrix | np.ndarray:
    """Accumulate expected-occurrence weights over preference pairs.

    With ``literal_diagonal=True`` the same-item products
    ``P(x | A) * P(x | B)`` are accumulated instead, which populates only the
    matrix diagonal; the raw array is returned for inspection (it violates
    the zero-diagonal invariant and carries no ranking signal).
    """
    if schema is None:
        if profiles:
            schema = next(iter(profiles.values())).schema
        else:
            schema = default_schema()
    schema_hash = schema.content_hash()
    flat: dict[str, np.ndarray] = {}
    for pair in pairs:
        for pid in (pair.winner_profile_id, pair.loser_profile_id):
            if pid in flat:
                continue
            profile = profiles.get(pid)
            if profile is None:
                raise MissingProfile(f"pair references unknown profile {pid!r}")
            if profile.schema.content_hash() != schema_hash:
                raise SchemaMismatch(f"profile {pid!r} uses a different schema")
            flat[pid] = flatten(profile)
    m = schema.size
    if not pairs:
        empty = np.zeros((m, m))
        return empty if literal_diagonal else ComparisonMatrix(empty, schema)
    winners = np.stack([flat[p.winner_profile_id] for p in pairs])
    losers = np.stack([flat[p.loser_profile_id] for p in pairs])
    if literal_diagonal:
        w = np.zeros((m, m))
        np.fill_diagonal(w, (winners * losers).sum(axis=0))
        return w
    return ComparisonMatrix(_kernels.accumulate_outer(winners, losers), schema)


@dataclass(frozen=True)
class SalienceModel:
    """Fitted strengths on the simplex: one coefficient per outcome item."""

    p: np.ndarray
    iterations: int
    max_change: float
    schema: FactorSchema
    tol: float

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        object.__setattr__(self, "p", p)
        if p.shape != (self.schema.size,):
            raise ValidationError("strength vector length must equal the item count")
        if abs(float(p.sum()) - 1.0) > 1e-9:
            raise ValidationError("strengths must sum to 1")
        if np.any(p <= 0):
            raise ValidationError("strengths must be strictly positive")


def fit(
    matrix: ComparisonMatrix | np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 10000,
    epsilon: float = 1e-6,
    schema: FactorSchema | None = None,
) -> SalienceModel:
    """Fit item strengths from a comparison matrix.

    Before fitting, ``epsilon * max(weights)`` is added to every off-diagonal
    entry. That keeps the comparison graph connected and the fit strictly
    positive, and - because the smoothing scales with the weights - leaves
    the fit invariant to rescaling the matrix. A matrix with no information
    at all (all zeros) raises DegenerateMatrix.
    """
    if isinstance(matrix, ComparisonMatrix):
        w = matrix.weights
        schema = matrix.schema
    else:
        if schema is None:
            raise ValidationError("fitting a raw array requires a schema")
        w = np.asarray(matrix, dtype=np.float64)
    m = w.shape[0]
    if m < 2:
        raise DegenerateMatrix("need at least two items to compare")
    scale = float(w.max())
    if scale <= 0:
        raise DegenerateMatrix("comparison matrix has no weight anywhere")
    smoothed = w + epsilon * scale
    np.fill_diagonal(smoothed, 0.0)
    interaction = smoothed.sum(axis=0) + smoothed.sum(axis=1)
    if np.any(interaction == 0):
        dead = int(np.argmin(interaction))
        raise DegenerateMatrix(f"item {dead} has zero total interaction")
    p0 = np.full(m, 1.0 / m)
    p, iterations, max_change = _kernels.bt_fit_loop(smoothed, p0, tol, max_iter)
    if max_change >= tol:
        raise NotConverged(
            f"no convergence after {iterations} sweeps (last change {max_change:.3e})",
            last_p=p,
            max_change=max_change,
            iterations=iterations,
        )
    return SalienceModel(
        p=p, iterations=iterations, max_change=max_change, schema=schema, tol=tol
    )


def pairwise_prob(model: SalienceModel, x: OutcomeId, y: OutcomeId) -> float:
    """P(item x outranks item y) = p_x / (p_x + p_y)."""
    xi = model.schema.flat_index(x)
    yi = model.schema.flat_index(y)
    if xi == yi:
        raise ValidationError("pairwise probability needs two distinct items")
    px, py = float(model.p[xi]), float(model.p[yi])
    return px / (px + py)


def top_factors(model: SalienceModel, k: int) -> list[tuple[OutcomeId, float]]:
    """The k most salient items, descending; ties broken by flat index."""
    m = model.schema.size
    if not 1 <= k <= m:
        raise ValidationError(f"k must be in [1, {m}], got {k}")
    order = sorted(range(m), key=lambda i: (-model.p[i], i))
    return [(model.schema.outcome_id(i), float(model.p[i])) for i in order[:k]]


def save_model(
    model: SalienceModel,
    path: str | Path,
    regime: str | None = None,
    seed: int | None = None,
) -> None:
    doc = {
        "schema_hash": model.schema.content_hash(),
        "p": [float(v) for v in model.p],
        "iterations": model.iterations,
        "max_change": model.max_change,
        "tol": model.tol,
        "regime": regime,
        "seed": seed,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path, schema: FactorSchema | None = None) -> SalienceModel:
    schema = schema or default_schema()
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not JSON ({exc.msg})") from exc
    if doc.get("schema_hash") != schema.content_hash():
        raise SchemaMismatch(
            f"{path}: model was fitted against a different schema "
            f"(hash {doc.get('schema_hash')!r})"
        )
    return SalienceModel(
        p=np.asarray(doc["p"], dtype=np.float64),
        iterations=int(doc.get("iterations", 0)),
        max_change=float(doc.get("max_change", 0.0)),
        schema=schema,
        tol=float(doc.get("tol", 1e-8)),
    )
