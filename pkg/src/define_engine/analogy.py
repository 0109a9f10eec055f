"""Analogical retrieval over factor profiles and neighbor-based decisions.

Similarity between two profiles is the divergence of the target from the
candidate, summed over all outcome items in natural log (equivalently, the
sum of the per-factor divergences, since each factor is its own
distribution). Lower divergence = more analogous. Retrieval scans the whole
corpus exactly; with thousands of 33-float vectors an index would be noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Sequence

import numpy as np

from . import _kernels, extractor
from .errors import EmptyCorpus, SchemaMismatch, ValidationError
from .ingest import ProfileRecord
from .labeler import DecisionLabel
from .schema import FactorProfile, flatten


def kl_divergence(p: FactorProfile, q: FactorProfile) -> float:
    """Divergence of profile p from profile q (nats); 0 iff the profiles match."""
    if p.schema.content_hash() != q.schema.content_hash():
        raise SchemaMismatch("profiles use different schemas")
    return float(_kernels.kl_rows(flatten(p), flatten(q)[None, :])[0])


@dataclass(frozen=True)
class Neighbor:
    profile_id: str
    divergence: float
    label: DecisionLabel | None


def retrieve(
    target: FactorProfile,
    corpus: Sequence[ProfileRecord],
    k: int = 5,
    target_id: str | None = None,
    exclude_ticker: str | None = None,
) -> list[Neighbor]:
    """The up-to-k nearest corpus profiles, ascending by divergence.

    Ties break by ascending profile_id, so results are deterministic. The
    record whose id equals `target_id` is excluded (no self-retrieval when
    the target sits in its own corpus), as is any record with
    `exclude_ticker` when given.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    candidates = [
        r
        for r in corpus
        if (target_id is None or r.profile_id != target_id)
        and (exclude_ticker is None or r.ticker != exclude_ticker)
    ]
    if not candidates:
        raise EmptyCorpus("no candidate profiles to retrieve from")
    target_hash = target.schema.content_hash()
    for record in candidates:
        if record.profile.schema.content_hash() != target_hash:
            raise SchemaMismatch(
                f"profile {record.profile_id!r} uses a different schema"
            )
    stacked = np.stack([flatten(r.profile) for r in candidates])
    divergences = _kernels.kl_rows(flatten(target), stacked)
    order = sorted(
        range(len(candidates)),
        key=lambda i: (divergences[i], candidates[i].profile_id),
    )
    return [
        Neighbor(
            profile_id=candidates[i].profile_id,
            divergence=float(divergences[i]),
            label=candidates[i].label,
        )
        for i in order[: min(k, len(candidates))]
    ]


def majority_vote(neighbors: Sequence[Neighbor]) -> DecisionLabel:
    """Modal neighbor label; ties go to the nearest neighbor among the tied labels.

    Neighbors are taken in the order `retrieve` returns them (ascending
    divergence), so "nearest" is simply the first occurrence.
    """
    if not neighbors:
        raise ValidationError("majority_vote needs at least one neighbor")
    counts: dict[DecisionLabel, int] = {}
    for neighbor in neighbors:
        if neighbor.label is None:
            raise ValidationError(f"neighbor {neighbor.profile_id!r} has no label")
        counts[neighbor.label] = counts.get(neighbor.label, 0) + 1
    best = max(counts.values())
    tied = {label for label, count in counts.items() if count == best}
    for neighbor in neighbors:
        if neighbor.label in tied:
            return neighbor.label
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class AnalogicalDecision:
    chosen_idx: int
    label: DecisionLabel
    justification: str


def analogical_decision(
    client: extractor.CompletionClient,
    target: FactorProfile,
    examples: Sequence[tuple[FactorProfile, DecisionLabel]],
    company: str,
    announce_date: date,
) -> AnalogicalDecision:
    """Ask the completion client to pick the most analogous example and decide.

    `examples` come in retrieval order (nearest first); the response's idx is
    validated against [1, len(examples)].
    """
    exchange = extractor.build_analogy_prompt(examples, target, company, announce_date)
    reply = client.complete(exchange)
    idx, label, justification = extractor.parse_analogy_response(reply, len(examples))
    return AnalogicalDecision(chosen_idx=idx, label=label, justification=justification)
