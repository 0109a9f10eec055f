"""Five-way decision labels derived from post-announcement price movement.

Ground truth is read off the price series 30 calendar days after the
announcement (both anchors snapped forward to the next trading date):
a move above +5% is a strong buy, +2..+5% a buy, within ±2% a hold,
-2..-5% a sell, and below -5% a strong sell. The hold band is closed on
both ends and the buy/sell bands own their ±5 endpoints, so every return
maps to exactly one label.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date, timedelta
from enum import Enum
from typing import TYPE_CHECKING, Iterable

from .errors import InsufficientHistory, UnknownAction

if TYPE_CHECKING:
    from .ingest import PriceSeries


class DecisionLabel(Enum):
    STRONG_BUY = "strong-buy"
    BUY = "buy"
    HOLD = "hold"
    SELL = "sell"
    STRONG_SELL = "strong-sell"

    @property
    def rank(self) -> int:
        """Bullishness rank: strong-sell=0 .. strong-buy=4."""
        return _RANKS[self]

    def __lt__(self, other):
        if isinstance(other, DecisionLabel):
            return self.rank < other.rank
        return NotImplemented

    def __le__(self, other):
        if isinstance(other, DecisionLabel):
            return self.rank <= other.rank
        return NotImplemented

    def __gt__(self, other):
        if isinstance(other, DecisionLabel):
            return self.rank > other.rank
        return NotImplemented

    def __ge__(self, other):
        if isinstance(other, DecisionLabel):
            return self.rank >= other.rank
        return NotImplemented


_RANKS = {
    DecisionLabel.STRONG_SELL: 0,
    DecisionLabel.SELL: 1,
    DecisionLabel.HOLD: 2,
    DecisionLabel.BUY: 3,
    DecisionLabel.STRONG_BUY: 4,
}

# Most bullish first; the quantile assigner fills classes in this order.
LABEL_ORDER = (
    DecisionLabel.STRONG_BUY,
    DecisionLabel.BUY,
    DecisionLabel.HOLD,
    DecisionLabel.SELL,
    DecisionLabel.STRONG_SELL,
)

_LABEL_BY_TOKEN = {label.value.replace("-", " "): label for label in DecisionLabel}


def parse_label(text: str) -> DecisionLabel:
    """Parse tokens like "Strong Buy", "strong-buy", or "STRONG_BUY"."""
    token = re.sub(r"[\s_\-]+", " ", str(text).strip()).lower()
    label = _LABEL_BY_TOKEN.get(token)
    if label is None:
        raise UnknownAction(f"not a decision label: {text!r}")
    return label


def label_from_return(return_pct: float) -> DecisionLabel:
    """Map a percent return onto the five decision bands."""
    r = float(return_pct)
    if r > 5.0:
        return DecisionLabel.STRONG_BUY
    if r > 2.0:
        return DecisionLabel.BUY
    if r >= -2.0:
        return DecisionLabel.HOLD
    if r >= -5.0:
        return DecisionLabel.SELL
    return DecisionLabel.STRONG_SELL


@dataclass(frozen=True)
class LabeledReturn:
    label: DecisionLabel
    return_pct: float
    base_date: date
    horizon_date: date


def label_from_prices(
    series: "PriceSeries", announce_date: date, horizon_days: int = 30
) -> LabeledReturn:
    """Label one announcement from its surrounding price series.

    The base close is taken on the first trading date on or after the
    announcement; the horizon close on the first trading date on or after
    announcement + horizon_days.
    """
    if horizon_days < 1:
        raise ValueError("horizon_days must be >= 1")
    base_idx = series.first_on_or_after(announce_date)
    if base_idx is None:
        raise InsufficientHistory(
            f"{series.ticker or 'series'}: no trading date on or after {announce_date}"
        )
    target = announce_date + timedelta(days=horizon_days)
    horizon_idx = series.first_on_or_after(target)
    if horizon_idx is None:
        raise InsufficientHistory(
            f"{series.ticker or 'series'}: no trading date on or after {target} "
            f"({horizon_days}-day horizon)"
        )
    base_close = series.closes[base_idx]
    horizon_close = series.closes[horizon_idx]
    return_pct = 100.0 * (horizon_close - base_close) / base_close
    return LabeledReturn(
        label=label_from_return(return_pct),
        return_pct=return_pct,
        base_date=series.dates[base_idx],
        horizon_date=series.dates[horizon_idx],
    )


def class_distribution(labels: Iterable[DecisionLabel]) -> dict[DecisionLabel, int]:
    """Count labels per class; always returns all five classes."""
    counts = {label: 0 for label in LABEL_ORDER}
    for label in labels:
        counts[DecisionLabel(label)] += 1
    return counts
