"""Portfolio validation statistics against published market bands.

Four quantities, each flagged against its band: mean attachment/limit
ratio (bottom layer), share of Property Catastrophe treaties, share of
multi-peril (wind plus flood) treaties, and the portfolio 1-in-200 annual
loss divided by own funds.  The quantile convention is linear
interpolation between order statistics, shared with the capital engine.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from ..core.types import LineOfBusiness, Peril
from .generator import Portfolio

RATIO_BAND = (0.40, 0.55)
PROPERTY_CAT_BAND = (0.55, 0.70)
MULTI_PERIL_BAND = (0.30, 0.40)
TAIL_RATIO_BAND = (0.70, 0.85)


class ValidationError(ValueError):
    """Inputs unusable for validation (empty portfolio or sample set)."""


@dataclass(frozen=True)
class StatisticBand:
    name: str
    value: float
    sd: Optional[float]
    low: float
    high: float

    @property
    def ok(self) -> bool:
        return self.low <= self.value <= self.high

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "value": self.value,
            "sd": self.sd,
            "band": [self.low, self.high],
            "ok": self.ok,
        }


@dataclass(frozen=True)
class ValidationReport:
    statistics: tuple[StatisticBand, ...]

    @property
    def all_ok(self) -> bool:
        return all(s.ok for s in self.statistics)

    def to_dict(self) -> dict[str, Any]:
        return {
            "statistics": [s.to_dict() for s in self.statistics],
            "all_ok": self.all_ok,
        }


def attachment_ratios(portfolio: Portfolio) -> np.ndarray:
    """Bottom-layer attachment over limit, per treaty."""
    return np.array([
        t.layers[0].attachment / t.layers[0].limit for t in portfolio.treaties
    ])


def validate_statistics(portfolio: Portfolio,
                        annual_losses: Sequence[float],
                        own_funds: int) -> ValidationReport:
    """Compute the four banded statistics for one generated portfolio.

    ``annual_losses`` are simulated portfolio-level annual aggregate ceded
    losses; the 1-in-200 quantity is their 99.5% quantile over own funds.
    """
    if not portfolio.treaties:
        raise ValidationError("empty portfolio")
    losses = np.asarray(annual_losses, dtype=float)
    if losses.size == 0:
        raise ValidationError("no annual losses supplied")
    if own_funds <= 0:
        raise ValidationError("own_funds must be positive")

    n = len(portfolio.treaties)
    ratios = attachment_ratios(portfolio)
    pc_share = sum(
        1 for t in portfolio.treaties
        if t.line_of_business is LineOfBusiness.PROPERTY_CAT
    ) / n
    multi_share = sum(
        1 for t in portfolio.treaties
        if {Peril.WIND, Peril.FLOOD} <= t.perils
    ) / n
    tail_ratio = float(np.quantile(losses, 0.995)) / own_funds

    def binom_se(p: float) -> float:
        return float(np.sqrt(p * (1 - p) / n))

    return ValidationReport(statistics=(
        StatisticBand("attachment_limit_ratio", float(ratios.mean()),
                      float(ratios.std(ddof=1)) if n > 1 else None,
                      *RATIO_BAND),
        StatisticBand("property_cat_share", pc_share, binom_se(pc_share),
                      *PROPERTY_CAT_BAND),
        StatisticBand("multi_peril_share", multi_share, binom_se(multi_share),
                      *MULTI_PERIL_BAND),
        StatisticBand("tail_loss_over_capital", tail_ratio, None,
                      *TAIL_RATIO_BAND),
    ))
