"""Benchmark metrics over completed pricing episodes.

Every metric is a pure function of :class:`EpisodeRecord` values, and an
``EpisodeRecord`` can be built either from an in-memory
:class:`~cedesim.kernel.EpisodeOutcome` or from a persisted audit trace,
so reports are exactly recomputable after the fact.

Conventions
-----------
* Pricing variance is the sample variance (``n - 1`` denominator) of the
  recommended rate-on-line across episode seeds, averaged over treaties;
  reports normalise it so the rule-based pipeline reads 1.00.
* Capital efficiency is aggregate expected underwriting margin per unit
  of marginal diversified capital over accepted episodes, i.e.
  ``sum(premium - expected ceded) / sum(marginal SCR)`` with premiums
  already net of expenses. ``None`` when nothing was accepted.
* Interpretation error is the fraction of clauses whose operative
  reading differs from the issued wording, averaged over episodes.
* Coordination rounds is the mean number of negotiation rounds (internal
  reasoning stages for the single-agent profile); ``None`` for the
  rule-based pipeline, which exchanges no messages.
* Human intervention is the fraction of episodes escalated to a human
  (timeout, proven infeasibility, or an ex-post norm violation).
"""
from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Optional, Sequence

from ..core.audit import AuditChain
from ..kernel import EpisodeOutcome, Profile
from .config import PROFILE_ORDER

__all__ = [
    "MetricError",
    "EpisodeRecord",
    "MetricsRow",
    "DISPLAY_NAMES",
    "metric_pricing_variance",
    "metric_capital_efficiency",
    "metric_interpretation_error",
    "metric_coordination_rounds",
    "metric_human_intervention",
    "metric_norm_violations",
    "build_rows",
]

DISPLAY_NAMES: dict[str, str] = {
    Profile.RULE_BASED.value: "Rule-Based",
    Profile.SINGLE_AGENT.value: "Single-Agent",
    Profile.MULTI_AGENT.value: "Multi-Agent",
    Profile.NO_GOVERNANCE.value: "No-Governance",
}


class MetricError(ValueError):
    """A metric's preconditions are not met by the supplied episodes."""


@dataclass(frozen=True)
class EpisodeRecord:
    """The slice of one episode that benchmark metrics consume."""

    treaty_id: str
    profile: str
    seed: int
    recommended_rate: Optional[float]
    accepted: bool
    premium: float
    expected_ceded_true: float
    delta_scr_true: float
    clause_errors: int
    clause_total: int
    rounds: Optional[int]
    escalated: bool
    truth_violations: int

    @classmethod
    def from_outcome(cls, outcome: EpisodeOutcome) -> "EpisodeRecord":
        return cls.from_audit_lines(outcome.audit.to_lines())

    @classmethod
    def from_audit_lines(cls, lines: Sequence[str]) -> "EpisodeRecord":
        """Rebuild the record from a persisted, hash-chained trace."""
        chain = AuditChain.from_lines(lines)
        chain.verify()
        start: Optional[dict[str, Any]] = None
        outcome: Optional[dict[str, Any]] = None
        for entry in chain:
            payload = json.loads(entry.payload)
            if payload.get("type") == "episode_start":
                start = payload
            elif payload.get("type") == "outcome":
                outcome = payload
        if start is None or outcome is None:
            raise MetricError("trace lacks episode_start or outcome entry")
        rate = outcome["recommended_rate"]
        rounds = outcome["rounds"]
        return cls(
            treaty_id=str(start["treaty_id"]),
            profile=str(start["profile"]),
            seed=int(start["seed"]),
            recommended_rate=None if rate is None else float(rate),
            accepted=bool(outcome["accepted"]),
            premium=float(outcome["premium"]),
            expected_ceded_true=float(outcome["expected_ceded_true"]),
            delta_scr_true=float(outcome["delta_scr_true"]),
            clause_errors=int(outcome["clause_errors"]),
            clause_total=int(outcome["clause_total"]),
            rounds=None if rounds is None else int(rounds),
            escalated=bool(outcome["escalated"]),
            truth_violations=len(outcome["truth_violations"]),
        )


def metric_pricing_variance(records: Iterable[EpisodeRecord]) -> float:
    """Mean across-seed sample variance of the recommended rate-on-line.

    Raw (unnormalised). Requires episodes from at least two seeds;
    treaties with fewer than two recommendations are skipped.
    """
    records = list(records)
    if len({r.seed for r in records}) < 2:
        raise MetricError("pricing variance needs episodes from >= 2 seeds")
    rates_by_treaty: dict[str, list[float]] = {}
    for r in records:
        if r.recommended_rate is not None:
            rates_by_treaty.setdefault(r.treaty_id, []).append(
                r.recommended_rate)
    per_treaty = [statistics.variance(rates)
                  for rates in rates_by_treaty.values() if len(rates) >= 2]
    if not per_treaty:
        raise MetricError("no treaty has recommendations from >= 2 seeds")
    return statistics.fmean(per_treaty)


def metric_capital_efficiency(
        records: Iterable[EpisodeRecord]) -> Optional[float]:
    """Aggregate expected margin per unit of marginal SCR, accepted only.

    ``None`` when nothing was accepted; an error when accepted business
    carries zero aggregate marginal capital (the ratio is undefined).
    """
    accepted = [r for r in records if r.accepted]
    if not accepted:
        return None
    total_delta_scr = sum(r.delta_scr_true for r in accepted)
    if total_delta_scr == 0:
        raise MetricError(
            "accepted business with zero aggregate marginal SCR")
    margin = sum(r.premium - r.expected_ceded_true for r in accepted)
    return margin / total_delta_scr


def metric_interpretation_error(records: Iterable[EpisodeRecord]) -> float:
    """Mean fraction of clauses misread relative to the issued wording."""
    records = list(records)
    if not records:
        raise MetricError("no episodes supplied")
    for r in records:
        if r.clause_total <= 0:
            raise MetricError(f"episode {r.treaty_id} has no clauses")
    return statistics.fmean(r.clause_errors / r.clause_total for r in records)


def metric_coordination_rounds(
        records: Iterable[EpisodeRecord]) -> Optional[float]:
    """Mean rounds over episodes that negotiate; ``None`` if none do."""
    values = [r.rounds for r in records if r.rounds is not None]
    if not values:
        return None
    return statistics.fmean(values)


def metric_human_intervention(records: Iterable[EpisodeRecord]) -> float:
    """Fraction of episodes escalated to a human decision-maker."""
    records = list(records)
    if not records:
        raise MetricError("no episodes supplied")
    return sum(r.escalated for r in records) / len(records)


def metric_norm_violations(records: Iterable[EpisodeRecord]) -> int:
    """Total count of ex-post norm violations across episodes."""
    return sum(r.truth_violations for r in records)


@dataclass(frozen=True)
class MetricsRow:
    """One report row: a profile's five headline metrics plus context."""

    profile: str
    display_name: str
    pricing_variance: float  # normalised: rule-based == 1.0
    capital_efficiency: Optional[float]
    interpretation_error: float
    coordination_rounds: Optional[float]
    human_intervention: float
    norm_violations: int
    episodes: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "profile": self.profile,
            "display_name": self.display_name,
            "pricing_variance": self.pricing_variance,
            "capital_efficiency": self.capital_efficiency,
            "interpretation_error": self.interpretation_error,
            "coordination_rounds": self.coordination_rounds,
            "human_intervention": self.human_intervention,
            "norm_violations": self.norm_violations,
            "episodes": self.episodes,
        }


def build_rows(
        records_by_profile: Mapping[str, Sequence[EpisodeRecord]],
) -> list[MetricsRow]:
    """Compute the four canonical rows, normalising pricing variance.

    Requires all four profiles; the rule-based raw variance anchors the
    normalisation and must be positive.
    """
    missing = [p.value for p in PROFILE_ORDER
               if p.value not in records_by_profile]
    if missing:
        raise MetricError(f"missing profiles: {missing}")
    raw_variance = {name: metric_pricing_variance(records_by_profile[name])
                    for name in (p.value for p in PROFILE_ORDER)}
    baseline = raw_variance[Profile.RULE_BASED.value]
    if baseline <= 0:
        raise MetricError("rule-based pricing variance is zero; "
                          "cannot normalise")
    rows = []
    for profile in PROFILE_ORDER:
        records = records_by_profile[profile.value]
        rows.append(MetricsRow(
            profile=profile.value,
            display_name=DISPLAY_NAMES[profile.value],
            pricing_variance=raw_variance[profile.value] / baseline,
            capital_efficiency=metric_capital_efficiency(records),
            interpretation_error=metric_interpretation_error(records),
            coordination_rounds=metric_coordination_rounds(records),
            human_intervention=metric_human_intervention(records),
            norm_violations=metric_norm_violations(records),
            episodes=len(records),
        ))
    return rows
