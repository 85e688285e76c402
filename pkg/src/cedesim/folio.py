"""Portfolio engine: recoveries, accumulation, tail VaR, retrocession.

Recovery arithmetic is exact 64-bit integer work; the only floats here are
quantiles and premium fractions.  The hours-clause grouping rule is
greedy and first-event-anchored: the earliest ungrouped event opens an
occurrence and every event within H hours of it joins; the next event
after the window opens the next occurrence.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .core.types import (
    ExclusionKind,
    LineOfBusiness,
    Peril,
    RetroKind,
    Treaty,
)
from .perils import EventLossTable, EventOccurrence, HazardSample


class RecoveryInputError(ValueError):
    """Recovery inputs outside their preconditions (unordered sequence)."""


class ComputationError(ValueError):
    """Statistic requested on an empty sample set."""


# ---------------------------------------------------------------------------
# Layer arithmetic.


def layer_recovery(loss: int, attachment: int, limit: int) -> int:
    """Ceded amount of one occurrence to one layer: clip into the band."""
    if loss < 0:
        raise RecoveryInputError(f"loss must be >= 0, got {loss}")
    return min(max(loss - attachment, 0), limit)


@dataclass(frozen=True)
class EventLoss:
    """One event's ground-up subject loss for a specific treaty."""

    time_h: float
    peril: Peril
    gross: int
    tags: frozenset[str] = frozenset()
    event_id: str = ""

    def __post_init__(self) -> None:
        if self.gross < 0:
            raise RecoveryInputError("gross must be >= 0")


@dataclass(frozen=True)
class LayerRecovery:
    recovered: int
    reinstated: int  # limit amount restored, charged at the pro-rata pct


@dataclass(frozen=True)
class RecoveryResult:
    occurrence_losses: tuple[int, ...]  # aggregated per occurrence group
    layer_recoveries: tuple[LayerRecovery, ...]

    @property
    def recovered(self) -> int:
        return sum(l.recovered for l in self.layer_recoveries)

    @property
    def reinstated(self) -> int:
        return sum(l.reinstated for l in self.layer_recoveries)

    def reinstatement_premium_fraction(self, treaty: Treaty) -> float:
        """Reinstatement premium as a fraction of the annual premium.

        Each layer pays pct * (reinstated / limit) of its annual layer
        premium; layers are weighted by limit within the treaty premium.
        """
        total_limit = treaty.total_limit
        fraction = 0.0
        for layer, rec in zip(treaty.layers, self.layer_recoveries):
            if rec.reinstated:
                fraction += (
                    layer.reinstatement_premium_pct
                    * (rec.reinstated / layer.limit)
                    * (layer.limit / total_limit)
                )
        return fraction


def covered_gross(treaty: Treaty, peril: Peril, gross: int,
                  tags: frozenset[str]) -> int:
    """Apply peril coverage and exclusion scope to an event's gross loss."""
    if peril not in treaty.perils:
        return 0
    excluded = treaty.excluded_kinds
    if ExclusionKind.FLOOD in excluded and peril is Peril.FLOOD:
        return 0
    if ExclusionKind.WILDFIRE in excluded and peril is Peril.WILDFIRE:
        return 0
    if ExclusionKind.STORM_SURGE in excluded and "storm_surge" in tags:
        return 0
    return gross


def group_occurrences(events: Sequence[EventLoss],
                      hours_clause: Optional[int]) -> list[list[EventLoss]]:
    """Greedy first-event-anchored grouping under an hours clause."""
    groups: list[list[EventLoss]] = []
    anchor_time = 0.0
    for event in events:
        if (groups and hours_clause is not None
                and event.time_h - anchor_time <= hours_clause):
            groups[-1].append(event)
        else:
            groups.append([event])
            anchor_time = event.time_h
    return groups


def treaty_recovery(events: Sequence[EventLoss], treaty: Treaty) -> RecoveryResult:
    """Annual treaty recovery over a time-ordered event sequence.

    Events are filtered by coverage and exclusions, grouped into
    occurrences under the hours clause, and run through each layer in
    occurrence order with reinstatement-limited annual capacity.
    """
    for a, b in zip(events, events[1:]):
        if b.time_h < a.time_h:
            raise RecoveryInputError(
                f"event sequence not time-ordered at t={b.time_h}"
            )
    subject = [
        EventLoss(e.time_h, e.peril, g, e.tags, e.event_id)
        for e in events
        if (g := covered_gross(treaty, e.peril, e.gross, e.tags)) > 0
    ]
    groups = group_occurrences(subject, treaty.hours_clause)
    occurrence_losses = tuple(sum(e.gross for e in g) for g in groups)

    layer_results = []
    for layer in treaty.layers:
        capacity = layer.limit * (1 + layer.reinstatements)
        recovered = 0
        for occ in occurrence_losses:
            take = min(layer_recovery(occ, layer.attachment, layer.limit),
                       capacity - recovered)
            recovered += take
        reinstated = min(recovered, layer.limit * layer.reinstatements)
        layer_results.append(LayerRecovery(recovered=recovered,
                                           reinstated=reinstated))
    return RecoveryResult(occurrence_losses=occurrence_losses,
                          layer_recoveries=tuple(layer_results))


# ---------------------------------------------------------------------------
# Whole-book annual cession, the vectorized path over a hazard sample.


def subject_gross_vector(table: EventLossTable, treaty: Treaty) -> np.ndarray:
    """Per-catalog-event subject gross for one treaty, filters applied."""
    casualty = treaty.line_of_business is LineOfBusiness.CASUALTY
    matrix = table.casualty_matrix if casualty else table.property_matrix
    cols = [i for i, z in enumerate(table.zones) if z in treaty.zones]
    gross = matrix[:, cols].sum(axis=1) if cols else np.zeros(
        len(table.event_ids), dtype=np.int64)
    peril_ok = np.array([p in treaty.perils for p in table.event_perils])
    excluded = treaty.excluded_kinds
    if ExclusionKind.FLOOD in excluded:
        peril_ok &= np.array([p is not Peril.FLOOD for p in table.event_perils])
    if ExclusionKind.WILDFIRE in excluded:
        peril_ok &= np.array(
            [p is not Peril.WILDFIRE for p in table.event_perils])
    mask = peril_ok.copy()
    if ExclusionKind.STORM_SURGE in excluded:
        mask &= ~table.surge_tagged
    return np.where(mask, gross, 0)


@dataclass(frozen=True)
class AnnualCession:
    """Per-year ceded losses and reinstatement premium fractions."""

    ceded: np.ndarray                 # int64 [n_years]
    reinstatement_fraction: np.ndarray  # float [n_years]

    @property
    def expected_ceded(self) -> float:
        return float(self.ceded.mean())

    @property
    def ceded_sd(self) -> float:
        return float(self.ceded.std(ddof=1)) if len(self.ceded) > 1 else 0.0


def annual_cession(sample: HazardSample, table: EventLossTable,
                   treaty: Treaty) -> AnnualCession:
    """Ceded loss per simulated year for one treaty.

    Equivalent to running treaty_recovery year by year (property-tested
    against it); skips years with no subject events.
    """
    gross_by_event = subject_gross_vector(table, treaty)
    ceded = np.zeros(sample.n_years, dtype=np.int64)
    reinst = np.zeros(sample.n_years, dtype=float)
    years: dict[int, list[EventLoss]] = {}
    for occ in sample.occurrences:
        row = table.event_index[occ.event.id]
        gross = int(gross_by_event[row])
        if gross <= 0:
            continue
        years.setdefault(occ.year, []).append(EventLoss(
            time_h=occ.time_h, peril=occ.event.peril, gross=gross,
            tags=occ.event.tags, event_id=occ.event.id,
        ))
    for year, events in years.items():
        result = treaty_recovery(events, treaty)
        ceded[year] = result.recovered
        reinst[year] = result.reinstatement_premium_fraction(treaty)
    return AnnualCession(ceded=ceded, reinstatement_fraction=reinst)


def book_annual_ceded(sample: HazardSample, table: EventLossTable,
                      treaties: Iterable[Treaty]) -> dict[str, AnnualCession]:
    return {t.id: annual_cession(sample, table, t) for t in treaties}


# ---------------------------------------------------------------------------
# Accumulation and tail statistics.


def zone_accumulation(treaties: Iterable[Treaty]) -> dict[str, int]:
    """Each treaty's full limit attributed to every zone it covers."""
    acc: dict[str, int] = {}
    for treaty in treaties:
        limit = treaty.total_limit
        for zone in treaty.zones:
            acc[zone] = acc.get(zone, 0) + limit
    return acc


def tail_var(annual_losses: Sequence[float], level: float = 0.99) -> float:
    """Empirical quantile under the shared linear-interpolation convention."""
    losses = np.asarray(annual_losses, dtype=float)
    if losses.size == 0:
        raise ComputationError("tail_var of empty sample")
    if not 0.0 < level < 1.0:
        raise ComputationError(f"level outside (0,1): {level}")
    return float(np.quantile(losses, level))


# ---------------------------------------------------------------------------
# Retrocession.


class RetroStructureError(ValueError):
    """Retro structure outside its invariants."""


@dataclass(frozen=True)
class RetroStructure:
    kind: RetroKind
    cession: float = 0.0
    attachment: int = 0
    limit: int = 0

    def __post_init__(self) -> None:
        if self.kind is RetroKind.QUOTA_SHARE:
            if not 0.0 <= self.cession <= 1.0:
                raise RetroStructureError("cession outside [0,1]")
        else:
            if self.attachment <= 0 or self.limit <= 0:
                raise RetroStructureError(
                    f"{self.kind.value} needs positive attachment and limit"
                )


@dataclass(frozen=True)
class RetroResult:
    retained: tuple[int, ...]
    recovered: tuple[int, ...]

    @property
    def total_retained(self) -> int:
        return sum(self.retained)

    @property
    def total_recovered(self) -> int:
        return sum(self.recovered)


def apply_retro(occurrence_losses: Sequence[int],
                structure: RetroStructure) -> RetroResult:
    """Split each occurrence loss into retained and retro-recovered parts.

    Conservation is exact by construction: retained is defined as gross
    minus recovered in integer units.  AggregateXL burns its attachment
    through occurrences in order, so per-occurrence amounts still sum to
    the aggregate recovery.
    """
    for loss in occurrence_losses:
        if loss < 0:
            raise RecoveryInputError("losses must be >= 0")
    recovered: list[int] = []
    if structure.kind is RetroKind.QUOTA_SHARE:
        recovered = [int(round(structure.cession * loss))
                     for loss in occurrence_losses]
    elif structure.kind is RetroKind.EXCESS_OF_LOSS:
        recovered = [
            layer_recovery(loss, structure.attachment, structure.limit)
            for loss in occurrence_losses
        ]
    else:  # AggregateXL
        cumulative = 0
        taken = 0
        for loss in occurrence_losses:
            cumulative += loss
            now = layer_recovery(cumulative, structure.attachment,
                                 structure.limit)
            recovered.append(now - taken)
            taken = now
    retained = tuple(loss - rec
                     for loss, rec in zip(occurrence_losses, recovered))
    return RetroResult(retained=retained, recovered=tuple(recovered))
