"""Hazard engine: event catalogs, vulnerability, drift, correlated sampling.

Cross-peril dependence is induced by a Gaussian copula over per-peril
annual frequency multipliers: each year draws correlated normals z, maps
them to lognormal multipliers with unit mean, and scales every event rate
in that year by its peril's multiplier.  Occurrence is capped at one per
event per year (rates are small); event severities are deterministic
functions of footprint intensity and exposure, so all sampling noise lives
in frequency.  Everything is reproducible from named substreams.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from .core.types import (
    ExposureState,
    LineOfBusiness,
    Peril,
    substream,
)

HOURS_PER_YEAR = 8760

PERILS = (Peril.WIND, Peril.FLOOD, Peril.WILDFIRE)

SURGE_TAG = "storm_surge"


class HazardConfigError(ValueError):
    """Catalog or correlation configuration outside its invariants."""


# ---------------------------------------------------------------------------
# Catalogs.


@dataclass(frozen=True)
class CatalogEvent:
    """One catalog event: a rate and an intensity footprint over zones."""

    id: str
    peril: Peril
    annual_rate: float
    footprint: Mapping[str, float]
    tags: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.annual_rate <= 0:
            raise HazardConfigError(f"event {self.id}: rate must be > 0")
        if not self.footprint:
            raise HazardConfigError(f"event {self.id}: empty footprint")
        for zone, intensity in self.footprint.items():
            if intensity < 0:
                raise HazardConfigError(
                    f"event {self.id}: negative intensity in {zone}"
                )


@dataclass(frozen=True)
class EventCatalog:
    peril: Peril
    events: tuple[CatalogEvent, ...]

    @property
    def total_rate(self) -> float:
        return float(sum(e.annual_rate for e in self.events))


@dataclass(frozen=True)
class CatalogConfig:
    """Distributional knobs for sampled catalogs."""

    events_per_peril: Mapping[str, int] = field(default_factory=lambda: {
        Peril.WIND.value: 40,
        Peril.FLOOD.value: 35,
        Peril.WILDFIRE.value: 25,
    })
    rate_median: float = 0.02
    rate_sigma: float = 1.0
    intensity_median: float = 1.2
    intensity_sigma: float = 0.5
    surge_share: float = 0.30  # fraction of flood events tagged storm_surge

    def __post_init__(self) -> None:
        for peril, count in self.events_per_peril.items():
            if count < 1:
                raise HazardConfigError(f"{peril}: event count must be >= 1")
        if self.rate_median <= 0 or self.intensity_median <= 0:
            raise HazardConfigError("medians must be positive")
        if not 0.0 <= self.surge_share <= 1.0:
            raise HazardConfigError("surge_share outside [0,1]")


# Event id prefixes must stay distinct across perils: catalogs are merged
# into one loss table keyed by event id.
_ID_PREFIX = {Peril.WIND: "WI", Peril.FLOOD: "FL", Peril.WILDFIRE: "WF"}


def build_event_catalog(peril: Peril, zones: Sequence[str],
                        cfg: CatalogConfig, seed: int) -> EventCatalog:
    """Sample a peril's event catalog; deterministic per (cfg, seed)."""
    if not zones:
        raise HazardConfigError("at least one zone required")
    count = cfg.events_per_peril.get(peril.value, 0)
    if count < 1:
        raise HazardConfigError(f"no events configured for {peril.value}")
    rng = substream(seed, "catalog", peril.value)
    events = []
    for i in range(count):
        rate = float(rng.lognormal(np.log(cfg.rate_median), cfg.rate_sigma))
        n_zones = min(int(rng.choice([1, 2, 3], p=[0.5, 0.35, 0.15])),
                      len(zones))
        hit = rng.choice(len(zones), size=n_zones, replace=False)
        # larger events (lower rate) carry systematically higher intensity
        severity_scale = float(np.clip(
            (cfg.rate_median / rate) ** 0.25, 0.5, 3.0))
        footprint = {
            zones[zi]: float(rng.lognormal(
                np.log(cfg.intensity_median * severity_scale),
                cfg.intensity_sigma,
            ))
            for zi in sorted(hit.tolist())
        }
        tags = frozenset()
        if peril is Peril.FLOOD and rng.random() < cfg.surge_share:
            tags = frozenset({SURGE_TAG})
        events.append(CatalogEvent(
            id=f"{_ID_PREFIX[peril]}{i + 1:03d}",
            peril=peril,
            annual_rate=rate,
            footprint=footprint,
            tags=tags,
        ))
    return EventCatalog(peril=peril, events=tuple(events))


def apply_drift(catalog: EventCatalog, factor: float, year: int) -> EventCatalog:
    """Scale every rate by factor**year, the non-stationarity mechanism.

    Year 0 returns the catalog unchanged.
    """
    if factor <= 0:
        raise HazardConfigError(f"drift factor must be > 0, got {factor}")
    if year < 0:
        raise HazardConfigError("year must be >= 0")
    if year == 0 or factor == 1.0:
        return catalog
    scale = factor ** year
    return EventCatalog(
        peril=catalog.peril,
        events=tuple(
            CatalogEvent(
                id=e.id, peril=e.peril, annual_rate=e.annual_rate * scale,
                footprint=e.footprint, tags=e.tags,
            )
            for e in catalog.events
        ),
    )


# ---------------------------------------------------------------------------
# Vulnerability.


@dataclass(frozen=True)
class VulnerabilityCurve:
    """Piecewise-linear intensity to damage-ratio mapping.

    Control points must be sorted, start at damage 0 for intensity 0, and
    be monotone non-decreasing with damage in [0, 1]; damage is clamped to
    the last control point beyond it.
    """

    peril: Peril
    control_points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        pts = self.control_points
        if len(pts) < 2:
            raise HazardConfigError("need at least two control points")
        if pts[0] != (0.0, 0.0):
            raise HazardConfigError("curve must start at (0, 0)")
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if x1 <= x0:
                raise HazardConfigError("intensities must strictly increase")
            if y1 < y0:
                raise HazardConfigError("damage must be non-decreasing")
        if pts[-1][1] > 1.0:
            raise HazardConfigError("damage ratio cannot exceed 1")

    def damage(self, intensity: float) -> float:
        pts = self.control_points
        if intensity <= 0:
            return 0.0
        xs = [p[0] for p in pts]
        if intensity >= xs[-1]:
            return pts[-1][1]
        i = bisect.bisect_right(xs, intensity)
        x0, y0 = pts[i - 1]
        x1, y1 = pts[i]
        return y0 + (y1 - y0) * (intensity - x0) / (x1 - x0)


def default_curves() -> dict[Peril, VulnerabilityCurve]:
    return {
        Peril.WIND: VulnerabilityCurve(Peril.WIND, (
            (0.0, 0.0), (0.5, 0.001), (1.0, 0.008), (2.0, 0.06),
            (3.0, 0.20), (5.0, 0.55),
        )),
        Peril.FLOOD: VulnerabilityCurve(Peril.FLOOD, (
            (0.0, 0.0), (0.5, 0.002), (1.0, 0.012), (2.0, 0.09),
            (3.0, 0.28), (5.0, 0.65),
        )),
        Peril.WILDFIRE: VulnerabilityCurve(Peril.WILDFIRE, (
            (0.0, 0.0), (0.5, 0.001), (1.0, 0.006), (2.0, 0.05),
            (3.0, 0.18), (5.0, 0.50),
        )),
    }


# ---------------------------------------------------------------------------
# Correlation.


@dataclass(frozen=True)
class CorrelationSpec:
    """Cross-peril correlation with named presets Low/Medium/High."""

    matrix: tuple[tuple[float, ...], ...]
    preset: Optional[str] = None

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise HazardConfigError("correlation matrix must be square")
        if not np.allclose(m, m.T, atol=1e-12):
            raise HazardConfigError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(m), 1.0, atol=1e-12):
            raise HazardConfigError("correlation diagonal must be 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise HazardConfigError("correlation matrix must be PSD")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)

    @classmethod
    def uniform(cls, off_diagonal: float, size: int = len(PERILS),
                preset: Optional[str] = None) -> "CorrelationSpec":
        m = np.full((size, size), off_diagonal)
        np.fill_diagonal(m, 1.0)
        return cls(matrix=tuple(map(tuple, m)), preset=preset)

    @classmethod
    def from_preset(cls, name: str) -> "CorrelationSpec":
        levels = {"Low": 0.1, "Medium": 0.3, "High": 0.6}
        if name not in levels:
            raise HazardConfigError(
                f"unknown preset {name!r}; expected one of {sorted(levels)}"
            )
        return cls.uniform(levels[name], preset=name)


# ---------------------------------------------------------------------------
# Exposure aggregation and per-event deterministic losses.


def zone_values(exposures: ExposureState) -> dict[str, dict[str, int]]:
    """Sum insured values per zone, split property vs casualty lines."""
    sums: dict[str, dict[str, int]] = {}
    for loc in exposures.locations:
        bucket = sums.setdefault(loc.zone, {"property": 0, "casualty": 0})
        key = ("casualty" if loc.line_of_business is LineOfBusiness.CASUALTY
               else "property")
        bucket[key] += loc.insured_value
    return sums


@dataclass(frozen=True)
class EventLossTable:
    """Deterministic per-event ground-up zone losses, in currency ints.

    Dense [event x zone] matrices keyed by event id through event_index;
    the per-treaty gross vector applies peril and surge filters in one
    masked sum, which is what keeps whole-portfolio recovery cheap.
    """

    zones: tuple[str, ...]
    event_ids: tuple[str, ...]
    event_index: Mapping[str, int]
    event_perils: tuple[Peril, ...]
    surge_tagged: np.ndarray          # bool [n_events]
    property_matrix: np.ndarray       # int64 [n_events x n_zones]
    casualty_matrix: np.ndarray

    def zone_loss(self, event_id: str, zones: Iterable[str],
                  casualty: bool) -> int:
        row = self.event_index.get(event_id)
        if row is None:
            return 0
        matrix = self.casualty_matrix if casualty else self.property_matrix
        zi = [self.zones.index(z) for z in zones if z in self.zones]
        return int(matrix[row, zi].sum()) if zi else 0


def build_loss_table(catalogs: Mapping[Peril, EventCatalog],
                     curves: Mapping[Peril, VulnerabilityCurve],
                     exposures: ExposureState,
                     zones: Sequence[str]) -> EventLossTable:
    values = zone_values(exposures)
    zone_list = tuple(zones)
    zone_pos = {z: i for i, z in enumerate(zone_list)}
    events: list[CatalogEvent] = []
    for peril in PERILS:
        if peril in catalogs:
            events.extend(catalogs[peril].events)
    if len({e.id for e in events}) != len(events):
        raise HazardConfigError("duplicate event ids across catalogs")
    prop = np.zeros((len(events), len(zone_list)), dtype=np.int64)
    cas = np.zeros_like(prop)
    surge = np.zeros(len(events), dtype=bool)
    for row, event in enumerate(events):
        curve = curves[event.peril]
        surge[row] = SURGE_TAG in event.tags
        for zone, intensity in event.footprint.items():
            ratio = curve.damage(intensity)
            zi = zone_pos.get(zone)
            if ratio <= 0 or zi is None or zone not in values:
                continue
            prop[row, zi] = int(round(values[zone]["property"] * ratio))
            # casualty losses trail property damage in this synthetic world
            cas[row, zi] = int(round(values[zone]["casualty"] * ratio * 0.5))
    return EventLossTable(
        zones=zone_list,
        event_ids=tuple(e.id for e in events),
        event_index={e.id: i for i, e in enumerate(events)},
        event_perils=tuple(e.peril for e in events),
        surge_tagged=surge,
        property_matrix=prop,
        casualty_matrix=cas,
    )


# ---------------------------------------------------------------------------
# Simulation.


@dataclass(frozen=True)
class EventOccurrence:
    year: int
    time_h: float
    event: CatalogEvent


@dataclass(frozen=True)
class HazardSample:
    """A simulated multi-year event set with its frequency multipliers."""

    n_years: int
    occurrences: tuple[EventOccurrence, ...]  # sorted by (year, time)
    multipliers: np.ndarray  # [n_years x len(PERILS)]
    drift_factor: float

    def by_year(self) -> list[list[EventOccurrence]]:
        years: list[list[EventOccurrence]] = [[] for _ in range(self.n_years)]
        for occ in self.occurrences:
            years[occ.year].append(occ)
        return years

    def annual_peril_matrix(self, losses: EventLossTable,
                            zones: Sequence[str]) -> np.ndarray:
        """Ground-up annual property loss per peril, [n_years x perils]."""
        out = np.zeros((self.n_years, len(PERILS)))
        zone_list = list(zones)
        for occ in self.occurrences:
            pi = PERILS.index(occ.event.peril)
            out[occ.year, pi] += losses.zone_loss(occ.event.id, zone_list,
                                                  casualty=False)
        return out


def simulate_annual_losses(catalogs: Mapping[Peril, EventCatalog],
                           corr: CorrelationSpec,
                           n_years: int,
                           seed: int,
                           frequency_vol: float = 0.5,
                           drift_factor: float = 1.0) -> HazardSample:
    """Sample occurrences for every catalog event over n_years.

    Per year y and peril p the rate of event e is
    annual_rate(e) * drift_factor**y * M[y, p], with M lognormal
    (unit mean, volatility frequency_vol) driven by the Gaussian copula.
    Occurrence is a capped-at-one Poisson draw; occurred events get a
    uniform timestamp within the year.
    """
    if n_years < 1:
        raise HazardConfigError("n_years must be >= 1")
    if drift_factor <= 0:
        raise HazardConfigError("drift_factor must be > 0")
    perils = [p for p in PERILS if p in catalogs]
    if corr.array.shape[0] != len(PERILS):
        raise HazardConfigError(
            f"correlation must be {len(PERILS)}x{len(PERILS)}"
        )

    copula_rng = substream(seed, "hazard", "copula")
    chol = np.linalg.cholesky(corr.array + 1e-12 * np.eye(len(PERILS)))
    z = copula_rng.standard_normal((n_years, len(PERILS))) @ chol.T
    sigma = frequency_vol
    multipliers = np.exp(sigma * z - sigma**2 / 2.0)

    drift = drift_factor ** np.arange(n_years)

    occurrences: list[EventOccurrence] = []
    for peril in perils:
        catalog = catalogs[peril]
        pi = PERILS.index(peril)
        rates = np.array([e.annual_rate for e in catalog.events])
        lam = rates[None, :] * multipliers[:, pi][:, None] * drift[:, None]
        occ_rng = substream(seed, "hazard", "occurrence", peril.value)
        u = occ_rng.random((n_years, len(rates)))
        occurred = u < -np.expm1(-lam)
        time_rng = substream(seed, "hazard", "times", peril.value)
        times = time_rng.uniform(0.0, HOURS_PER_YEAR,
                                 size=(n_years, len(rates)))
        ys, es = np.nonzero(occurred)
        for y, e in zip(ys.tolist(), es.tolist()):
            occurrences.append(EventOccurrence(
                year=y, time_h=float(times[y, e]), event=catalog.events[e],
            ))
    occurrences.sort(key=lambda o: (o.year, o.time_h, o.event.id))
    return HazardSample(
        n_years=n_years,
        occurrences=tuple(occurrences),
        multipliers=multipliers,
        drift_factor=drift_factor,
    )


def event_sequence(catalog: EventCatalog, year: int,
                   seed: int) -> tuple[EventOccurrence, ...]:
    """One year's time-stamped events for a single catalog.

    Standalone single-year sampler sharing the occurrence mechanics of
    simulate_annual_losses but with independent substreams per year.
    """
    rng = substream(seed, "events", catalog.peril.value, year)
    out = []
    for event in catalog.events:
        if rng.random() < -np.expm1(-event.annual_rate):
            out.append(EventOccurrence(
                year=year,
                time_h=float(rng.uniform(0.0, HOURS_PER_YEAR)),
                event=event,
            ))
    out.sort(key=lambda o: o.time_h)
    return tuple(out)
