"""Synthetic portfolio generation: treaties plus clustered exposures.

All randomness flows through named substreams of the config seed, and every
draw happens in a fixed order, so identical (config, seed) produce
byte-identical portfolios including wordings.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Any, Mapping

import numpy as np

from ..core.types import (
    EXCLUSION_ORDER,
    ExclusionClause,
    ExclusionKind,
    ExposureState,
    LineOfBusiness,
    Location,
    Peril,
    Treaty,
    TreatyLayer,
    substream,
)
from .wording import AMOUNT_GRID, render_wording


class GeneratorConfigError(ValueError):
    """Generator configuration outside its invariants."""


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs for the synthetic portfolio.

    attachment_ratio targets the market attachment/limit band; shares are
    Bernoulli probabilities per treaty; exposure counts mix a gamma over
    the Poisson mean (dispersion is the gamma's coefficient of variation).
    """

    n_treaties: int = 500
    seed: int = 1
    zone_count: int = 10
    attachment_ratio_mean: float = 0.46
    attachment_ratio_sd: float = 0.12
    property_cat_share: float = 0.61
    multi_peril_share: float = 0.34
    ambiguity_rate: float = 0.30
    exposures_per_zone_mean: float = 40.0
    exposures_per_zone_dispersion: float = 0.35
    insured_value_mu: float = 17.2
    insured_value_sigma: float = 1.0
    limit_median: int = 60_000_000
    limit_sigma: float = 0.6
    two_layer_share: float = 0.30

    def __post_init__(self) -> None:
        if self.n_treaties < 1:
            raise GeneratorConfigError("n_treaties must be >= 1")
        if self.zone_count < 1:
            raise GeneratorConfigError("zone_count must be >= 1")
        if self.attachment_ratio_sd < 0:
            raise GeneratorConfigError("attachment_ratio_sd must be >= 0")
        for name in ("property_cat_share", "multi_peril_share",
                     "ambiguity_rate", "two_layer_share"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise GeneratorConfigError(f"{name} outside [0,1]: {value}")
        if self.exposures_per_zone_mean <= 0:
            raise GeneratorConfigError("exposures_per_zone_mean must be > 0")
        if self.limit_median <= 0:
            raise GeneratorConfigError("limit_median must be > 0")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GeneratorConfig":
        known = {f for f in cls.__dataclass_fields__}  # noqa: C416
        unknown = set(data) - known
        if unknown:
            raise GeneratorConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class Portfolio:
    treaties: tuple[Treaty, ...]
    exposures: ExposureState
    zones: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "zones": list(self.zones),
            "treaties": [t.to_dict() for t in self.treaties],
            "exposures": [
                {
                    "zone": loc.zone, "x": loc.x, "y": loc.y,
                    "insured_value": loc.insured_value,
                    "line_of_business": loc.line_of_business.value,
                }
                for loc in self.exposures.locations
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Portfolio":
        return cls(
            treaties=tuple(Treaty.from_dict(t) for t in data["treaties"]),
            exposures=ExposureState(locations=tuple(
                Location(
                    zone=loc["zone"], x=float(loc["x"]), y=float(loc["y"]),
                    insured_value=int(loc["insured_value"]),
                    line_of_business=LineOfBusiness(loc["line_of_business"]),
                )
                for loc in data["exposures"]
            )),
            zones=tuple(data["zones"]),
        )


def zone_ids(count: int) -> tuple[str, ...]:
    return tuple(f"Z{i + 1:02d}" for i in range(count))


_SINGLE_PERIL_WEIGHTS = ((Peril.WIND, 0.55), (Peril.FLOOD, 0.25),
                         (Peril.WILDFIRE, 0.20))

# Per-kind exclusion draw probabilities; Flood and Wildfire exclusions are
# only drawn when the peril itself is not covered (a full-peril exclusion
# of a covered peril would make the cover contradictory).
_EXCLUSION_PROBS = {
    ExclusionKind.STORM_SURGE: 0.25,
    ExclusionKind.FLOOD: 0.15,
    ExclusionKind.WILDFIRE: 0.15,
    ExclusionKind.TERROR: 0.35,
    ExclusionKind.NUCLEAR: 0.50,
    ExclusionKind.CYBER_SILENT: 0.25,
}

_LIMIT_FLOOR = 10_000_000
_LIMIT_CAP = 400_000_000


def _round_amount(value: float) -> int:
    return max(AMOUNT_GRID, int(round(value / AMOUNT_GRID)) * AMOUNT_GRID)


def _draw_exposures(cfg: GeneratorConfig, zones: tuple[str, ...],
                    centers: np.ndarray,
                    rng: np.random.Generator) -> ExposureState:
    locations: list[Location] = []
    d = cfg.exposures_per_zone_dispersion
    for zi, zone in enumerate(zones):
        if d > 0:
            lam = rng.gamma(shape=1.0 / d**2,
                            scale=cfg.exposures_per_zone_mean * d**2)
        else:
            lam = cfg.exposures_per_zone_mean
        count = max(3, int(rng.poisson(lam)))
        offsets = rng.normal(0.0, 2.0, size=(count, 2))
        values = rng.lognormal(cfg.insured_value_mu, cfg.insured_value_sigma,
                               size=count)
        lob_draws = rng.random(count)
        for j in range(count):
            locations.append(Location(
                zone=zone,
                x=float(centers[zi, 0] + offsets[j, 0]),
                y=float(centers[zi, 1] + offsets[j, 1]),
                insured_value=max(1, int(round(values[j]))),
                line_of_business=(LineOfBusiness.CASUALTY if lob_draws[j] < 0.2
                                  else LineOfBusiness.PROPERTY_PER_RISK),
            ))
    return ExposureState(locations=tuple(locations))


def _draw_perils(cfg: GeneratorConfig, rng: np.random.Generator) -> frozenset[Peril]:
    if rng.random() < cfg.multi_peril_share:
        return frozenset({Peril.WIND, Peril.FLOOD})
    u = rng.random()
    acc = 0.0
    for peril, w in _SINGLE_PERIL_WEIGHTS:
        acc += w
        if u < acc:
            return frozenset({peril})
    return frozenset({_SINGLE_PERIL_WEIGHTS[-1][0]})


def _draw_layers(cfg: GeneratorConfig,
                 rng: np.random.Generator) -> tuple[TreatyLayer, ...]:
    limit = _round_amount(float(np.clip(
        rng.lognormal(np.log(cfg.limit_median), cfg.limit_sigma),
        _LIMIT_FLOOR, _LIMIT_CAP,
    )))
    ratio = float(np.clip(
        rng.normal(cfg.attachment_ratio_mean, cfg.attachment_ratio_sd),
        0.10, 0.90,
    ))
    attachment = _round_amount(ratio * limit)
    reinstatements = int(rng.integers(0, 3))
    layers = [TreatyLayer(attachment=attachment, limit=limit,
                          reinstatements=reinstatements)]
    if rng.random() < cfg.two_layer_share:
        upper_limit = _round_amount(limit * rng.uniform(0.4, 1.0))
        upper_reinst = int(rng.integers(0, 2))
        layers.append(TreatyLayer(
            attachment=attachment + limit, limit=upper_limit,
            reinstatements=upper_reinst,
        ))
    return tuple(layers)


def _draw_hours(perils: frozenset[Peril], rng: np.random.Generator):
    if perils & {Peril.WIND, Peril.FLOOD}:
        if rng.random() < 0.85:
            return int(rng.choice([24, 72, 168], p=[0.2, 0.5, 0.3]))
        return None
    return 168 if rng.random() < 0.5 else None


def _draw_exclusions(cfg: GeneratorConfig, perils: frozenset[Peril],
                     rng: np.random.Generator) -> tuple[ExclusionClause, ...]:
    chosen: list[ExclusionClause] = []
    for kind in EXCLUSION_ORDER:
        p = _EXCLUSION_PROBS[kind]
        if kind is ExclusionKind.FLOOD and Peril.FLOOD in perils:
            continue
        if kind is ExclusionKind.WILDFIRE and Peril.WILDFIRE in perils:
            continue
        if rng.random() < p:
            chosen.append(ExclusionClause(kind=kind))
    ambiguous = rng.random() < cfg.ambiguity_rate
    if ambiguous:
        if chosen:
            mark = int(rng.integers(len(chosen)))
            chosen[mark] = ExclusionClause(kind=chosen[mark].kind,
                                           ambiguous=True)
        else:
            chosen.append(ExclusionClause(kind=ExclusionKind.STORM_SURGE,
                                          ambiguous=True))
            chosen.sort(key=lambda c: EXCLUSION_ORDER.index(c.kind))
    return tuple(chosen)


def generate_portfolio(cfg: GeneratorConfig) -> Portfolio:
    """Generate the full synthetic book: treaties with wordings, exposures.

    Deterministic given cfg (including its seed); treaties carry their
    rendered wording so round-trip checks need no extra state.
    """
    zones = zone_ids(cfg.zone_count)
    zone_rng = substream(cfg.seed, "genesis", "zones")
    centers = zone_rng.uniform(0.0, 100.0, size=(cfg.zone_count, 2))

    exposure_rng = substream(cfg.seed, "genesis", "exposures")
    exposures = _draw_exposures(cfg, zones, centers, exposure_rng)

    treaty_rng = substream(cfg.seed, "genesis", "treaties")
    treaties: list[Treaty] = []
    for i in range(cfg.n_treaties):
        u_lob = treaty_rng.random()
        if u_lob < cfg.property_cat_share:
            lob = LineOfBusiness.PROPERTY_CAT
        elif u_lob < cfg.property_cat_share + (1 - cfg.property_cat_share) * 0.6:
            lob = LineOfBusiness.PROPERTY_PER_RISK
        else:
            lob = LineOfBusiness.CASUALTY
        perils = _draw_perils(cfg, treaty_rng)
        n_zones = int(treaty_rng.choice([1, 2, 3], p=[0.45, 0.35, 0.20]))
        n_zones = min(n_zones, cfg.zone_count)
        covered = frozenset(
            treaty_rng.choice(len(zones), size=n_zones, replace=False).tolist()
        )
        layers = _draw_layers(cfg, treaty_rng)
        hours = _draw_hours(perils, treaty_rng)
        exclusions = _draw_exclusions(cfg, perils, treaty_rng)
        treaty = Treaty(
            id=f"T{i + 1:04d}",
            line_of_business=lob,
            layers=layers,
            perils=perils,
            exclusions=exclusions,
            zones=frozenset(zones[zi] for zi in covered),
            hours_clause=hours,
        )
        treaties.append(replace(treaty, wording=render_wording(treaty)))
    return Portfolio(treaties=tuple(treaties), exposures=exposures,
                     zones=zones)
