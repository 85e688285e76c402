"""Episode environment: the simulator bundle behind agent negotiations.

A SimulationContext freezes one generated portfolio together with its
hazard catalogs, event-loss table, multi-year hazard sample and capital
baseline.  For each candidate treaty it produces share-indexed candidate
tables (expected cession, marginal capital requirement, accumulation and
tail utilisation) from whatever terms the interpreting agent believes —
possibly mis-parsed — so that downstream beliefs, norm checks and rewards
all flow from interpretation.  Ground truth stays available separately
for ex-post governance checks.

All candidate economics are linear in the participation share: a share s
of an excess layer pays s times every layer recovery, so one full-share
cession vector per structure is enough.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..capital import (
    compute_capital_state,
    key_loss_matrix,
    marginal_scr,
)
from ..core.types import (
    ActionProfile,
    CapitalState,
    ClaimsState,
    GlobalState,
    HazardState,
    PortfolioState,
    RegulatoryState,
    RewardVector,
    Treaty,
    TreatyState,
    canonical_json,
)
from ..folio import AnnualCession, annual_cession, book_annual_ceded, tail_var, zone_accumulation
from ..genesis.generator import Portfolio
from ..perils import (
    CatalogConfig,
    CorrelationSpec,
    EventCatalog,
    EventLossTable,
    HazardSample,
    PERILS,
    build_event_catalog,
    build_loss_table,
    default_curves,
    simulate_annual_losses,
)

SHARE_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)
TECHNICAL_VOL_LOADING = 0.3
CAP_REWARD_SCALE = 1e6  # scalarized profit expressed in currency millions


def structure_digest(treaty: Treaty) -> str:
    """Hash of the structural terms (wording and clause rendering ignored)."""
    payload = treaty.to_dict()
    payload.pop("wording", None)
    for clause in payload.get("exclusions", ()):
        clause.pop("ambiguous", None)
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


@dataclass(frozen=True)
class CandidateTables:
    """Share-indexed economics for one operative treaty structure."""

    terms: Treaty
    expected_ceded_full: float
    ceded_sd_full: float
    reinstatement_fraction: float
    ceded_by_share: Mapping[float, float]
    marginal_scr_by_share: Mapping[float, float]
    zone_util_by_share: Mapping[float, float]
    tail_util_by_share: Mapping[float, float]
    technical_rate: float
    market_rate: float


def nearest_share(table: Mapping[float, float], share: float) -> float:
    if not table:
        raise KeyError("empty share table")
    key = min(table, key=lambda k: (abs(k - share), k))
    return float(table[key])


@dataclass(frozen=True)
class DealEconomics:
    """All the numbers pricing, capital and portfolio argue about."""

    share: float
    capacity: int
    premium: float          # net of expenses, incl. expected reinstatements
    expected_ceded: float
    delta_scr: float
    placement_probability: float
    expected_profit: float  # placement-weighted premium minus loss cost
    eva: float              # expected_profit minus the hurdle cost of capital
    zone_utilisation: float
    tail_utilisation: float
    required_premium: float


class SimulationContext:
    """One frozen world: portfolio, hazard sample, capital baseline."""

    def __init__(self, portfolio: Portfolio, *, seed: int,
                 n_years: int = 2000,
                 correlation_preset: str = "Medium",
                 own_funds: int = 13_500_000_000,
                 frequency_vol: float = 0.5,
                 drift_factor: float = 1.0,
                 catalog_config: Optional[CatalogConfig] = None,
                 regulatory: Optional[RegulatoryState] = None,
                 zone_cap_ratio: float = 0.97,
                 tail_headroom: float = 1.02,
                 expense_ratio: float = 0.0,
                 share_grid: Sequence[float] = SHARE_GRID) -> None:
        if expense_ratio < 0 or expense_ratio >= 1:
            raise ValueError("expense_ratio must be in [0, 1)")
        self.portfolio = portfolio
        self.seed = seed
        self.n_years = n_years
        self.expense_ratio = expense_ratio
        self.share_grid = tuple(share_grid)
        cfg = catalog_config or CatalogConfig()
        self.catalogs: dict = {
            peril: build_event_catalog(peril, portfolio.zones, cfg, seed)
            for peril in PERILS
        }
        self.curves = default_curves()
        self.table: EventLossTable = build_loss_table(
            self.catalogs, self.curves, portfolio.exposures, portfolio.zones)
        corr = CorrelationSpec.from_preset(correlation_preset)
        self.correlation_preset = correlation_preset
        self.sample: HazardSample = simulate_annual_losses(
            self.catalogs, corr, n_years, seed,
            frequency_vol=frequency_vol, drift_factor=drift_factor)
        self.event_rate = float(sum(c.total_rate for c in self.catalogs.values()))

        self.cessions: dict[str, AnnualCession] = book_annual_ceded(
            self.sample, self.table, portfolio.treaties)
        self.treaties_by_id = {t.id: t for t in portfolio.treaties}
        self._contrib: dict[str, np.ndarray] = {
            t.id: key_loss_matrix(self.sample, self.table, [t],
                                  {t.id: self.cessions[t.id]})
            for t in portfolio.treaties
        }
        self.total_key_matrix = sum(self._contrib.values())
        self.total_annual_ceded = sum(
            (c.ceded for c in self.cessions.values()),
            start=np.zeros(n_years, dtype=np.int64))
        self.total_zone_accumulation = zone_accumulation(portfolio.treaties)

        self.own_funds = own_funds
        max_acc = max(self.total_zone_accumulation.values(), default=0)
        self.zone_cap = int(round(zone_cap_ratio * max_acc)) or 1
        # Tail appetite: one deal may grow the book's 1-in-100 ceded tail
        # by at most (headroom - 1); the cap is set against the baseline
        # book with the candidate removed, so it varies per candidate.
        if tail_headroom <= 1.0:
            raise ValueError("tail_headroom must exceed 1.0")
        self.tail_headroom = float(tail_headroom)
        book_tail = tail_var(self.total_annual_ceded.astype(float), 0.99)
        self.tail_cap = float(self.tail_headroom * book_tail) or 1.0
        base = regulatory or RegulatoryState()
        self.regulatory = RegulatoryState(
            solvency_threshold=base.solvency_threshold,
            max_rounds=base.max_rounds,
            capital_hurdle=base.capital_hurdle,
            market_rate_margin=base.market_rate_margin,
            zone_cap=self.zone_cap,
            tail_var_cap=self.tail_cap,
        )
        self._truth_digest = {t.id: structure_digest(t)
                              for t in portfolio.treaties}
        self._table_cache: dict[tuple[str, str], CandidateTables] = {}
        self._baseline_cache: dict[str, tuple[np.ndarray, np.ndarray,
                                              dict[str, int], CapitalState]] = {}

    # -- baselines ---------------------------------------------------------

    def baseline(self, treaty_id: str) -> tuple[np.ndarray, np.ndarray,
                                                dict[str, int], CapitalState]:
        """Book with the candidate removed: key matrix, annual ceded,
        zone accumulation, and capital state."""
        cached = self._baseline_cache.get(treaty_id)
        if cached is not None:
            return cached
        treaty = self.treaties_by_id[treaty_id]
        keys = self.total_key_matrix - self._contrib[treaty_id]
        annual = self.total_annual_ceded - self.cessions[treaty_id].ceded
        zones = dict(self.total_zone_accumulation)
        for zone in treaty.zones:
            zones[zone] -= treaty.total_limit
        capital = compute_capital_state(keys, self.own_funds)
        result = (keys, annual.astype(np.int64), zones, capital)
        self._baseline_cache[treaty_id] = result
        return result

    # -- candidate tables ---------------------------------------------------

    def _cession_for(self, treaty_id: str, terms: Treaty
                     ) -> tuple[AnnualCession, np.ndarray]:
        digest = structure_digest(terms)
        if digest == self._truth_digest.get(treaty_id):
            return self.cessions[treaty_id], self._contrib[treaty_id]
        cession = annual_cession(self.sample, self.table, terms)
        contrib = key_loss_matrix(self.sample, self.table, [terms],
                                  {terms.id: cession})
        return cession, contrib

    def candidate_tables(self, treaty_id: str, terms: Treaty) -> CandidateTables:
        """Share-indexed economics of writing ``terms`` on top of the book
        without the candidate.  ``terms`` may differ from ground truth."""
        cache_key = (treaty_id, structure_digest(terms))
        cached = self._table_cache.get(cache_key)
        if cached is not None:
            return cached
        base_keys, base_annual, base_zones, _ = self.baseline(treaty_id)
        cession, contrib = self._cession_for(treaty_id, terms)
        ceded = cession.ceded.astype(float)
        mean_full = float(ceded.mean())
        sd_full = float(ceded.std(ddof=1)) if len(ceded) > 1 else 0.0
        reinst_frac = float(np.mean(cession.reinstatement_fraction))
        total_limit = terms.total_limit

        candidate_tail_cap = (self.tail_headroom
                              * tail_var(base_annual.astype(float), 0.99)
                              ) or 1.0
        ceded_by_share: dict[float, float] = {}
        scr_by_share: dict[float, float] = {}
        zone_by_share: dict[float, float] = {}
        tail_by_share: dict[float, float] = {}
        for share in self.share_grid:
            ceded_by_share[share] = share * mean_full
            scr_by_share[share] = (
                0.0 if share == 0.0
                else marginal_scr(base_keys, share * contrib))
            worst = 0.0
            for zone in terms.zones:
                after = base_zones.get(zone, 0) + share * total_limit
                worst = max(worst, after / self.zone_cap)
            zone_by_share[share] = worst
            after_annual = base_annual + share * ceded
            tail_by_share[share] = (tail_var(after_annual, 0.99)
                                    / candidate_tail_cap)

        technical = ((mean_full + TECHNICAL_VOL_LOADING * sd_full)
                     / total_limit)
        market = ((mean_full + self.regulatory.market_rate_margin * sd_full)
                  / total_limit)
        tables = CandidateTables(
            terms=terms,
            expected_ceded_full=mean_full,
            ceded_sd_full=sd_full,
            reinstatement_fraction=reinst_frac,
            ceded_by_share=ceded_by_share,
            marginal_scr_by_share=scr_by_share,
            zone_util_by_share=zone_by_share,
            tail_util_by_share=tail_by_share,
            technical_rate=technical,
            market_rate=market,
        )
        self._table_cache[cache_key] = tables
        return tables

    # -- state assembly ------------------------------------------------------

    def build_state(self, treaty: Treaty,
                    terms: Optional[Treaty] = None) -> GlobalState:
        """Global state for a candidate; tables follow the operative terms."""
        _, base_annual, base_zones, base_capital = self.baseline(treaty.id)
        hazard = HazardState(n_years=self.n_years,
                             drift_factor=self.sample.drift_factor,
                             event_rate=self.event_rate)
        capital = base_capital
        port_tables: dict[str, Mapping[float, float]] = {}
        if terms is not None:
            tables = self.candidate_tables(treaty.id, terms)
            hazard = HazardState(
                n_years=self.n_years,
                expected_ceded_full=tables.expected_ceded_full,
                ceded_sd_full=tables.ceded_sd_full,
                ceded_by_share=tables.ceded_by_share,
                drift_factor=self.sample.drift_factor,
                event_rate=self.event_rate,
            )
            capital = CapitalState(
                own_funds=base_capital.own_funds,
                components=base_capital.components,
                diversified_scr=base_capital.diversified_scr,
                solvency_ratio=base_capital.solvency_ratio,
                marginal_scr_by_share=tables.marginal_scr_by_share,
            )
            port_tables = {
                "zone_util_by_share": tables.zone_util_by_share,
                "tail_var_by_share": tables.tail_util_by_share,
            }
        portfolio_view = PortfolioState(
            treaty_count=len(self.portfolio.treaties) - 1,
            zone_accumulation=base_zones,
            tail_var=tail_var(base_annual.astype(float), 0.99),
            **port_tables,
        )
        return GlobalState(
            treaty_view=TreatyState(treaty_id=treaty.id,
                                    wording=treaty.wording,
                                    terms=terms, truth=treaty),
            exposure_view=self.portfolio.exposures,
            hazard_view=hazard,
            capital_view=capital,
            portfolio_view=portfolio_view,
            claims_view=ClaimsState(),
            regulatory_view=self.regulatory,
        )

    # -- economics -----------------------------------------------------------

    def reinstatement_fraction(self, state: GlobalState) -> float:
        terms = state.treaty_view.terms
        if terms is None:
            return 0.0
        tables = self._table_cache.get(
            (state.treaty_view.treaty_id, structure_digest(terms)))
        return tables.reinstatement_fraction if tables is not None else 0.0

    def deal_economics(self, state: GlobalState,
                       action: ActionProfile) -> DealEconomics:
        return evaluate_deal(
            state, action, expense_ratio=self.expense_ratio,
            reinstatement_fraction=self.reinstatement_fraction(state))

    def reward(self, state: GlobalState, action: ActionProfile,
               unresolved: int = 0, violations: int = 0) -> RewardVector:
        return reward_vector(
            state, action, unresolved=unresolved, violations=violations,
            expense_ratio=self.expense_ratio,
            reinstatement_fraction=self.reinstatement_fraction(state))


def evaluate_deal(state: GlobalState, action: ActionProfile, *,
                  expense_ratio: float = 0.0,
                  reinstatement_fraction: float = 0.0) -> DealEconomics:
    """Evaluate an action against the tables carried in the state views.

    Pure in its arguments: every figure comes from the share-indexed
    tables, so mis-parsed terms flow through naturally, and an audited
    state snapshot is enough to reproduce the evaluation.
    """
    terms = state.treaty_view.terms
    if terms is None:
        raise ValueError("no operative terms in state")
    accept = action.pricing.accept
    capacity = action.portfolio.capacity_granted
    if not accept or capacity <= 0:
        return DealEconomics(share=0.0, capacity=0, premium=0.0,
                             expected_ceded=0.0, delta_scr=0.0,
                             placement_probability=0.0,
                             expected_profit=0.0, eva=0.0,
                             zone_utilisation=0.0, tail_utilisation=0.0,
                             required_premium=0.0)
    share = capacity / terms.total_limit
    hazard = state.hazard_view
    reg = state.regulatory_view
    expected_ceded = nearest_share(hazard.ceded_by_share, share)
    delta_scr = nearest_share(state.capital_view.marginal_scr_by_share, share)
    zone_util = nearest_share(state.portfolio_view.zone_util_by_share, share)
    tail_util = nearest_share(state.portfolio_view.tail_var_by_share, share)

    rate = action.pricing.rate_on_line
    technical, market = rate_corridor(state)
    premium = (rate * capacity * (1.0 + reinstatement_fraction)
               * (1.0 - expense_ratio))
    placement = placement_probability(rate, technical, market)
    hurdle_cost = reg.capital_hurdle * max(delta_scr, 0.0)
    expected_profit = placement * (premium - expected_ceded)
    eva = placement * (premium - expected_ceded - hurdle_cost)
    required = expected_ceded + hurdle_cost
    return DealEconomics(share=share, capacity=capacity, premium=premium,
                         expected_ceded=expected_ceded,
                         delta_scr=delta_scr,
                         placement_probability=placement,
                         expected_profit=expected_profit, eva=eva,
                         zone_utilisation=zone_util,
                         tail_utilisation=tail_util,
                         required_premium=required)


def reward_vector(state: GlobalState, action: ActionProfile, *,
                  unresolved: int = 0, violations: int = 0,
                  expense_ratio: float = 0.0,
                  reinstatement_fraction: float = 0.0) -> RewardVector:
    """Shared reward: capital efficiency less portfolio, consistency and
    governance penalties."""
    econ = evaluate_deal(state, action, expense_ratio=expense_ratio,
                         reinstatement_fraction=reinstatement_fraction)
    port = (0.5 * (econ.zone_utilisation + econ.tail_utilisation)
            if econ.capacity > 0 else 0.0)
    return RewardVector(cap=econ.eva / CAP_REWARD_SCALE, port=port,
                        cons=float(unresolved), gov=float(violations))


def rate_corridor(state: GlobalState) -> tuple[float, float]:
    """Technical floor and market ceiling for the rate on line."""
    terms = state.treaty_view.terms
    if terms is None or terms.total_limit <= 0:
        return 0.0, 0.0
    hazard = state.hazard_view
    technical = ((hazard.expected_ceded_full
                  + TECHNICAL_VOL_LOADING * hazard.ceded_sd_full)
                 / terms.total_limit)
    market = ((hazard.expected_ceded_full
               + state.regulatory_view.market_rate_margin
               * hazard.ceded_sd_full)
              / terms.total_limit)
    return technical, market


def placement_probability(rate: float, technical: float,
                          market: float) -> float:
    """Chance the cedent binds at this rate: one at the technical floor,
    falling linearly to zero at the market ceiling."""
    if rate <= technical:
        return 1.0
    if market <= technical:
        return 1.0 if rate <= market else 0.0
    if rate >= market:
        return 0.0
    return float((market - rate) / (market - technical))
