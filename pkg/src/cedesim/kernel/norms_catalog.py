"""Default norm set and derived scalars for the pricing workflow.

Four substantive norms (solvency floor, premium adequacy, zone capacity,
tail budget) evaluate against share-indexed candidate tables carried in
the state views, so they are pure in (state, action).  Two procedural
norms police the message protocol and only apply when the Capital role
exists as a separate agent (a single-agent pipeline cannot message
itself, so they would be unsatisfiable there rather than meaningful).
"""
from __future__ import annotations

from typing import Optional

from ..core.norms import (
    Comparison,
    FeasibilitySet,
    NormKind,
    NormScope,
    NormSource,
    NormSpec,
    ScalarRegistry,
)
from ..core.types import ActionProfile, GlobalState, Role

PREMIUM_TOLERANCE = 1.0  # one currency unit of slack on adequacy
BIG_RATIO = 1e9          # stands in for an unconstrained solvency ratio


def _deal_on(state: GlobalState, action: ActionProfile) -> bool:
    return action.pricing.accept and action.portfolio.capacity_granted > 0


def _share(state: GlobalState, action: ActionProfile) -> float:
    terms = state.treaty_view.terms
    if terms is None or terms.total_limit <= 0:
        return 0.0
    return action.portfolio.capacity_granted / terms.total_limit


def _nearest(table, share: float, default: float = 0.0) -> float:
    if not table:
        return default
    key = min(table, key=lambda k: (abs(k - share), k))
    return float(table[key])


def post_solvency_ratio(state: GlobalState, action: ActionProfile) -> float:
    """Own funds plus premium over the requirement including the deal."""
    capital = state.capital_view
    scr = capital.diversified_scr
    premium = 0.0
    if _deal_on(state, action):
        share = _share(state, action)
        scr += max(_nearest(capital.marginal_scr_by_share, share), 0.0)
        premium = (action.pricing.rate_on_line
                   * action.portfolio.capacity_granted)
    if scr <= 0.0:
        return BIG_RATIO if capital.own_funds + premium >= 0 else 0.0
    return (capital.own_funds + premium) / scr


def premium_shortfall(state: GlobalState, action: ActionProfile) -> float:
    """Required premium (loss cost plus hurdle on marginal capital) minus
    written premium; zero when no capacity is granted."""
    if not _deal_on(state, action):
        return 0.0
    share = _share(state, action)
    expected = _nearest(state.hazard_view.ceded_by_share, share)
    delta = max(_nearest(state.capital_view.marginal_scr_by_share, share), 0.0)
    required = expected + state.regulatory_view.capital_hurdle * delta
    written = action.pricing.rate_on_line * action.portfolio.capacity_granted
    return required - written


def zone_utilisation_after(state: GlobalState,
                           action: ActionProfile) -> float:
    if not _deal_on(state, action):
        return 0.0
    return _nearest(state.portfolio_view.zone_util_by_share,
                    _share(state, action))


def tail_utilisation_after(state: GlobalState,
                           action: ActionProfile) -> float:
    if not _deal_on(state, action):
        return 0.0
    return _nearest(state.portfolio_view.tail_var_by_share,
                    _share(state, action))


def pricing_registry() -> ScalarRegistry:
    registry = ScalarRegistry()
    registry.register("derived.post_solvency_ratio", post_solvency_ratio)
    registry.register("derived.premium_shortfall", premium_shortfall)
    registry.register("derived.zone_utilisation_after", zone_utilisation_after)
    registry.register("derived.tail_utilisation_after", tail_utilisation_after)
    return registry


def pricing_norms(solvency_threshold: float = 1.0) -> tuple[NormSpec, ...]:
    return (
        NormSpec(
            id="solvency_floor",
            kind=NormKind.OBLIGATION,
            scope=NormScope.ACTION,
            source=NormSource.REGULATORY,
            predicate=Comparison("derived.post_solvency_ratio", ">=",
                                 solvency_threshold),
            description="own funds must cover the requirement after the deal",
        ),
        NormSpec(
            id="premium_adequacy",
            kind=NormKind.OBLIGATION,
            scope=NormScope.ACTION,
            source=NormSource.INTERNAL,
            predicate=Comparison("derived.premium_shortfall", "<=",
                                 PREMIUM_TOLERANCE),
            description="premium covers loss cost plus the capital hurdle",
        ),
        NormSpec(
            id="zone_capacity",
            kind=NormKind.PROHIBITION,
            scope=NormScope.ACTION,
            source=NormSource.INTERNAL,
            predicate=Comparison("derived.zone_utilisation_after", ">", 1.0),
            description="no zone accumulation above its capacity cap",
        ),
        NormSpec(
            id="tail_budget",
            kind=NormKind.PROHIBITION,
            scope=NormScope.ACTION,
            source=NormSource.INTERNAL,
            predicate=Comparison("derived.tail_utilisation_after", ">", 1.0),
            description="book tail value-at-risk stays inside its budget",
        ),
        NormSpec(
            id="capital_sign_off",
            kind=NormKind.OBLIGATION,
            scope=NormScope.HISTORY,
            source=NormSource.INTERNAL,
            history_rule="capital_check_before_accept",
            description="a capital assessment message precedes any accept",
            requires_roles=frozenset({Role.CAPITAL}),
        ),
        NormSpec(
            id="critique_resolution",
            kind=NormKind.OBLIGATION,
            scope=NormScope.HISTORY,
            source=NormSource.INTERNAL,
            history_rule="critiques_resolved_before_accept",
            description="all critiques answered before any accept",
            requires_roles=frozenset({Role.CAPITAL}),
        ),
    )


def feasibility_for_roles(active_roles: frozenset[Role],
                          solvency_threshold: float = 1.0,
                          registry: Optional[ScalarRegistry] = None,
                          ) -> FeasibilitySet:
    """Feasibility set restricted to norms whose required roles are active."""
    norms = [n for n in pricing_norms(solvency_threshold)
             if n.requires_roles <= active_roles]
    return FeasibilitySet(norms, registry or pricing_registry())
