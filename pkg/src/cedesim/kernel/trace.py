"""Audit-trace serialization: snapshots that make episodes re-certifiable.

The audit chain of an episode carries, besides every message, a terminal
entry with the operative state snapshot, the committed action, the grid,
the scalarization weights and the norm configuration.  That is enough to
re-run the equilibrium certification offline from the persisted lines,
without the simulator that produced them.
"""
from __future__ import annotations

import json
from typing import Any, Iterable, Mapping, Optional

from ..core.audit import AuditChain
from ..core.types import (
    ActionProfile,
    CapitalAction,
    CapitalState,
    ClaimsState,
    ExposureState,
    GlobalState,
    HazardState,
    PortfolioAction,
    PortfolioState,
    PricingAction,
    RegulatoryState,
    RetroAction,
    RetroKind,
    Role,
    ScalarWeights,
    Treaty,
    TreatyState,
    TypedMessage,
)
from .context import evaluate_deal, reward_vector
from .equilibrium import ActionGrid, EquilibriumCertificate, certify_equilibrium


def _share_map(table: Mapping[float, float]) -> dict[str, float]:
    return {f"{k:g}": float(v) for k, v in table.items()}


def _float_map(table: Mapping[str, Any]) -> dict[float, float]:
    return {float(k): float(v) for k, v in table.items()}


def action_to_dict(action: ActionProfile) -> dict[str, Any]:
    return {
        "pricing": {"rate_on_line": action.pricing.rate_on_line,
                    "accept": action.pricing.accept},
        "portfolio": {"capacity_granted": action.portfolio.capacity_granted},
        "capital": {"allocated_capital": action.capital.allocated_capital},
        "retro": {"kind": (action.retro.kind.value
                           if action.retro.kind else None),
                  "cession": action.retro.cession,
                  "attachment": action.retro.attachment,
                  "limit": action.retro.limit},
    }


def action_from_dict(data: Mapping[str, Any]) -> ActionProfile:
    retro = data.get("retro", {})
    return ActionProfile(
        pricing=PricingAction(
            rate_on_line=float(data["pricing"]["rate_on_line"]),
            accept=bool(data["pricing"]["accept"])),
        portfolio=PortfolioAction(
            capacity_granted=int(data["portfolio"]["capacity_granted"])),
        capital=CapitalAction(
            allocated_capital=int(data["capital"]["allocated_capital"])),
        retro=RetroAction(
            kind=RetroKind(retro["kind"]) if retro.get("kind") else None,
            cession=float(retro.get("cession", 0.0)),
            attachment=int(retro.get("attachment", 0)),
            limit=int(retro.get("limit", 0))),
    )


def snapshot_state(state: GlobalState) -> dict[str, Any]:
    """Serialize the views that norms and rewards read."""
    treaty = state.treaty_view
    hazard = state.hazard_view
    capital = state.capital_view
    portfolio = state.portfolio_view
    regulatory = state.regulatory_view
    return {
        "treaty": {
            "treaty_id": treaty.treaty_id,
            "wording": treaty.wording,
            "terms": treaty.terms.to_dict() if treaty.terms else None,
            "truth": treaty.truth.to_dict() if treaty.truth else None,
        },
        "hazard": {
            "n_years": hazard.n_years,
            "expected_ceded_full": hazard.expected_ceded_full,
            "ceded_sd_full": hazard.ceded_sd_full,
            "ceded_by_share": _share_map(hazard.ceded_by_share),
            "drift_factor": hazard.drift_factor,
            "event_rate": hazard.event_rate,
        },
        "capital": {
            "own_funds": capital.own_funds,
            "components": {k: float(v) for k, v in capital.components.items()},
            "diversified_scr": capital.diversified_scr,
            "solvency_ratio": capital.solvency_ratio,
            "marginal_scr_by_share": _share_map(capital.marginal_scr_by_share),
        },
        "portfolio": {
            "treaty_count": portfolio.treaty_count,
            "zone_accumulation": {k: int(v) for k, v in
                                  sorted(portfolio.zone_accumulation.items())},
            "tail_var": portfolio.tail_var,
            "zone_util_by_share": _share_map(portfolio.zone_util_by_share),
            "tail_var_by_share": _share_map(portfolio.tail_var_by_share),
        },
        "regulatory": {
            "solvency_threshold": regulatory.solvency_threshold,
            "max_rounds": regulatory.max_rounds,
            "capital_hurdle": regulatory.capital_hurdle,
            "market_rate_margin": regulatory.market_rate_margin,
            "zone_cap": regulatory.zone_cap,
            "tail_var_cap": regulatory.tail_var_cap,
        },
    }


def state_from_snapshot(data: Mapping[str, Any]) -> GlobalState:
    treaty = data["treaty"]
    hazard = data["hazard"]
    capital = data["capital"]
    portfolio = data["portfolio"]
    regulatory = data["regulatory"]
    return GlobalState(
        treaty_view=TreatyState(
            treaty_id=treaty["treaty_id"],
            wording=treaty["wording"],
            terms=(Treaty.from_dict(treaty["terms"])
                   if treaty["terms"] else None),
            truth=(Treaty.from_dict(treaty["truth"])
                   if treaty["truth"] else None)),
        exposure_view=ExposureState(),
        hazard_view=HazardState(
            n_years=int(hazard["n_years"]),
            expected_ceded_full=float(hazard["expected_ceded_full"]),
            ceded_sd_full=float(hazard["ceded_sd_full"]),
            ceded_by_share=_float_map(hazard["ceded_by_share"]),
            drift_factor=float(hazard["drift_factor"]),
            event_rate=float(hazard["event_rate"])),
        capital_view=CapitalState(
            own_funds=int(capital["own_funds"]),
            components={k: float(v)
                        for k, v in capital["components"].items()},
            diversified_scr=float(capital["diversified_scr"]),
            solvency_ratio=float(capital["solvency_ratio"]),
            marginal_scr_by_share=_float_map(
                capital["marginal_scr_by_share"])),
        portfolio_view=PortfolioState(
            treaty_count=int(portfolio["treaty_count"]),
            zone_accumulation={k: int(v) for k, v in
                               portfolio["zone_accumulation"].items()},
            tail_var=float(portfolio["tail_var"]),
            zone_util_by_share=_float_map(portfolio["zone_util_by_share"]),
            tail_var_by_share=_float_map(portfolio["tail_var_by_share"])),
        claims_view=ClaimsState(),
        regulatory_view=RegulatoryState(
            solvency_threshold=float(regulatory["solvency_threshold"]),
            max_rounds=int(regulatory["max_rounds"]),
            capital_hurdle=float(regulatory["capital_hurdle"]),
            market_rate_margin=float(regulatory["market_rate_margin"]),
            zone_cap=regulatory["zone_cap"],
            tail_var_cap=regulatory["tail_var_cap"]),
    )


def recertify(lines: Iterable[str]) -> EquilibriumCertificate:
    """Re-run the equilibrium certification from persisted audit lines.

    Verifies the hash chain first, then rebuilds the terminal state, the
    committed action, the message log and the grid from the trace alone.
    Raises TamperError on a broken chain and ValueError on an incomplete
    trace.
    """
    chain = AuditChain.from_lines(lines)
    chain.verify()
    start: Optional[Mapping[str, Any]] = None
    terminal: Optional[Mapping[str, Any]] = None
    messages: list[TypedMessage] = []
    for entry in chain.entries:
        payload = json.loads(entry.payload)
        kind = payload.get("type")
        if kind == "episode_start":
            start = payload
        elif kind == "message":
            data = {k: v for k, v in payload.items() if k != "type"}
            messages.append(TypedMessage.from_dict(data))
        elif kind == "terminal":
            terminal = payload
    if start is None or terminal is None:
        raise ValueError("trace has no episode_start/terminal entries")

    state = state_from_snapshot(terminal["state"])
    action = action_from_dict(terminal["action"])
    grid = ActionGrid(rates=tuple(start["rates"]),
                      shares=tuple(start["shares"]),
                      total_limit=int(terminal["total_limit"]))
    weights = ScalarWeights(**start["weights"])
    expense_ratio = float(start["expense_ratio"])
    reinstatement_fraction = float(terminal["reinstatement_fraction"])

    from .norms_catalog import feasibility_for_roles
    roles = frozenset(Role(r) for r in start["roles"])
    feasibility = feasibility_for_roles(
        roles, float(start["solvency_threshold"]))

    def reward_fn(s: GlobalState, a: ActionProfile):
        return reward_vector(
            s, a, expense_ratio=expense_ratio,
            reinstatement_fraction=reinstatement_fraction)

    return certify_equilibrium(
        trajectory=[(state, action)],
        messages=messages,
        feasibility=feasibility,
        grid=grid,
        weights=weights,
        reward_fn=reward_fn,
        epsilon=float(start["epsilon"]),
        history=tuple(messages),
    )
