"""Feasibility projection and equilibrium certification.

Projection maps an infeasible joint action to the nearest feasible grid
point under a weighted L2 distance on action components normalized to
[0, 1] by grid extent, ties broken by canonical grid enumeration order.
Certification checks the three operational-equilibrium properties:
trajectory feasibility, message consistency, and constrained stability
under exhaustive unilateral grid deviations.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from ..core.norms import FeasibilitySet, HistoryEvent
from ..core.types import (
    ActionProfile,
    GlobalState,
    MessageKind,
    PortfolioAction,
    PricingAction,
    RewardVector,
    Role,
    ScalarWeights,
    TypedMessage,
    scalarize,
)


class InfeasibilityError(Exception):
    """No grid point is feasible; negotiation must escalate."""


@dataclass(frozen=True)
class ActionGrid:
    """Discretized joint-action space for one candidate treaty.

    Components: rate on line and accept (owned by Pricing), capacity
    share of the total limit (owned by Portfolio Steering).  Capital's
    allocated-capital entry follows deterministically from the chosen
    share and is not a negotiated grid dimension.
    """

    rates: tuple[float, ...]
    shares: tuple[float, ...]
    total_limit: int

    def __post_init__(self) -> None:
        if not self.rates or not self.shares:
            raise ValueError("grid must have at least one rate and share")
        if self.total_limit <= 0:
            raise ValueError("total_limit must be positive")

    def capacity(self, share: float) -> int:
        return int(round(share * self.total_limit))

    def enumerate(self) -> list[ActionProfile]:
        """Canonical order: decline first, then (rate, share) ascending."""
        points = [ActionProfile()]
        for rate in self.rates:
            for share in self.shares:
                if share == 0.0:
                    continue
                points.append(ActionProfile(
                    pricing=PricingAction(rate_on_line=rate, accept=True),
                    portfolio=PortfolioAction(
                        capacity_granted=self.capacity(share)),
                ))
        return points

    def deviations(self, role: Role, base: ActionProfile) -> list[ActionProfile]:
        """Grid points differing from base only in the role's components."""
        if role is Role.PRICING:
            out = [replace(base, pricing=PricingAction(rate_on_line=rate,
                                                       accept=True))
                   for rate in self.rates]
            out.append(replace(base, pricing=PricingAction(
                rate_on_line=base.pricing.rate_on_line, accept=False)))
            return [a for a in out if a != base]
        if role is Role.PORTFOLIO_STEERING:
            return [
                a for share in self.shares
                if (a := replace(base, portfolio=PortfolioAction(
                    capacity_granted=self.capacity(share)))) != base
            ]
        return []


def _component_extents(points: Sequence[ActionProfile]) -> dict[str, tuple[float, float]]:
    extents: dict[str, tuple[float, float]] = {}
    for point in points:
        for key, value in point.numeric_components().items():
            lo, hi = extents.get(key, (value, value))
            extents[key] = (min(lo, value), max(hi, value))
    return extents


def action_distance(a: ActionProfile, b: ActionProfile,
                    extents: Mapping[str, tuple[float, float]],
                    weights: Optional[Mapping[str, float]] = None) -> float:
    """Weighted L2 over components normalized to [0,1] by grid extent."""
    ca, cb = a.numeric_components(), b.numeric_components()
    total = 0.0
    for key in set(ca) | set(cb):
        lo, hi = extents.get(key, (0.0, 0.0))
        span = hi - lo
        diff = ca.get(key, 0.0) - cb.get(key, 0.0)
        if span > 0:
            diff /= span
        elif diff != 0.0:
            diff = 1.0
        w = 1.0 if weights is None else weights.get(key, 1.0)
        total += w * diff * diff
    return float(np.sqrt(total))


def project_to_feasible(state: GlobalState, action: ActionProfile,
                        feasibility: FeasibilitySet,
                        grid: Sequence[ActionProfile],
                        history: Sequence[HistoryEvent] = (),
                        weights: Optional[Mapping[str, float]] = None,
                        ) -> ActionProfile:
    """Identity on feasible actions, else the nearest feasible grid point.

    Raises InfeasibilityError when no grid point passes, which callers
    turn into escalation.
    """
    if feasibility.check(state, action, history).feasible:
        return action
    candidates = [a for a in grid
                  if feasibility.check(state, a, history).feasible]
    if not candidates:
        raise InfeasibilityError("no feasible grid point")
    extents = _component_extents(list(grid) + [action])
    best = candidates[0]
    best_d = action_distance(action, best, extents, weights)
    for cand in candidates[1:]:
        d = action_distance(action, cand, extents, weights)
        if d < best_d - 1e-15:
            best, best_d = cand, d
    return best


# ---------------------------------------------------------------------------
# Certification.


RewardFn = Callable[[GlobalState, ActionProfile], RewardVector]


@dataclass(frozen=True)
class EquilibriumCertificate:
    feasible: bool
    consistent: bool
    stable: bool

    @property
    def holds(self) -> bool:
        return self.feasible and self.consistent and self.stable

    def to_dict(self) -> dict[str, bool]:
        return {"feasible": self.feasible, "consistent": self.consistent,
                "stable": self.stable}


def _unresolved(messages: Sequence[TypedMessage]) -> list[TypedMessage]:
    answered = {m.refers_to for m in messages if m.refers_to is not None}
    return [
        m for m in messages
        if m.kind in (MessageKind.CRITIQUE, MessageKind.CONSTRAINT)
        and m.msg_id not in answered
    ]


def _proposals_compatible(messages: Sequence[TypedMessage],
                          final: ActionProfile) -> bool:
    """One accepted proposal per decision variable: the last proposal for
    each variable must match the final action profile."""
    last: dict[str, float] = {}
    for m in messages:
        if m.kind is not MessageKind.PROPOSAL:
            continue
        for variable in ("rate_on_line", "capacity_granted"):
            if variable in m.payload:
                last[variable] = float(m.payload[variable])
    components = final.numeric_components()
    for variable, value in last.items():
        key = ("pricing.rate_on_line" if variable == "rate_on_line"
               else "portfolio.capacity_granted")
        if abs(components[key] - value) > 1e-9:
            return False
    return True


def certify_equilibrium(trajectory: Sequence[tuple[GlobalState, ActionProfile]],
                        messages: Sequence[TypedMessage],
                        feasibility: FeasibilitySet,
                        grid: ActionGrid,
                        weights: ScalarWeights,
                        reward_fn: RewardFn,
                        epsilon: float = 1e-9,
                        history: Sequence[HistoryEvent] = (),
                        deviating_roles: Sequence[Role] = (
                            Role.PRICING, Role.PORTFOLIO_STEERING),
                        ) -> EquilibriumCertificate:
    """Evaluate the three operational-equilibrium checks on a trajectory.

    feasible: every visited (state, action) passes the norm check;
    consistent: no unresolved Critique/Constraint and the last proposal
    per decision variable matches the final action; stable: no unilateral
    feasible grid deviation of any role improves the scalarized reward by
    more than epsilon.
    """
    if not trajectory:
        raise ValueError("empty trajectory")
    feasible = all(
        feasibility.check(state, action, history).feasible
        for state, action in trajectory
    )
    consistent = (
        not _unresolved(messages)
        and _proposals_compatible(messages, trajectory[-1][1])
    )

    terminal_state, terminal_action = trajectory[-1]
    base_value = scalarize(reward_fn(terminal_state, terminal_action), weights)
    stable = True
    for role in deviating_roles:
        for deviation in grid.deviations(role, terminal_action):
            if not feasibility.check(terminal_state, deviation,
                                     history).feasible:
                continue
            value = scalarize(reward_fn(terminal_state, deviation), weights)
            if value > base_value + epsilon:
                stable = False
                break
        if not stable:
            break
    return EquilibriumCertificate(feasible=feasible, consistent=consistent,
                                  stable=stable)
