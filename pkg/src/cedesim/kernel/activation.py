"""Workflow-driven role activation and per-role observation masks.

Each workflow activates a fixed subset of roles; every other role stays
dormant for the episode.  Each active role sees only a fixed subset of
state views — the rest of its belief must arrive through typed messages,
which is what makes negotiation necessary (for example Pricing never
observes the capital view directly and must wait for Capital to speak).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from ..core.types import GlobalState, Role, TypedMessage, Workflow

VIEW_NAMES = ("treaty", "exposure", "hazard", "capital", "portfolio",
              "claims", "regulatory")

ACTIVATION: Mapping[Workflow, frozenset[Role]] = {
    Workflow.PRICING: frozenset({
        Role.TREATY_INTERPRETATION, Role.EXPOSURE_UNDERSTANDING,
        Role.HAZARD_MODELING, Role.PRICING, Role.CAPITAL,
        Role.PORTFOLIO_STEERING, Role.GOVERNANCE,
    }),
    Workflow.CLAIMS_EVALUATION: frozenset({
        Role.TREATY_INTERPRETATION, Role.CLAIMS, Role.SCENARIO_STRESS,
        Role.AUDIT_TRAIL, Role.GOVERNANCE,
    }),
    Workflow.RETROCESSION_OPTIMIZATION: frozenset({
        Role.SCENARIO_STRESS, Role.HAZARD_MODELING, Role.CAPITAL,
        Role.RETRO_STRATEGY, Role.PORTFOLIO_STEERING, Role.GOVERNANCE,
    }),
    Workflow.EXPOSURE_MANAGEMENT: frozenset({
        Role.EXPOSURE_UNDERSTANDING, Role.HAZARD_MODELING,
        Role.SCENARIO_STRESS, Role.PORTFOLIO_STEERING, Role.CAPITAL,
        Role.GOVERNANCE,
    }),
    Workflow.REGULATORY_REPORTING: frozenset({
        Role.COMPLIANCE, Role.AUDIT_TRAIL, Role.GOVERNANCE,
        Role.HUMAN_OVERSIGHT,
    }),
}

OBSERVATION_MASKS: Mapping[Role, frozenset[str]] = {
    Role.TREATY_INTERPRETATION: frozenset({"treaty"}),
    Role.EXPOSURE_UNDERSTANDING: frozenset({"treaty", "exposure"}),
    Role.KNOWLEDGE_RETRIEVAL: frozenset({"treaty", "regulatory"}),
    Role.HAZARD_MODELING: frozenset({"treaty", "exposure", "hazard"}),
    Role.SCENARIO_STRESS: frozenset({"hazard", "exposure", "portfolio"}),
    Role.MODEL_RISK: frozenset({"hazard", "capital"}),
    Role.PRICING: frozenset({"treaty", "hazard", "regulatory"}),
    Role.CAPITAL: frozenset({"hazard", "capital", "portfolio", "regulatory"}),
    Role.PORTFOLIO_STEERING: frozenset({"portfolio", "exposure", "regulatory"}),
    Role.RETRO_STRATEGY: frozenset({"portfolio", "capital", "hazard",
                                    "regulatory"}),
    Role.CLAIMS: frozenset({"treaty", "claims", "hazard"}),
    Role.COMPLIANCE: frozenset({"regulatory", "capital", "portfolio"}),
    Role.AUDIT_TRAIL: frozenset(),
    Role.GOVERNANCE: frozenset(VIEW_NAMES),
    Role.HUMAN_OVERSIGHT: frozenset({"treaty", "regulatory"}),
}


def activate_roles(workflow: Workflow) -> frozenset[Role]:
    return ACTIVATION[workflow]


@dataclass
class BeliefState:
    """What one role knows: masked direct views plus message-borne facts."""

    role: Role
    views: dict[str, object] = field(default_factory=dict)
    inbox: list[TypedMessage] = field(default_factory=list)
    facts: dict[str, object] = field(default_factory=dict)

    def view(self, name: str) -> Optional[object]:
        return self.views.get(name)

    def remember(self, key: str, value: object) -> None:
        self.facts[key] = value

    def recall(self, key: str, default: object = None) -> object:
        return self.facts.get(key, default)


def observe(state: GlobalState, role: Role) -> BeliefState:
    """Mask the global state down to the role's visible views."""
    mask = OBSERVATION_MASKS[role]
    views = {name: getattr(state, f"{name}_view")
             for name in VIEW_NAMES if name in mask}
    return BeliefState(role=role, views=views)
