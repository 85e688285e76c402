"""Norm-governed negotiation kernel.

Builds the shared simulation context for a generated portfolio, activates
role sets per workflow, runs message-passing episodes under four agent
profiles, projects terminal actions to the feasible set, certifies
operational equilibria, and re-certifies them from persisted audit traces.
"""
from .activation import (
    ACTIVATION,
    OBSERVATION_MASKS,
    VIEW_NAMES,
    BeliefState,
    activate_roles,
    observe,
)
from .adapter import (
    AdapterOutcome,
    DegenerateInstance,
    Pipeline,
    degenerate_adapter,
)
from .context import (
    SHARE_GRID,
    CandidateTables,
    DealEconomics,
    SimulationContext,
    evaluate_deal,
    placement_probability,
    rate_corridor,
    reward_vector,
    structure_digest,
)
from .engine import (
    RATE_GRID,
    EpisodeOutcome,
    Profile,
    best_quote,
    default_noise,
    rule_based_pipeline,
    run_episode,
)
from .equilibrium import (
    ActionGrid,
    EquilibriumCertificate,
    InfeasibilityError,
    action_distance,
    certify_equilibrium,
    project_to_feasible,
)
from .governance import (
    CAPITAL_MISMATCH,
    INTERPRETATION_MISMATCH,
    UNANSWERED_VIOLATION,
    GovernanceFlag,
    governance_check,
)
from .norms_catalog import (
    PREMIUM_TOLERANCE,
    feasibility_for_roles,
    pricing_norms,
    pricing_registry,
)
from .trace import (
    action_from_dict,
    action_to_dict,
    recertify,
    snapshot_state,
    state_from_snapshot,
)

__all__ = [
    "ACTIVATION",
    "OBSERVATION_MASKS",
    "VIEW_NAMES",
    "BeliefState",
    "activate_roles",
    "observe",
    "AdapterOutcome",
    "DegenerateInstance",
    "Pipeline",
    "degenerate_adapter",
    "SHARE_GRID",
    "CandidateTables",
    "DealEconomics",
    "SimulationContext",
    "evaluate_deal",
    "placement_probability",
    "rate_corridor",
    "reward_vector",
    "structure_digest",
    "RATE_GRID",
    "EpisodeOutcome",
    "Profile",
    "best_quote",
    "default_noise",
    "rule_based_pipeline",
    "run_episode",
    "ActionGrid",
    "EquilibriumCertificate",
    "InfeasibilityError",
    "action_distance",
    "certify_equilibrium",
    "project_to_feasible",
    "CAPITAL_MISMATCH",
    "INTERPRETATION_MISMATCH",
    "UNANSWERED_VIOLATION",
    "GovernanceFlag",
    "governance_check",
    "PREMIUM_TOLERANCE",
    "feasibility_for_roles",
    "pricing_norms",
    "pricing_registry",
    "action_from_dict",
    "action_to_dict",
    "recertify",
    "snapshot_state",
    "state_from_snapshot",
]
