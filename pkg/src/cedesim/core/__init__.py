"""Shared carriers: state, actions, messages, norms, rewards, audit chain."""
from .audit import (
    GENESIS_PREV,
    AuditChain,
    AuditEntry,
    TamperError,
    audit_append,
)
from .norms import (
    All,
    HistoryEvent,
    Comparison,
    ConfigurationError,
    FeasibilityResult,
    FeasibilitySet,
    HISTORY_RULES,
    Membership,
    NormKind,
    history_rule,
    marginal_scr_for,
    NormScope,
    NormSource,
    NormSpec,
    ScalarRegistry,
    SubsetOf,
)
from .types import (
    ActionProfile,
    DecisionRecord,
    CapitalAction,
    CapitalState,
    ClaimsState,
    CommGraph,
    ExclusionClause,
    ExclusionKind,
    ExposureState,
    GlobalState,
    HazardState,
    LineOfBusiness,
    Location,
    MessageKind,
    Peril,
    PortfolioAction,
    PortfolioState,
    PricingAction,
    ProtocolError,
    RegulatoryState,
    RetroAction,
    RetroKind,
    RewardVector,
    Role,
    ScalarWeights,
    Treaty,
    TreatyLayer,
    TreatyState,
    TypedMessage,
    Workflow,
    canonical_json,
    scalarize,
    substream,
)

__all__ = [
    "ActionProfile", "All", "AuditChain", "AuditEntry", "CapitalAction",
    "CapitalState", "ClaimsState", "CommGraph", "Comparison",
    "ConfigurationError", "DecisionRecord", "ExclusionClause", "ExclusionKind", "ExposureState",
    "FeasibilityResult", "FeasibilitySet", "GENESIS_PREV", "GlobalState",
    "HISTORY_RULES", "HazardState", "HistoryEvent", "LineOfBusiness", "Location",
    "Membership", "MessageKind", "NormKind", "NormScope", "NormSource",
    "NormSpec", "Peril", "PortfolioAction", "PortfolioState", "PricingAction",
    "ProtocolError", "RegulatoryState", "RetroAction", "RetroKind",
    "RewardVector", "Role", "ScalarRegistry", "ScalarWeights", "SubsetOf",
    "TamperError", "Treaty", "TreatyLayer", "TreatyState", "TypedMessage",
    "Workflow", "audit_append", "canonical_json", "history_rule", "marginal_scr_for", "scalarize", "substream",
]
