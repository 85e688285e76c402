"""Shared carrier types: treaties, state views, messages, rewards.

Monetary amounts are 64-bit ints in whole currency units so that cession
arithmetic conserves exactly; statistics derived from them are float64.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Any, Iterable, Mapping, Optional

import numpy as np


class Peril(str, Enum):
    WIND = "Wind"
    FLOOD = "Flood"
    WILDFIRE = "Wildfire"


class LineOfBusiness(str, Enum):
    PROPERTY_CAT = "PropertyCat"
    PROPERTY_PER_RISK = "PropertyPerRisk"
    CASUALTY = "Casualty"


class ExclusionKind(str, Enum):
    STORM_SURGE = "StormSurge"
    FLOOD = "Flood"
    WILDFIRE = "Wildfire"
    TERROR = "Terror"
    NUCLEAR = "Nuclear"
    CYBER_SILENT = "CyberSilent"


# Canonical render order for set-valued treaty fields.
PERIL_ORDER = (Peril.WIND, Peril.FLOOD, Peril.WILDFIRE)
EXCLUSION_ORDER = (
    ExclusionKind.STORM_SURGE,
    ExclusionKind.FLOOD,
    ExclusionKind.WILDFIRE,
    ExclusionKind.TERROR,
    ExclusionKind.NUCLEAR,
    ExclusionKind.CYBER_SILENT,
)


@dataclass(frozen=True)
class ExclusionClause:
    """An exclusion as it appears in a wording.

    ``ambiguous`` marks clauses rendered with scope language elided, the
    variant that noisy interpretation misreads more often.  Two clauses with
    the same kind but different rendering are structurally equal in treaty
    comparisons only through :meth:`Treaty.structure_equal`, which compares
    kinds alone.
    """

    kind: ExclusionKind
    ambiguous: bool = False


@dataclass(frozen=True)
class TreatyLayer:
    """One excess-of-loss layer: ``limit xs attachment``.

    reinstatement_premium_pct is the fraction of the pro-rata annual layer
    premium charged per unit of limit reinstated (1.0 means 100% pro rata).
    """

    attachment: int
    limit: int
    reinstatements: int
    reinstatement_premium_pct: float = 1.0

    def __post_init__(self) -> None:
        if self.attachment < 0:
            raise ValueError(f"attachment must be >= 0, got {self.attachment}")
        if self.limit <= 0:
            raise ValueError(f"limit must be positive, got {self.limit}")
        if self.reinstatements < 0:
            raise ValueError(
                f"reinstatements must be >= 0, got {self.reinstatements}"
            )
        if not 0.0 <= self.reinstatement_premium_pct <= 2.0:
            raise ValueError(
                "reinstatement_premium_pct outside [0, 2]: "
                f"{self.reinstatement_premium_pct}"
            )

    @property
    def annual_capacity(self) -> int:
        # limit * (1 + reinstatements): original limit plus full reinstatements
        return self.limit * (1 + self.reinstatements)


@dataclass(frozen=True)
class Treaty:
    """An excess-of-loss treaty with paired text and structured form.

    ``wording`` carries the text this structure was rendered from or parsed
    out of; it is ignored by :meth:`structure_equal` so that a noisy parse
    can be compared against ground truth on terms alone.

    Invariants enforced here: layers sorted by attachment and
    non-overlapping, exclusion kinds unique, zones and perils non-empty.
    """

    id: str
    line_of_business: LineOfBusiness
    layers: tuple[TreatyLayer, ...]
    perils: frozenset[Peril]
    exclusions: tuple[ExclusionClause, ...]
    zones: frozenset[str]
    hours_clause: Optional[int] = None
    wording: str = ""

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError(f"treaty {self.id}: at least one layer required")
        prev_top = -1
        for i, layer in enumerate(self.layers):
            if layer.attachment < prev_top:
                raise ValueError(
                    f"treaty {self.id}: layer {i + 1} attachment "
                    f"{layer.attachment} overlaps layer below"
                )
            prev_top = layer.attachment + layer.limit
        kinds = [c.kind for c in self.exclusions]
        if len(kinds) != len(set(kinds)):
            raise ValueError(f"treaty {self.id}: duplicate exclusion kinds")
        if not self.perils:
            raise ValueError(f"treaty {self.id}: perils must be non-empty")
        if not self.zones:
            raise ValueError(f"treaty {self.id}: zones must be non-empty")
        if self.hours_clause is not None and self.hours_clause <= 0:
            raise ValueError(
                f"treaty {self.id}: hours clause must be positive"
            )

    @property
    def total_limit(self) -> int:
        return sum(layer.limit for layer in self.layers)

    @property
    def excluded_kinds(self) -> frozenset[ExclusionKind]:
        return frozenset(c.kind for c in self.exclusions)

    def sorted_perils(self) -> tuple[Peril, ...]:
        return tuple(p for p in PERIL_ORDER if p in self.perils)

    def sorted_zones(self) -> tuple[str, ...]:
        return tuple(sorted(self.zones))

    def structure_equal(self, other: "Treaty") -> bool:
        """Compare structured terms, ignoring wording text and clause rendering."""
        return (
            self.id == other.id
            and self.line_of_business == other.line_of_business
            and self.layers == other.layers
            and self.perils == other.perils
            and self.excluded_kinds == other.excluded_kinds
            and self.zones == other.zones
            and self.hours_clause == other.hours_clause
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "line_of_business": self.line_of_business.value,
            "layers": [
                {
                    "attachment": l.attachment,
                    "limit": l.limit,
                    "reinstatements": l.reinstatements,
                    "reinstatement_premium_pct": l.reinstatement_premium_pct,
                }
                for l in self.layers
            ],
            "perils": [p.value for p in self.sorted_perils()],
            "exclusions": [
                {"kind": c.kind.value, "ambiguous": c.ambiguous}
                for c in self.exclusions
            ],
            "zones": list(self.sorted_zones()),
            "hours_clause": self.hours_clause,
            "wording": self.wording,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Treaty":
        return cls(
            id=data["id"],
            line_of_business=LineOfBusiness(data["line_of_business"]),
            layers=tuple(
                TreatyLayer(
                    attachment=int(l["attachment"]),
                    limit=int(l["limit"]),
                    reinstatements=int(l["reinstatements"]),
                    reinstatement_premium_pct=float(
                        l.get("reinstatement_premium_pct", 1.0)
                    ),
                )
                for l in data["layers"]
            ),
            perils=frozenset(Peril(p) for p in data["perils"]),
            exclusions=tuple(
                ExclusionClause(
                    kind=ExclusionKind(c["kind"]),
                    ambiguous=bool(c.get("ambiguous", False)),
                )
                for c in data["exclusions"]
            ),
            zones=frozenset(data["zones"]),
            hours_clause=data.get("hours_clause"),
            wording=data.get("wording", ""),
        )


@dataclass(frozen=True)
class Location:
    """A single insured exposure point."""

    zone: str
    x: float
    y: float
    insured_value: int
    line_of_business: LineOfBusiness

    def __post_init__(self) -> None:
        if self.insured_value <= 0:
            raise ValueError("insured_value must be positive")


# ---------------------------------------------------------------------------
# Global state and its component views.


@dataclass(frozen=True)
class TreatyState:
    """Candidate treaty under negotiation: wording plus operative parse."""

    treaty_id: str
    wording: str
    terms: Optional[Treaty] = None
    truth: Optional[Treaty] = None  # generator ground truth, hidden from agents


@dataclass(frozen=True)
class ExposureState:
    locations: tuple[Location, ...] = ()

    def zone_insured_value(self) -> dict[str, int]:
        totals: dict[str, int] = {}
        for loc in self.locations:
            totals[loc.zone] = totals.get(loc.zone, 0) + loc.insured_value
        return totals


@dataclass(frozen=True)
class HazardState:
    """Simulated annual ground-up losses to the candidate treaty's layers.

    ``ceded_by_share`` maps capacity-share grid points to expected annual
    ceded loss; ``ceded_sd`` is the annual standard deviation at full share.
    Arrays are read-only views produced by the perils engine.
    """

    n_years: int = 0
    expected_ceded_full: float = 0.0
    ceded_sd_full: float = 0.0
    ceded_by_share: Mapping[float, float] = field(default_factory=dict)
    drift_factor: float = 1.0
    event_rate: float = 0.0


@dataclass(frozen=True)
class CapitalState:
    """Solvency view: component requirements and candidate marginals.

    ``marginal_scr_by_share`` maps capacity-share grid points to the change
    in diversified capital requirement if the candidate is written at that
    share; populated by the capital engine when a candidate is under review.
    """

    own_funds: int = 0
    components: Mapping[str, float] = field(default_factory=dict)
    diversified_scr: float = 0.0
    solvency_ratio: float = 0.0
    marginal_scr_by_share: Mapping[float, float] = field(default_factory=dict)


@dataclass(frozen=True)
class PortfolioState:
    """In-force book summary plus candidate accumulation tables."""

    treaty_count: int = 0
    zone_accumulation: Mapping[str, int] = field(default_factory=dict)
    tail_var: float = 0.0
    zone_util_by_share: Mapping[float, float] = field(default_factory=dict)
    tail_var_by_share: Mapping[float, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ClaimsState:
    open_events: int = 0
    paid: int = 0
    recovered: int = 0


@dataclass(frozen=True)
class RegulatoryState:
    """Solvency threshold, risk appetite and procedural limits.

    Thresholds must be positive and max_rounds at least 1; zone and tail
    caps are optional appetite limits expressed as utilisation denominators.
    """

    solvency_threshold: float = 1.0
    max_rounds: int = 20
    capital_hurdle: float = 0.06
    market_rate_margin: float = 0.6
    zone_cap: Optional[int] = None
    tail_var_cap: Optional[float] = None

    def __post_init__(self) -> None:
        if self.solvency_threshold <= 0:
            raise ValueError("solvency_threshold must be positive")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.capital_hurdle < 0:
            raise ValueError("capital_hurdle must be >= 0")
        if self.zone_cap is not None and self.zone_cap <= 0:
            raise ValueError("zone_cap must be positive when set")
        if self.tail_var_cap is not None and self.tail_var_cap <= 0:
            raise ValueError("tail_var_cap must be positive when set")


@dataclass(frozen=True)
class GlobalState:
    """The full simulator state: seven component views."""

    treaty_view: TreatyState
    exposure_view: ExposureState = ExposureState()
    hazard_view: HazardState = HazardState()
    capital_view: CapitalState = CapitalState()
    portfolio_view: PortfolioState = PortfolioState()
    claims_view: ClaimsState = ClaimsState()
    regulatory_view: RegulatoryState = RegulatoryState()

    def with_views(self, **views: Any) -> "GlobalState":
        return replace(self, **views)


# ---------------------------------------------------------------------------
# Actions.


class RetroKind(str, Enum):
    QUOTA_SHARE = "QuotaShare"
    EXCESS_OF_LOSS = "ExcessOfLoss"
    AGGREGATE_XL = "AggregateXL"


@dataclass(frozen=True)
class PricingAction:
    """Quote: rate on line applied to granted limit; accept closes the deal."""

    rate_on_line: float = 0.0
    accept: bool = False

    def __post_init__(self) -> None:
        if self.rate_on_line < 0:
            raise ValueError("rate_on_line must be >= 0")


@dataclass(frozen=True)
class PortfolioAction:
    """Capacity granted to the candidate, in currency units of limit."""

    capacity_granted: int = 0

    def __post_init__(self) -> None:
        if self.capacity_granted < 0:
            raise ValueError("capacity_granted must be >= 0")


@dataclass(frozen=True)
class CapitalAction:
    allocated_capital: int = 0

    def __post_init__(self) -> None:
        if self.allocated_capital < 0:
            raise ValueError("allocated_capital must be >= 0")


@dataclass(frozen=True)
class RetroAction:
    kind: Optional[RetroKind] = None
    cession: float = 0.0
    attachment: int = 0
    limit: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.cession <= 1.0:
            raise ValueError("cession must lie in [0, 1]")


@dataclass(frozen=True)
class ActionProfile:
    """Joint action across roles for one decision step."""

    pricing: PricingAction = PricingAction()
    portfolio: PortfolioAction = PortfolioAction()
    capital: CapitalAction = CapitalAction()
    retro: RetroAction = RetroAction()

    def numeric_components(self) -> dict[str, float]:
        """Flatten the numeric fields used by nearest-feasible projection."""
        return {
            "pricing.rate_on_line": self.pricing.rate_on_line,
            "pricing.accept": 1.0 if self.pricing.accept else 0.0,
            "portfolio.capacity_granted": float(self.portfolio.capacity_granted),
            "capital.allocated_capital": float(self.capital.allocated_capital),
            "retro.cession": self.retro.cession,
        }


# ---------------------------------------------------------------------------
# Rewards.


@dataclass(frozen=True)
class RewardVector:
    """Four-component reward: capital efficiency and three penalties.

    Penalty components (port, cons, gov) are non-negative by construction;
    cap may take either sign.
    """

    cap: float = 0.0
    port: float = 0.0
    cons: float = 0.0
    gov: float = 0.0

    def __post_init__(self) -> None:
        for name in ("port", "cons", "gov"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def __add__(self, other: "RewardVector") -> "RewardVector":
        return RewardVector(
            cap=self.cap + other.cap,
            port=self.port + other.port,
            cons=self.cons + other.cons,
            gov=self.gov + other.gov,
        )


@dataclass(frozen=True)
class ScalarWeights:
    """Weights for collapsing a RewardVector to a scalar objective."""

    alpha: float = 1.0
    beta: float = 0.25
    gamma: float = 0.25
    delta: float = 0.5

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "delta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def scalarize(reward: RewardVector, weights: ScalarWeights) -> float:
    """Collapse a reward vector: alpha*cap - beta*port - gamma*cons - delta*gov."""
    return (
        weights.alpha * reward.cap
        - weights.beta * reward.port
        - weights.gamma * reward.cons
        - weights.delta * reward.gov
    )


# ---------------------------------------------------------------------------
# Roles, messages, communication graph.


class Role(str, Enum):
    """Functional roles an agent configuration may activate."""

    TREATY_INTERPRETATION = "TreatyInterpretation"
    EXPOSURE_UNDERSTANDING = "ExposureUnderstanding"
    KNOWLEDGE_RETRIEVAL = "KnowledgeRetrieval"
    HAZARD_MODELING = "HazardModeling"
    SCENARIO_STRESS = "ScenarioStress"
    MODEL_RISK = "ModelRisk"
    PRICING = "Pricing"
    CAPITAL = "Capital"
    PORTFOLIO_STEERING = "PortfolioSteering"
    RETRO_STRATEGY = "RetroStrategy"
    CLAIMS = "Claims"
    COMPLIANCE = "Compliance"
    AUDIT_TRAIL = "AuditTrail"
    GOVERNANCE = "Governance"
    HUMAN_OVERSIGHT = "HumanOversight"


class Workflow(str, Enum):
    PRICING = "Pricing"
    CLAIMS_EVALUATION = "ClaimsEvaluation"
    RETROCESSION_OPTIMIZATION = "RetrocessionOptimization"
    EXPOSURE_MANAGEMENT = "ExposureManagement"
    REGULATORY_REPORTING = "RegulatoryReporting"


class MessageKind(str, Enum):
    STATE = "State"
    PROPOSAL = "Proposal"
    CRITIQUE = "Critique"
    CONSTRAINT = "Constraint"


@dataclass(frozen=True)
class TypedMessage:
    """A speech act exchanged between roles inside one workflow run.

    ``payload`` must be JSON-serializable; it is hashed into the audit
    chain verbatim.  ``refers_to`` carries the msg_id of the message this
    one answers (a Critique's target Proposal, a resolving revision's
    Critique), which is how resolution is certified from a trace.
    """

    msg_id: str
    workflow: Workflow
    round: int
    sender: Role
    recipients: frozenset[Role]
    kind: MessageKind
    payload: Mapping[str, Any] = field(default_factory=dict)
    refers_to: Optional[str] = None

    def __post_init__(self) -> None:
        if self.round < 0:
            raise ValueError("round must be >= 0")
        if not self.recipients:
            raise ValueError("recipients must be non-empty")
        if self.sender in self.recipients:
            raise ValueError("self-addressed messages are not allowed")

    def to_dict(self) -> dict[str, Any]:
        return {
            "msg_id": self.msg_id,
            "workflow": self.workflow.value,
            "round": self.round,
            "sender": self.sender.value,
            "recipients": sorted(r.value for r in self.recipients),
            "kind": self.kind.value,
            "payload": dict(self.payload),
            "refers_to": self.refers_to,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TypedMessage":
        return cls(
            msg_id=data["msg_id"],
            workflow=Workflow(data["workflow"]),
            round=int(data["round"]),
            sender=Role(data["sender"]),
            recipients=frozenset(Role(r) for r in data["recipients"]),
            kind=MessageKind(data["kind"]),
            payload=dict(data.get("payload", {})),
            refers_to=data.get("refers_to"),
        )


@dataclass(frozen=True)
class DecisionRecord:
    """One committed decision step, for history-dependent norms.

    Message-free trajectories (the degenerate single-agent wrapping) still
    need an inspectable history; these records sit alongside TypedMessage
    entries in the episode history without counting as communication.
    """

    step: int
    actor: Role
    bound: bool
    scr_delta: float
    accepted: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "step": self.step,
            "actor": self.actor.value,
            "bound": self.bound,
            "scr_delta": self.scr_delta,
            "accepted": self.accepted,
        }


class ProtocolError(Exception):
    """A message violated the communication graph or typing rules."""


@dataclass(frozen=True)
class CommGraph:
    """Directed who-may-message-whom graph over roles."""

    edges: frozenset[tuple[Role, Role]]

    def allows(self, sender: Role, recipient: Role) -> bool:
        return (sender, recipient) in self.edges

    def check(self, message: TypedMessage) -> None:
        for recipient in message.recipients:
            if not self.allows(message.sender, recipient):
                raise ProtocolError(
                    f"edge {message.sender.value} -> {recipient.value} "
                    f"not in communication graph (msg {message.msg_id})"
                )

    @classmethod
    def complete_over(cls, roles: Iterable[Role]) -> "CommGraph":
        role_list = list(roles)
        return cls(
            edges=frozenset(
                (a, b) for a in role_list for b in role_list if a != b
            )
        )


# ---------------------------------------------------------------------------
# Seed substreams.


def substream(seed: int, *labels: object) -> np.random.Generator:
    """Derive an independent generator from a root seed and a label path.

    The mapping is sha256 over "seed:label:..." so the same path always
    yields the same stream on any platform, and unrelated paths never
    collide in practice.
    """
    import hashlib

    material = ":".join([str(int(seed)), *[str(l) for l in labels]])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def canonical_json(obj: Any) -> str:
    """Serialize with sorted keys and no whitespace; stable across runs."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
