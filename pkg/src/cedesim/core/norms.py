"""Norms: a closed predicate language evaluated over (state, action).

The language is deliberately small: threshold comparisons over named
scalars, set membership, and conjunction.  Scalars are resolved through a
registry of pure extractor functions, so norm definitions stay data and
every evaluation is deterministic and side-effect free.  History-dependent
norms name a builtin rule from HISTORY_RULES instead of carrying code.
"""
from __future__ import annotations

import operator
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence, Union

from .types import ActionProfile, DecisionRecord, GlobalState, Role, TypedMessage

HistoryEvent = Union[TypedMessage, DecisionRecord]


class ConfigurationError(Exception):
    """A norm referenced an unknown scalar, set, or history rule."""


class NormKind(str, Enum):
    OBLIGATION = "Obligation"
    PROHIBITION = "Prohibition"


class NormScope(str, Enum):
    STATE = "State"
    ACTION = "Action"
    HISTORY = "History"


class NormSource(str, Enum):
    REGULATORY = "Regulatory"
    CONTRACTUAL = "Contractual"
    INTERNAL = "Internal"


Scalar = Union[float, int, bool, str, frozenset]
Resolver = Callable[[GlobalState, ActionProfile], Scalar]

_OPS: dict[str, Callable[[float, float], bool]] = {
    ">=": operator.ge,
    "<=": operator.le,
    ">": operator.gt,
    "<": operator.lt,
    "==": operator.eq,
}


@dataclass(frozen=True)
class Comparison:
    """scalar <op> value, e.g. Comparison("capital.post_solvency_ratio", ">=", 1.0)."""

    scalar: str
    op: str
    value: float

    def __post_init__(self) -> None:
        if self.op not in _OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True)
class Membership:
    """Resolved item is (not) a member of the resolved collection."""

    item: str
    collection: str
    negate: bool = False


@dataclass(frozen=True)
class SubsetOf:
    """Resolved set is a subset of the resolved set."""

    subset: str
    superset: str


@dataclass(frozen=True)
class All:
    """Conjunction of sub-predicates."""

    children: tuple["Predicate", ...]


Predicate = Union[Comparison, Membership, SubsetOf, All]


# ---------------------------------------------------------------------------
# Scalar resolution.

def _base_resolver(name: str) -> Optional[Resolver]:
    """Resolve dotted paths against the state views and action profile."""
    view_map = {
        "treaty": "treaty_view",
        "exposure": "exposure_view",
        "hazard": "hazard_view",
        "capital": "capital_view",
        "portfolio": "portfolio_view",
        "claims": "claims_view",
        "regulatory": "regulatory_view",
    }
    parts = name.split(".")
    if len(parts) != 2:
        return None
    head, attr = parts
    if head == "action":
        def resolve_action(state: GlobalState, action: ActionProfile) -> Scalar:
            for entry in (action.pricing, action.portfolio, action.capital,
                          action.retro):
                if hasattr(entry, attr):
                    value = getattr(entry, attr)
                    return value.value if isinstance(value, Enum) else value
            raise ConfigurationError(f"unknown action field {attr!r}")
        return resolve_action
    if head in view_map:
        view_attr = view_map[head]

        def resolve_view(state: GlobalState, action: ActionProfile) -> Scalar:
            view = getattr(state, view_attr)
            if not hasattr(view, attr):
                raise ConfigurationError(f"unknown state field {name!r}")
            value = getattr(view, attr)
            return value.value if isinstance(value, Enum) else value
        return resolve_view
    return None


class ScalarRegistry:
    """Named extractors over (state, action) used by norm predicates.

    Registered names shadow nothing: dotted view paths resolve directly,
    the registry holds derived quantities (post-action ratios, utilisations)
    that need arithmetic over several views.
    """

    def __init__(self) -> None:
        self._extractors: dict[str, Resolver] = {}

    def register(self, name: str, fn: Resolver) -> None:
        if name in self._extractors:
            raise ConfigurationError(f"scalar {name!r} already registered")
        self._extractors[name] = fn

    def resolve(self, name: str, state: GlobalState,
                action: ActionProfile) -> Scalar:
        fn = self._extractors.get(name)
        if fn is not None:
            return fn(state, action)
        base = _base_resolver(name)
        if base is not None:
            return base(state, action)
        raise ConfigurationError(f"unknown scalar {name!r}")


def marginal_scr_for(state: GlobalState, action: ActionProfile) -> float:
    """Capital-requirement delta implied by the action's granted capacity.

    Looks up the capital view's share-indexed marginal table at the share
    closest to capacity_granted / total treaty limit; zero when no capacity
    is granted or no candidate is under review.
    """
    capacity = action.portfolio.capacity_granted
    terms = state.treaty_view.terms
    table = state.capital_view.marginal_scr_by_share
    if capacity <= 0 or terms is None or not table:
        return 0.0
    share = capacity / terms.total_limit
    nearest = min(table, key=lambda k: abs(k - share))
    return float(table[nearest])


# ---------------------------------------------------------------------------
# History rules.

HistoryRule = Callable[
    [GlobalState, ActionProfile, Sequence[HistoryEvent], Mapping[str, Any]],
    bool,
]

HISTORY_RULES: dict[str, HistoryRule] = {}


def history_rule(name: str) -> Callable[[HistoryRule], HistoryRule]:
    def register(fn: HistoryRule) -> HistoryRule:
        if name in HISTORY_RULES:
            raise ConfigurationError(f"history rule {name!r} already registered")
        HISTORY_RULES[name] = fn
        return fn
    return register


def _messages(history: Sequence[HistoryEvent]) -> list[TypedMessage]:
    return [e for e in history if isinstance(e, TypedMessage)]


def _decisions(history: Sequence[HistoryEvent]) -> list[DecisionRecord]:
    return [e for e in history if isinstance(e, DecisionRecord)]


@history_rule("capital_check_before_accept")
def _capital_check_before_accept(
    state: GlobalState,
    action: ActionProfile,
    history: Sequence[HistoryEvent],
    params: Mapping[str, Any],
) -> bool:
    """Accepting requires a prior capital-role Constraint or State message.

    Encodes the procedural obligation that a solvency assessment happened
    before the deal closes; satisfied trivially while accept is False.
    """
    from .types import MessageKind, Role

    if not action.pricing.accept:
        return True
    for msg in _messages(history):
        if msg.sender is Role.CAPITAL and msg.kind in (
            MessageKind.CONSTRAINT, MessageKind.STATE
        ):
            return True
    return False


@history_rule("critiques_resolved_before_accept")
def _critiques_resolved_before_accept(
    state: GlobalState,
    action: ActionProfile,
    history: Sequence[HistoryEvent],
    params: Mapping[str, Any],
) -> bool:
    """Accepting requires every Critique in history to have a response.

    A Critique is resolved when a later message carries refers_to equal to
    its msg_id.  Satisfied trivially while accept is False.
    """
    from .types import MessageKind

    if not action.pricing.accept:
        return True
    messages = _messages(history)
    answered = {m.refers_to for m in messages if m.refers_to is not None}
    for msg in messages:
        if msg.kind is MessageKind.CRITIQUE and msg.msg_id not in answered:
            return False
    return True


@history_rule("consecutive_scr_increasing_binds")
def _consecutive_scr_increasing_binds(
    state: GlobalState,
    action: ActionProfile,
    history: Sequence[HistoryEvent],
    params: Mapping[str, Any],
) -> bool:
    """True when this action would make two SCR-increasing binds in a row.

    A bind is a decision granting capacity; intended as a Prohibition so
    that a pipeline with no memory of its own past decisions violates it
    on engineered back-to-back capital-consuming sequences.
    """
    binds_now = (
        action.portfolio.capacity_granted > 0
        and marginal_scr_for(state, action) > 0
    )
    if not binds_now:
        return False
    decisions = _decisions(history)
    if not decisions:
        return False
    last = decisions[-1]
    return last.bound and last.scr_delta > 0


# ---------------------------------------------------------------------------
# Norm specifications and the feasibility set.


@dataclass(frozen=True)
class NormSpec:
    """One norm: a predicate (or history rule) with kind, scope, source.

    For OBLIGATION the predicate must hold; for PROHIBITION it must not.
    History-scoped norms set ``history_rule`` instead of ``predicate``.
    """

    id: str
    kind: NormKind
    scope: NormScope
    source: NormSource
    predicate: Optional[Predicate] = None
    history_rule: Optional[str] = None
    params: Mapping[str, Any] = field(default_factory=dict)
    description: str = ""
    # Procedural norms about inter-agent messaging only apply when the
    # issuing roles exist as separate agents; empty means always applies.
    requires_roles: frozenset[Role] = frozenset()

    def __post_init__(self) -> None:
        if self.scope is NormScope.HISTORY:
            if self.history_rule is None:
                raise ValueError(f"norm {self.id}: history scope needs a rule")
        elif self.predicate is None:
            raise ValueError(f"norm {self.id}: predicate required")


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    violated: tuple[str, ...] = ()


class FeasibilitySet:
    """The set of (state, action) pairs admitted by a family of norms."""

    def __init__(self, norms: Iterable[NormSpec],
                 registry: Optional[ScalarRegistry] = None) -> None:
        self.norms = tuple(norms)
        ids = [n.id for n in self.norms]
        if len(ids) != len(set(ids)):
            raise ConfigurationError("duplicate norm ids")
        self.registry = registry or ScalarRegistry()

    def _eval_predicate(self, norm_id: str, pred: Predicate,
                        state: GlobalState, action: ActionProfile) -> bool:
        try:
            if isinstance(pred, Comparison):
                left = self.registry.resolve(pred.scalar, state, action)
                return _OPS[pred.op](float(left), float(pred.value))
            if isinstance(pred, Membership):
                item = self.registry.resolve(pred.item, state, action)
                coll = self.registry.resolve(pred.collection, state, action)
                result = item in coll  # type: ignore[operator]
                return (not result) if pred.negate else result
            if isinstance(pred, SubsetOf):
                sub = self.registry.resolve(pred.subset, state, action)
                sup = self.registry.resolve(pred.superset, state, action)
                return frozenset(sub) <= frozenset(sup)  # type: ignore[arg-type]
            if isinstance(pred, All):
                return all(
                    self._eval_predicate(norm_id, child, state, action)
                    for child in pred.children
                )
        except ConfigurationError as exc:
            raise ConfigurationError(f"norm {norm_id}: {exc}") from exc
        raise ConfigurationError(f"norm {norm_id}: unknown predicate node")

    def _satisfied(self, norm: NormSpec, state: GlobalState,
                   action: ActionProfile,
                   history: Sequence[HistoryEvent]) -> bool:
        if norm.scope is NormScope.HISTORY:
            rule = HISTORY_RULES.get(norm.history_rule or "")
            if rule is None:
                raise ConfigurationError(
                    f"norm {norm.id}: unknown history rule {norm.history_rule!r}"
                )
            holds = rule(state, action, history, norm.params)
        else:
            assert norm.predicate is not None
            holds = self._eval_predicate(norm.id, norm.predicate, state, action)
        return holds if norm.kind is NormKind.OBLIGATION else not holds

    def check(self, state: GlobalState, action: ActionProfile,
              history: Sequence[HistoryEvent] = ()) -> FeasibilityResult:
        """Evaluate every norm; feasible iff none is violated."""
        violated = tuple(
            norm.id for norm in self.norms
            if not self._satisfied(norm, state, action, history)
        )
        return FeasibilityResult(feasible=not violated, violated=violated)
