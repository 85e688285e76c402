"""Negotiation engine: norm-governed agents pricing one candidate treaty.

Four agent configurations share one environment:

* MultiAgent — each activated role is a separate agent with a masked view
  of the state; beliefs propagate only through typed messages delivered at
  the next synchronous round, and Governance re-derives the parse and the
  capital numbers, critiquing mismatches until they are repaired.
* NoGovernance — the same negotiation with the Governance role removed,
  so interpretation mistakes go unchallenged.
* SingleAgent — one agent with every view performs the same reasoning as
  internal stages with no messages.
* RuleBased — a fixed pricing pipeline wrapped as a degenerate
  single-agent instance: noisy parse, loading-factor rate, always accept.

Every profile ends with the same commitment discipline: the terminal
action is passed through nearest-feasible projection against the agent's
operative beliefs, then checked ex post against ground truth; truth
violations, projection infeasibility, and round exhaustion escalate the
episode to human review.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

from ..core.audit import AuditChain
from ..core.norms import FeasibilitySet, HistoryEvent
from ..core.types import (
    ActionProfile,
    CapitalAction,
    CommGraph,
    DecisionRecord,
    GlobalState,
    MessageKind,
    PortfolioAction,
    PricingAction,
    RewardVector,
    Role,
    ScalarWeights,
    Treaty,
    TypedMessage,
    Workflow,
    scalarize,
    substream,
)
from ..genesis.wording import (
    NoiseModel,
    clause_count,
    clause_diff,
    parse_wording_exact,
    parse_wording_noisy,
)
from .activation import activate_roles
from .adapter import Pipeline, degenerate_adapter
from .context import (
    CAP_REWARD_SCALE,
    SimulationContext,
    evaluate_deal,
    structure_digest,
)
from .equilibrium import (
    ActionGrid,
    EquilibriumCertificate,
    InfeasibilityError,
    certify_equilibrium,
    project_to_feasible,
)
from .governance import (
    CAPITAL_MISMATCH,
    INTERPRETATION_MISMATCH,
    governance_check,
)
from .norms_catalog import PREMIUM_TOLERANCE, feasibility_for_roles

RATE_GRID = tuple(round(0.0025 * i, 4) for i in range(1, 121))

ROLE_ORDER = (
    Role.TREATY_INTERPRETATION,
    Role.EXPOSURE_UNDERSTANDING,
    Role.HAZARD_MODELING,
    Role.PRICING,
    Role.CAPITAL,
    Role.PORTFOLIO_STEERING,
    Role.GOVERNANCE,
)


class Profile(str, Enum):
    RULE_BASED = "RuleBased"
    SINGLE_AGENT = "SingleAgent"
    MULTI_AGENT = "MultiAgent"
    NO_GOVERNANCE = "NoGovernance"


def default_noise(profile: Profile) -> NoiseModel:
    base = 0.15 if profile is Profile.RULE_BASED else 0.08
    return NoiseModel(clause_error_rate=base,
                      ambiguous_exclusion_error_rate=min(0.5, 3.0 * base),
                      threshold_shift=0.10)


@dataclass(frozen=True)
class EpisodeOutcome:
    """Everything the benchmark and the acceptance checks need."""

    treaty_id: str
    workflow: Workflow
    profile: Profile
    seed: int
    rounds: Optional[int]
    message_count: int
    action: ActionProfile
    accepted: bool
    recommended_rate: Optional[float]
    escalated: bool
    escalation_reason: Optional[str]
    certificate: Optional[EquilibriumCertificate]
    clause_errors: int
    clause_total: int
    premium: float
    expected_ceded_true: float
    delta_scr_true: float
    reward: RewardVector
    scalar_reward: float
    messages: tuple[TypedMessage, ...]
    history: tuple[HistoryEvent, ...]
    audit: AuditChain
    terminal_state: GlobalState

    @property
    def interpretation_error(self) -> float:
        if self.clause_total == 0:
            return 0.0
        return self.clause_errors / self.clause_total

    @property
    def audit_head(self) -> str:
        return self.audit.head


def best_quote(state: GlobalState, grid: ActionGrid, weights: ScalarWeights,
               *, expense_ratio: float, reinstatement_fraction: float,
               max_share: float = 1.0, solvency_threshold: float = 1.0,
               know_capital: bool = True, know_portfolio: bool = True,
               ) -> ActionProfile:
    """Argmax of the shared scalarized reward over the quote grid.

    Unknown tables (capital or portfolio facts not yet received) are
    treated as zero burden, which is exactly why first proposals attract
    constraints.  Returns the decline profile when nothing beats zero.
    """
    capital_table = state.capital_view.marginal_scr_by_share
    best_action = ActionProfile()
    best_value = 0.0
    for share in sorted(s for s in grid.shares if 0.0 < s <= max_share + 1e-12):
        capacity = grid.capacity(share)
        if capacity <= 0:
            continue
        for rate in grid.rates:
            action = ActionProfile(
                pricing=PricingAction(rate_on_line=rate, accept=True),
                portfolio=PortfolioAction(capacity_granted=capacity))
            econ = evaluate_deal(
                state, action, expense_ratio=expense_ratio,
                reinstatement_fraction=reinstatement_fraction)
            delta = econ.delta_scr if know_capital else 0.0
            if know_capital:
                written = rate * capacity
                required = econ.expected_ceded + (
                    state.regulatory_view.capital_hurdle * max(delta, 0.0))
                if required - written > PREMIUM_TOLERANCE:
                    continue
                scr_after = (state.capital_view.diversified_scr
                             + max(delta, 0.0))
                if scr_after > 0 and ((state.capital_view.own_funds + written)
                                      / scr_after) < solvency_threshold:
                    continue
            if know_portfolio:
                if econ.zone_utilisation > 1.0 or econ.tail_utilisation > 1.0:
                    continue
                port = 0.5 * (econ.zone_utilisation + econ.tail_utilisation)
            else:
                port = 0.0
            hurdle_cost = (state.regulatory_view.capital_hurdle
                           * max(delta, 0.0))
            eva = econ.placement_probability * (
                econ.premium - econ.expected_ceded - hurdle_cost)
            value = (weights.alpha * eva / CAP_REWARD_SCALE
                     - weights.beta * port)
            if value > best_value + 1e-12:
                best_value, best_action = value, action
    return best_action


def _share_payload(table: Mapping[float, float]) -> dict[str, float]:
    return {f"{share:g}": float(value) for share, value in table.items()}


class _Negotiation:
    """Mutable episode state for the message-passing profiles."""

    def __init__(self, context: SimulationContext, treaty: Treaty,
                 profile: Profile, seed: int, noise: NoiseModel,
                 weights: ScalarWeights, epsilon: float) -> None:
        self.context = context
        self.treaty = treaty
        self.profile = profile
        self.seed = seed
        self.noise = noise
        self.weights = weights
        self.epsilon = epsilon
        roles = set(activate_roles(Workflow.PRICING))
        if profile is Profile.NO_GOVERNANCE:
            roles -= {Role.GOVERNANCE, Role.HUMAN_OVERSIGHT}
        self.roles = frozenset(roles)
        self.graph = CommGraph.complete_over(self.roles)
        self.feasibility = feasibility_for_roles(
            self.roles, context.regulatory.solvency_threshold)
        self.parse_rng = substream(seed, "episode", treaty.id, profile.value,
                                   "parse")
        self.audit = AuditChain()
        self.history: list[HistoryEvent] = []
        self.messages: list[TypedMessage] = []
        self.inboxes: dict[Role, list[TypedMessage]] = {r: [] for r in roles}
        self.outbox: list[TypedMessage] = []
        self.facts: dict[Role, dict] = {r: {} for r in roles}
        self.operative: Optional[Treaty] = None
        self.state: GlobalState = context.build_state(treaty, None)
        self.round = 0
        self._msg_seq = itertools.count(1)

    # -- plumbing ------------------------------------------------------------

    def emit(self, sender: Role, kind: MessageKind, payload: Mapping,
             recipients: Sequence[Role], refers_to: Optional[str] = None,
             ) -> TypedMessage:
        targets = frozenset(r for r in recipients
                            if r in self.roles and r is not sender)
        if not targets:
            raise RuntimeError(f"no active recipients for {sender.value}")
        message = TypedMessage(
            msg_id=f"m{next(self._msg_seq):04d}",
            workflow=Workflow.PRICING,
            round=self.round,
            sender=sender,
            recipients=targets,
            kind=kind,
            payload=dict(payload),
            refers_to=refers_to,
        )
        self.graph.check(message)
        self.outbox.append(message)
        self.messages.append(message)
        self.history.append(message)
        self.audit.append({"type": "message", **message.to_dict()})
        return message

    def unresolved(self) -> list[TypedMessage]:
        answered = {m.refers_to for m in self.messages
                    if m.refers_to is not None}
        return [m for m in self.messages
                if m.kind in (MessageKind.CRITIQUE, MessageKind.CONSTRAINT)
                and m.msg_id not in answered]

    def adopt_terms(self, terms: Treaty) -> None:
        self.operative = terms
        self.state = self.context.build_state(self.treaty, terms)

    def others(self, sender: Role) -> list[Role]:
        return [r for r in ROLE_ORDER if r in self.roles and r is not sender]

    # -- role policies --------------------------------------------------------

    def run_interpretation(self, inbox: list[TypedMessage]) -> None:
        facts = self.facts[Role.TREATY_INTERPRETATION]
        for msg in inbox:
            if (msg.kind is MessageKind.CRITIQUE
                    and "corrected_terms" in msg.payload):
                corrected = Treaty.from_dict(msg.payload["corrected_terms"])
                self.adopt_terms(corrected)
                self.emit(Role.TREATY_INTERPRETATION, MessageKind.STATE,
                          {"terms": corrected.to_dict(), "revised": True},
                          self.others(Role.TREATY_INTERPRETATION),
                          refers_to=msg.msg_id)
                return
        if "parsed" not in facts:
            facts["parsed"] = True
            terms = parse_wording_noisy(self.treaty.wording, self.noise,
                                        self.parse_rng)
            self.adopt_terms(terms)
            self.emit(Role.TREATY_INTERPRETATION, MessageKind.STATE,
                      {"terms": terms.to_dict()},
                      self.others(Role.TREATY_INTERPRETATION))

    def run_exposure(self, inbox: list[TypedMessage]) -> None:
        facts = self.facts[Role.EXPOSURE_UNDERSTANDING]
        if "sent" in facts:
            return
        facts["sent"] = True
        totals = self.state.exposure_view.zone_insured_value()
        recipients = [r for r in (Role.HAZARD_MODELING,
                                  Role.PORTFOLIO_STEERING, Role.GOVERNANCE)
                      if r in self.roles]
        self.emit(Role.EXPOSURE_UNDERSTANDING, MessageKind.STATE,
                  {"zone_insured_value": {z: int(v)
                                          for z, v in sorted(totals.items())}},
                  recipients)

    def run_hazard(self, inbox: list[TypedMessage]) -> None:
        facts = self.facts[Role.HAZARD_MODELING]
        for msg in inbox:
            if msg.sender is Role.TREATY_INTERPRETATION and "terms" in msg.payload:
                facts["terms_digest"] = structure_digest(
                    Treaty.from_dict(msg.payload["terms"]))
        digest = facts.get("terms_digest")
        if digest is None or facts.get("reported_digest") == digest:
            return
        facts["reported_digest"] = digest
        hazard = self.state.hazard_view
        recipients = [r for r in (Role.PRICING, Role.CAPITAL,
                                  Role.PORTFOLIO_STEERING, Role.GOVERNANCE)
                      if r in self.roles]
        self.emit(Role.HAZARD_MODELING, MessageKind.STATE,
                  {"terms_digest": digest,
                   "n_years": hazard.n_years,
                   "expected_ceded_full": hazard.expected_ceded_full,
                   "ceded_sd_full": hazard.ceded_sd_full,
                   "ceded_by_share": _share_payload(hazard.ceded_by_share)},
                  recipients)

    def run_pricing(self, inbox: list[TypedMessage]) -> None:
        facts = self.facts[Role.PRICING]
        open_items: list[TypedMessage] = facts.setdefault("open", [])
        for msg in inbox:
            if msg.sender is Role.HAZARD_MODELING:
                facts["hazard_digest"] = msg.payload.get("terms_digest")
            elif msg.sender is Role.CAPITAL and msg.kind is MessageKind.STATE \
                    and "marginal_scr_by_share" in msg.payload:
                facts["capital_known"] = True
            elif msg.sender is Role.PORTFOLIO_STEERING \
                    and msg.kind is MessageKind.STATE \
                    and "zone_util_by_share" in msg.payload:
                facts["portfolio_known"] = True
            elif msg.kind is MessageKind.CRITIQUE:
                if "max_feasible_share" in msg.payload:
                    facts["max_share"] = float(
                        msg.payload["max_feasible_share"])
                open_items.append(msg)
            elif msg.kind is MessageKind.CONSTRAINT:
                open_items.append(msg)
        if "hazard_digest" not in facts:
            return
        operative = self.state.treaty_view.terms
        if operative is None:
            return
        digest = structure_digest(operative)
        if facts["hazard_digest"] != digest:
            return  # hazard numbers are stale; wait for the re-report
        grid = ActionGrid(rates=RATE_GRID,
                          shares=self.context.share_grid,
                          total_limit=operative.total_limit)
        quote = best_quote(
            self.state, grid, self.weights,
            expense_ratio=self.context.expense_ratio,
            reinstatement_fraction=self.context.reinstatement_fraction(
                self.state),
            max_share=facts.get("max_share", 1.0),
            solvency_threshold=(
                self.state.regulatory_view.solvency_threshold),
            know_capital=facts.get("capital_known", False),
            know_portfolio=facts.get("portfolio_known", False),
        )
        proposal = {
            "rate_on_line": quote.pricing.rate_on_line,
            "capacity_granted": quote.portfolio.capacity_granted,
            "share": (quote.portfolio.capacity_granted
                      / operative.total_limit),
            "accept": quote.pricing.accept,
            "terms_digest": digest,
        }
        last = facts.get("last_proposal")
        if last is not None and last == proposal and not open_items:
            return
        facts["last_proposal"] = proposal
        recipients = [r for r in (Role.CAPITAL, Role.PORTFOLIO_STEERING,
                                  Role.GOVERNANCE) if r in self.roles]
        refers = open_items[0].msg_id if open_items else None
        message = self.emit(Role.PRICING, MessageKind.PROPOSAL, proposal,
                            recipients, refers_to=refers)
        facts["proposal_id"] = message.msg_id
        for item in open_items[1:]:
            self.emit(Role.PRICING, MessageKind.STATE,
                      {"superseded_by": message.msg_id},
                      [item.sender], refers_to=item.msg_id)
        open_items.clear()

    def run_capital(self, inbox: list[TypedMessage]) -> None:
        facts = self.facts[Role.CAPITAL]
        proposals = [m for m in inbox if m.kind is MessageKind.PROPOSAL]
        for msg in inbox:
            if msg.sender is Role.HAZARD_MODELING \
                    and "terms_digest" in msg.payload:
                facts["digest"] = msg.payload["terms_digest"]
        digest = facts.get("digest")
        if digest is not None and facts.get("assessed") != digest:
            facts["assessed"] = digest
            capital = self.state.capital_view
            self.emit(Role.CAPITAL, MessageKind.STATE,
                      {"terms_digest": digest,
                       "marginal_scr_by_share": _share_payload(
                           capital.marginal_scr_by_share),
                       "diversified_scr": capital.diversified_scr,
                       "own_funds": capital.own_funds},
                      [r for r in (Role.PRICING, Role.PORTFOLIO_STEERING,
                                   Role.GOVERNANCE) if r in self.roles])
        for proposal in proposals:
            if not proposal.payload.get("accept", False):
                continue
            action = _action_from_payload(proposal.payload)
            econ = evaluate_deal(
                self.state, action,
                expense_ratio=self.context.expense_ratio,
                reinstatement_fraction=self.context.reinstatement_fraction(
                    self.state))
            written = (action.pricing.rate_on_line
                       * action.portfolio.capacity_granted)
            required = econ.expected_ceded + (
                self.state.regulatory_view.capital_hurdle
                * max(econ.delta_scr, 0.0))
            scr_after = (self.state.capital_view.diversified_scr
                         + max(econ.delta_scr, 0.0))
            ratio = ((self.state.capital_view.own_funds + written) / scr_after
                     if scr_after > 0 else float("inf"))
            threshold = self.state.regulatory_view.solvency_threshold
            if required - written > PREMIUM_TOLERANCE or ratio < threshold:
                self.emit(Role.CAPITAL, MessageKind.CONSTRAINT,
                          {"norm_id": ("premium_adequacy"
                                       if required - written > PREMIUM_TOLERANCE
                                       else "solvency_floor"),
                           "required_premium": required,
                           "post_solvency_ratio": ratio},
                          [Role.PRICING] + ([Role.GOVERNANCE] if
                                            Role.GOVERNANCE in self.roles
                                            else []),
                          refers_to=proposal.msg_id)
            else:
                self.emit(Role.CAPITAL, MessageKind.STATE,
                          {"sign_off": True, "post_solvency_ratio": ratio},
                          [Role.PRICING] + ([Role.GOVERNANCE] if
                                            Role.GOVERNANCE in self.roles
                                            else []),
                          refers_to=proposal.msg_id)
                facts["signed_off"] = proposal.msg_id

    def run_portfolio(self, inbox: list[TypedMessage]) -> None:
        facts = self.facts[Role.PORTFOLIO_STEERING]
        for msg in inbox:
            if msg.sender is Role.HAZARD_MODELING \
                    and "terms_digest" in msg.payload \
                    and facts.get("appetite_for") != msg.payload["terms_digest"]:
                facts["appetite_for"] = msg.payload["terms_digest"]
                view = self.state.portfolio_view
                self.emit(Role.PORTFOLIO_STEERING, MessageKind.STATE,
                          {"terms_digest": msg.payload["terms_digest"],
                           "zone_util_by_share": _share_payload(
                               view.zone_util_by_share),
                           "tail_util_by_share": _share_payload(
                               view.tail_var_by_share)},
                          [r for r in (Role.PRICING, Role.GOVERNANCE)
                           if r in self.roles])
        for proposal in (m for m in inbox if m.kind is MessageKind.PROPOSAL):
            if not proposal.payload.get("accept", False):
                facts["granted"] = 0
                facts["granted_for"] = proposal.msg_id
                continue
            capacity = int(proposal.payload.get("capacity_granted", 0))
            share = float(proposal.payload.get("share", 0.0))
            zone = self.state.portfolio_view.zone_util_by_share
            tail = self.state.portfolio_view.tail_var_by_share
            util = max(_lookup(zone, share), _lookup(tail, share))
            if util > 1.0:
                feasible = [s for s in self.context.share_grid
                            if max(_lookup(zone, s), _lookup(tail, s)) <= 1.0]
                self.emit(Role.PORTFOLIO_STEERING, MessageKind.CRITIQUE,
                          {"max_feasible_share": max(feasible, default=0.0),
                           "zone_utilisation": _lookup(zone, share),
                           "tail_utilisation": _lookup(tail, share)},
                          [Role.PRICING] + ([Role.GOVERNANCE] if
                                            Role.GOVERNANCE in self.roles
                                            else []),
                          refers_to=proposal.msg_id)
            else:
                self.emit(Role.PORTFOLIO_STEERING, MessageKind.PROPOSAL,
                          {"capacity_granted": capacity},
                          [Role.PRICING] + ([Role.GOVERNANCE] if
                                            Role.GOVERNANCE in self.roles
                                            else []),
                          refers_to=proposal.msg_id)
                facts["granted"] = capacity
                facts["granted_for"] = proposal.msg_id

    def run_governance(self, inbox: list[TypedMessage]) -> None:
        if Role.GOVERNANCE not in self.roles:
            return
        facts = self.facts[Role.GOVERNANCE]
        operative = self.state.treaty_view.terms
        if operative is None:
            return
        if "exact_terms" not in facts:
            facts["exact_terms"] = parse_wording_exact(self.treaty.wording)
        ready, action = self._assembled()
        flags = governance_check(
            self.state, self.messages, self.feasibility,
            wording=self.treaty.wording,
            action=action if ready else None,
            history=self.history,
            exact_terms=facts["exact_terms"])
        raised: set[tuple] = facts.setdefault("raised", set())
        for flag in flags:
            key = flag.dedup_key()
            if key in raised:
                continue
            raised.add(key)
            if flag.kind == INTERPRETATION_MISMATCH:
                self.emit(Role.GOVERNANCE, MessageKind.CRITIQUE,
                          {"check": flag.kind,
                           "corrected_terms": flag.detail["corrected_terms"]},
                          [Role.TREATY_INTERPRETATION])
            elif flag.kind == CAPITAL_MISMATCH:
                self.emit(Role.GOVERNANCE, MessageKind.CRITIQUE,
                          {"check": flag.kind, **flag.detail},
                          [Role.CAPITAL], refers_to=flag.refers_to)
            else:
                self.emit(Role.GOVERNANCE, MessageKind.CRITIQUE,
                          {"check": flag.kind, **flag.detail},
                          [Role.PRICING], refers_to=flag.refers_to)
        if flags:
            return
        if ready and not self.unresolved():
            result = self.feasibility.check(self.state, action, self.history)
            proposal_id = self.facts[Role.PRICING].get("proposal_id")
            if result.feasible and facts.get("validated_for") != proposal_id:
                facts["validated_for"] = proposal_id
                self.emit(Role.GOVERNANCE, MessageKind.STATE,
                          {"validated": True, "proposal": proposal_id},
                          self.others(Role.GOVERNANCE))

    # -- assembly and termination ---------------------------------------------

    def _assembled(self) -> tuple[bool, ActionProfile]:
        pricing_facts = self.facts[Role.PRICING]
        proposal = pricing_facts.get("last_proposal")
        if proposal is None:
            return False, ActionProfile()
        if not proposal["accept"]:
            return True, ActionProfile()
        portfolio_facts = self.facts[Role.PORTFOLIO_STEERING]
        granted = portfolio_facts.get("granted")
        granted_for = portfolio_facts.get("granted_for")
        if granted != proposal["capacity_granted"] or granted_for != \
                pricing_facts.get("proposal_id"):
            return False, ActionProfile()
        signed = self.facts[Role.CAPITAL].get("signed_off")
        if signed != pricing_facts.get("proposal_id"):
            return False, ActionProfile()
        share = (proposal["capacity_granted"]
                 / self.state.treaty_view.terms.total_limit)
        delta = _lookup(self.state.capital_view.marginal_scr_by_share, share)
        return True, ActionProfile(
            pricing=PricingAction(rate_on_line=proposal["rate_on_line"],
                                  accept=True),
            portfolio=PortfolioAction(
                capacity_granted=proposal["capacity_granted"]),
            capital=CapitalAction(
                allocated_capital=int(round(max(delta, 0.0)))),
        )

    def _terminal(self) -> Optional[ActionProfile]:
        ready, action = self._assembled()
        if not ready or self.unresolved():
            return None
        if Role.GOVERNANCE in self.roles:
            proposal_id = self.facts[Role.PRICING].get("proposal_id")
            validated = self.facts[Role.GOVERNANCE].get("validated_for")
            if action.pricing.accept and validated != proposal_id:
                return None
            if not action.pricing.accept:
                # declines are closed by governance seeing no open issues
                pass
        if not self.feasibility.check(self.state, action,
                                      self.history).feasible:
            return None
        return action

    def run_round(self) -> Optional[ActionProfile]:
        self.round += 1
        delivery, self.outbox = self.outbox, []
        for role in ROLE_ORDER:
            if role not in self.roles:
                continue
            inbox = [m for m in delivery if role in m.recipients]
            self.inboxes[role] = inbox
        for role, runner in (
            (Role.TREATY_INTERPRETATION, self.run_interpretation),
            (Role.EXPOSURE_UNDERSTANDING, self.run_exposure),
            (Role.HAZARD_MODELING, self.run_hazard),
            (Role.PRICING, self.run_pricing),
            (Role.CAPITAL, self.run_capital),
            (Role.PORTFOLIO_STEERING, self.run_portfolio),
            (Role.GOVERNANCE, self.run_governance),
        ):
            if role in self.roles:
                runner(self.inboxes.get(role, []))
        return self._terminal()


def _lookup(table: Mapping[float, float], share: float) -> float:
    if not table:
        return 0.0
    key = min(table, key=lambda k: (abs(k - share), k))
    return float(table[key])


def _action_from_payload(payload: Mapping) -> ActionProfile:
    if not payload.get("accept", False):
        return ActionProfile()
    return ActionProfile(
        pricing=PricingAction(rate_on_line=float(payload["rate_on_line"]),
                              accept=True),
        portfolio=PortfolioAction(
            capacity_granted=int(payload["capacity_granted"])),
    )


# ---------------------------------------------------------------------------
# Episode runners.


def run_episode(context: SimulationContext, treaty: Treaty, profile: Profile,
                seed: int, *, noise: Optional[NoiseModel] = None,
                weights: Optional[ScalarWeights] = None,
                epsilon: float = 1e-9) -> EpisodeOutcome:
    """Run one candidate-treaty episode under the given agent profile."""
    noise = noise if noise is not None else default_noise(profile)
    weights = weights or ScalarWeights()
    if profile in (Profile.MULTI_AGENT, Profile.NO_GOVERNANCE):
        return _run_negotiation(context, treaty, profile, seed, noise,
                                weights, epsilon)
    if profile is Profile.SINGLE_AGENT:
        return _run_single_agent(context, treaty, seed, noise, weights,
                                 epsilon)
    if profile is Profile.RULE_BASED:
        return _run_rule_based(context, treaty, seed, noise, weights, epsilon)
    raise ValueError(f"unknown profile: {profile}")


def _start_entry(audit: AuditChain, context: SimulationContext,
                 treaty: Treaty, profile: Profile, seed: int,
                 roles: frozenset[Role], weights: ScalarWeights,
                 epsilon: float) -> None:
    audit.append({
        "type": "episode_start",
        "treaty_id": treaty.id,
        "profile": profile.value,
        "seed": seed,
        "roles": sorted(r.value for r in roles),
        "rates": list(RATE_GRID),
        "shares": list(context.share_grid),
        "weights": {"alpha": weights.alpha, "beta": weights.beta,
                    "gamma": weights.gamma, "delta": weights.delta},
        "epsilon": epsilon,
        "solvency_threshold": context.regulatory.solvency_threshold,
        "expense_ratio": context.expense_ratio,
        "max_rounds": context.regulatory.max_rounds,
    })


def _finalize(context: SimulationContext, treaty: Treaty, profile: Profile,
              seed: int, *, operative: Optional[Treaty],
              belief_state: GlobalState, action: ActionProfile,
              escalated: bool, reason: Optional[str], rounds: Optional[int],
              messages: Sequence[TypedMessage],
              history: list[HistoryEvent], audit: AuditChain,
              feasibility: FeasibilitySet, weights: ScalarWeights,
              epsilon: float, recommended_rate: Optional[float],
              decision_step: int) -> EpisodeOutcome:
    """Shared episode epilogue: decision record, ex-post truth check,
    certification, audit terminal entries, outcome assembly."""
    exact = parse_wording_exact(treaty.wording)
    truth_state = context.build_state(treaty, exact)

    share = 0.0
    if operative is not None and operative.total_limit > 0:
        share = action.portfolio.capacity_granted / operative.total_limit
    belief_delta = _lookup(
        belief_state.capital_view.marginal_scr_by_share, share)
    record = DecisionRecord(
        step=decision_step,
        actor=Role.PRICING,
        bound=action.pricing.accept and action.portfolio.capacity_granted > 0,
        scr_delta=belief_delta,
        accepted=action.pricing.accept,
    )
    history.append(record)
    audit.append({"type": "decision", **record.to_dict()})

    truth_violations: tuple[str, ...] = ()
    truth_result = feasibility.check(truth_state, action, history)
    if not truth_result.feasible:
        truth_violations = truth_result.violated
        if not escalated:
            escalated, reason = True, "ex_post_violation"

    clause_errors = (clause_count(treaty) if operative is None
                     else clause_diff(treaty, operative))

    truth_tables = context.candidate_tables(treaty.id, exact)
    true_share = (action.portfolio.capacity_granted / exact.total_limit
                  if exact.total_limit else 0.0)
    expected_ceded_true = (_lookup(truth_tables.ceded_by_share, true_share)
                           if action.pricing.accept else 0.0)
    delta_scr_true = (_lookup(truth_tables.marginal_scr_by_share, true_share)
                      if action.pricing.accept else 0.0)
    premium = 0.0
    if action.pricing.accept and action.portfolio.capacity_granted > 0:
        premium = (action.pricing.rate_on_line
                   * action.portfolio.capacity_granted
                   * (1.0 + truth_tables.reinstatement_fraction)
                   * (1.0 - context.expense_ratio))

    reward = context.reward(truth_state, action, unresolved=0,
                            violations=len(truth_violations))

    certificate: Optional[EquilibriumCertificate] = None
    if operative is not None:
        grid = ActionGrid(rates=RATE_GRID, shares=context.share_grid,
                          total_limit=operative.total_limit)
        reinst = context.reinstatement_fraction(belief_state)

        def reward_fn(s: GlobalState, a: ActionProfile) -> RewardVector:
            return context.reward(s, a)

        certificate = certify_equilibrium(
            trajectory=[(belief_state, action)],
            messages=messages,
            feasibility=feasibility,
            grid=grid,
            weights=weights,
            reward_fn=reward_fn,
            epsilon=epsilon,
            history=tuple(history),
        )
        from .trace import action_to_dict, snapshot_state
        audit.append({
            "type": "terminal",
            "action": action_to_dict(action),
            "state": snapshot_state(belief_state),
            "total_limit": operative.total_limit,
            "reinstatement_fraction": reinst,
            "certificate": certificate.to_dict(),
            "escalated": escalated,
            "reason": reason,
            "truth_violations": list(truth_violations),
        })

    # The outcome entry carries everything benchmark metrics need, so a
    # persisted trace alone is enough to recompute them.
    audit.append({
        "type": "outcome",
        "escalated": escalated,
        "reason": reason,
        "rounds": rounds,
        "accepted": bool(action.pricing.accept
                         and action.portfolio.capacity_granted > 0),
        "premium": premium,
        "recommended_rate": recommended_rate,
        "clause_errors": clause_errors,
        "clause_total": clause_count(treaty),
        "expected_ceded_true": expected_ceded_true,
        "delta_scr_true": delta_scr_true,
        "truth_violations": list(truth_violations),
    })

    return EpisodeOutcome(
        treaty_id=treaty.id,
        workflow=Workflow.PRICING,
        profile=profile,
        seed=seed,
        rounds=rounds,
        message_count=len(messages),
        action=action,
        accepted=bool(action.pricing.accept
                      and action.portfolio.capacity_granted > 0),
        recommended_rate=recommended_rate,
        escalated=escalated,
        escalation_reason=reason,
        certificate=certificate,
        clause_errors=clause_errors,
        clause_total=clause_count(treaty),
        premium=premium,
        expected_ceded_true=expected_ceded_true,
        delta_scr_true=delta_scr_true,
        reward=reward,
        scalar_reward=scalarize(reward, weights),
        messages=tuple(messages),
        history=tuple(history),
        audit=audit,
        terminal_state=belief_state,
    )


def _run_negotiation(context: SimulationContext, treaty: Treaty,
                     profile: Profile, seed: int, noise: NoiseModel,
                     weights: ScalarWeights, epsilon: float) -> EpisodeOutcome:
    neg = _Negotiation(context, treaty, profile, seed, noise, weights,
                       epsilon)
    _start_entry(neg.audit, context, treaty, profile, seed, neg.roles,
                 weights, epsilon)
    max_rounds = context.regulatory.max_rounds
    action: Optional[ActionProfile] = None
    escalated, reason = False, None
    while neg.round < max_rounds:
        terminal = neg.run_round()
        if terminal is not None:
            action = terminal
            break
    if action is None:
        action = ActionProfile()
        escalated, reason = True, "max_rounds"
    elif neg.operative is not None:
        grid = ActionGrid(rates=RATE_GRID, shares=context.share_grid,
                          total_limit=neg.operative.total_limit)
        try:
            projected = project_to_feasible(
                neg.state, action, neg.feasibility, grid.enumerate(),
                history=tuple(neg.history))
            if projected != action:
                neg.audit.append({"type": "projection",
                                  "replaced": action.numeric_components(),
                                  "with": projected.numeric_components()})
                action = projected
        except InfeasibilityError:
            escalated, reason = True, "infeasible"

    pricing_facts = neg.facts.get(Role.PRICING, {})
    last = pricing_facts.get("last_proposal")
    recommended = (float(last["rate_on_line"])
                   if last and last.get("accept") else None)
    return _finalize(
        context, treaty, profile, seed,
        operative=neg.operative, belief_state=neg.state, action=action,
        escalated=escalated, reason=reason, rounds=neg.round,
        messages=neg.messages, history=neg.history, audit=neg.audit,
        feasibility=neg.feasibility, weights=weights, epsilon=epsilon,
        recommended_rate=recommended, decision_step=neg.round)


def _run_single_agent(context: SimulationContext, treaty: Treaty, seed: int,
                      noise: NoiseModel, weights: ScalarWeights,
                      epsilon: float) -> EpisodeOutcome:
    """One agent with every view walks the same reasoning as internal
    stages; no messages, so procedural norms are out of scope."""
    profile = Profile.SINGLE_AGENT
    audit = AuditChain()
    roles = frozenset({Role.PRICING})
    feasibility = feasibility_for_roles(
        roles, context.regulatory.solvency_threshold)
    _start_entry(audit, context, treaty, profile, seed, roles, weights,
                 epsilon)
    rng = substream(seed, "episode", treaty.id, profile.value, "parse")
    stages = 0

    def stage(name: str) -> None:
        nonlocal stages
        stages += 1
        audit.append({"type": "stage", "n": stages, "name": name})

    stage("interpret")
    terms = parse_wording_noisy(treaty.wording, noise, rng)
    stage("exposure_review")
    stage("hazard_model")
    state = context.build_state(treaty, terms)
    grid = ActionGrid(rates=RATE_GRID, shares=context.share_grid,
                      total_limit=terms.total_limit)
    reinst = context.reinstatement_fraction(state)
    threshold = context.regulatory.solvency_threshold
    stage("draft_quote")
    draft = best_quote(state, grid, weights,
                       expense_ratio=context.expense_ratio,
                       reinstatement_fraction=reinst,
                       solvency_threshold=threshold,
                       know_capital=False, know_portfolio=False)
    stage("capital_assessment")
    stage("portfolio_appetite")
    action = best_quote(state, grid, weights,
                        expense_ratio=context.expense_ratio,
                        reinstatement_fraction=reinst,
                        solvency_threshold=threshold,
                        know_capital=True, know_portfolio=True)
    if action != draft:
        stage("requote")
    stage("capital_check")
    stage("portfolio_check")
    history: list[HistoryEvent] = []
    if not feasibility.check(state, action, history).feasible:
        stage("decline_fallback")
        action = ActionProfile()
    stage("commit")
    escalated, reason = False, None
    try:
        projected = project_to_feasible(state, action, feasibility,
                                        grid.enumerate(), history=())
        if projected != action:
            audit.append({"type": "projection",
                          "replaced": action.numeric_components(),
                          "with": projected.numeric_components()})
            action = projected
    except InfeasibilityError:
        escalated, reason = True, "infeasible"
        action = ActionProfile()
    if stages > context.regulatory.max_rounds and not escalated:
        escalated, reason = True, "max_rounds"
    recommended = (action.pricing.rate_on_line
                   if action.pricing.accept else None)
    return _finalize(
        context, treaty, profile, seed,
        operative=terms, belief_state=state, action=action,
        escalated=escalated, reason=reason, rounds=stages,
        messages=(), history=history, audit=audit,
        feasibility=feasibility, weights=weights, epsilon=epsilon,
        recommended_rate=recommended, decision_step=stages)


RULE_BASED_LOADING = 0.5


def rule_based_pipeline(context: SimulationContext) -> Pipeline:
    """Fixed pricing rule: loading-factor rate on expected loss, full line,
    always accept, no checks."""
    def pipeline(state: GlobalState) -> ActionProfile:
        terms = state.treaty_view.terms
        if terms is None or terms.total_limit <= 0:
            return ActionProfile()
        raw = ((1.0 + RULE_BASED_LOADING)
               * state.hazard_view.expected_ceded_full / terms.total_limit)
        step = RATE_GRID[1] - RATE_GRID[0]
        rate = min(max(round(raw / step) * step, 0.0), RATE_GRID[-1])
        share = 1.0
        delta = _lookup(state.capital_view.marginal_scr_by_share, share)
        return ActionProfile(
            pricing=PricingAction(rate_on_line=round(rate, 6), accept=True),
            portfolio=PortfolioAction(capacity_granted=terms.total_limit),
            capital=CapitalAction(
                allocated_capital=int(round(max(delta, 0.0)))),
        )
    return pipeline


def _run_rule_based(context: SimulationContext, treaty: Treaty, seed: int,
                    noise: NoiseModel, weights: ScalarWeights,
                    epsilon: float) -> EpisodeOutcome:
    """Noisy parse feeding a fixed pipeline, wrapped degenerately: zero
    messages, no projection, no self-checks; violations surface ex post."""
    profile = Profile.RULE_BASED
    audit = AuditChain()
    roles = frozenset({Role.PRICING})
    feasibility = feasibility_for_roles(
        roles, context.regulatory.solvency_threshold)
    _start_entry(audit, context, treaty, profile, seed, roles, weights,
                 epsilon)
    rng = substream(seed, "episode", treaty.id, profile.value, "parse")
    terms = parse_wording_noisy(treaty.wording, noise, rng)
    state = context.build_state(treaty, terms)

    instance = degenerate_adapter(rule_based_pipeline(context),
                                  feasibility=feasibility)
    adapter_outcome = instance.run(
        [state],
        scr_delta_fn=lambda s, a: _lookup(
            s.capital_view.marginal_scr_by_share,
            (a.portfolio.capacity_granted / s.treaty_view.terms.total_limit
             if s.treaty_view.terms and s.treaty_view.terms.total_limit
             else 0.0)))
    action = adapter_outcome.trajectory[-1][1]
    history: list[HistoryEvent] = list(adapter_outcome.records[:-1])
    recommended = (action.pricing.rate_on_line
                   if action.pricing.accept else None)
    outcome = _finalize(
        context, treaty, profile, seed,
        operative=terms, belief_state=state, action=action,
        escalated=False, reason=None, rounds=None,
        messages=(), history=history, audit=audit,
        feasibility=feasibility, weights=weights, epsilon=epsilon,
        recommended_rate=recommended, decision_step=1)
    return outcome
