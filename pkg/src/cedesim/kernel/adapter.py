"""Degenerate single-agent wrapping of a fixed decision pipeline.

A deterministic pipeline over states becomes a single-agent instance of
the governed framework: one agent, full observation, an action grid
containing only the pipeline's own output, and zero messages.  The
construction makes two things checkable rather than assumed: the wrapped
pipeline literally cannot communicate (its message log is empty by type),
and history-dependent norms evaluate against a history of DecisionRecord
entries only — so norms about past decisions can still fail, while norms
about message protocol become vacuous.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from ..core.norms import FeasibilitySet, HistoryEvent
from ..core.types import (
    ActionProfile,
    DecisionRecord,
    GlobalState,
    Role,
    TypedMessage,
)
from .equilibrium import EquilibriumCertificate

Pipeline = Callable[[GlobalState], ActionProfile]


@dataclass(frozen=True)
class AdapterOutcome:
    """Trajectory of a wrapped pipeline plus its equilibrium certificate."""

    trajectory: tuple[tuple[GlobalState, ActionProfile], ...]
    records: tuple[DecisionRecord, ...]
    messages: tuple[TypedMessage, ...]  # always empty; kept for symmetry
    certificate: EquilibriumCertificate
    violated: tuple[str, ...]

    @property
    def message_count(self) -> int:
        return len(self.messages)


class DegenerateInstance:
    """Single-agent instance produced by degenerate_adapter."""

    def __init__(self, pipeline: Pipeline,
                 feasibility: Optional[FeasibilitySet] = None,
                 actor: Role = Role.PRICING) -> None:
        self.pipeline = pipeline
        self.feasibility = feasibility
        self.actor = actor

    def run(self, states: Sequence[GlobalState],
            scr_delta_fn: Optional[Callable[[GlobalState, ActionProfile],
                                            float]] = None,
            ) -> AdapterOutcome:
        """Apply the pipeline step by step, recording decisions as history.

        Feasibility is evaluated per step against the accumulated history;
        ``scr_delta_fn`` supplies the capital delta recorded per decision
        (zero when omitted).  The certificate is vacuous on consistency
        and stability: there are no messages to leave unresolved and no
        alternative grid points to deviate to.
        """
        if not states:
            raise ValueError("adapter needs at least one state")
        trajectory: list[tuple[GlobalState, ActionProfile]] = []
        records: list[DecisionRecord] = []
        history: list[HistoryEvent] = []
        violated: list[str] = []
        feasible = True
        for step, state in enumerate(states, start=1):
            action = self.pipeline(state)
            if self.feasibility is not None:
                result = self.feasibility.check(state, action, history)
                if not result.feasible:
                    feasible = False
                    violated.extend(result.violated)
            delta = (scr_delta_fn(state, action)
                     if scr_delta_fn is not None else 0.0)
            record = DecisionRecord(
                step=step,
                actor=self.actor,
                bound=action.portfolio.capacity_granted > 0,
                scr_delta=delta,
                accepted=action.pricing.accept,
            )
            records.append(record)
            history.append(record)
            trajectory.append((state, action))
        certificate = EquilibriumCertificate(
            feasible=feasible, consistent=True, stable=True)
        return AdapterOutcome(
            trajectory=tuple(trajectory),
            records=tuple(records),
            messages=(),
            certificate=certificate,
            violated=tuple(dict.fromkeys(violated)),
        )


def degenerate_adapter(pipeline: Pipeline,
                       feasibility: Optional[FeasibilitySet] = None,
                       actor: Role = Role.PRICING) -> DegenerateInstance:
    """Wrap a fixed state-to-action pipeline as a single-agent instance."""
    return DegenerateInstance(pipeline, feasibility, actor)
