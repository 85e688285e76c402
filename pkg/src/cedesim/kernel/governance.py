"""Cross-checks run by the governance role over the other agents' beliefs.

The checks are deliberately redundant with work other agents already did:
governance re-derives the treaty parse from the original wording, recomputes
the capital numbers that the capital agent reported, and scans the message
log for norm violations nobody has surfaced.  Each discrepancy becomes a
flag; the negotiation engine turns flags into Critique messages so the
discrepancy re-enters the round loop and must be repaired (or the episode
escalates at the round cap).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from ..core.norms import FeasibilitySet, HistoryEvent
from ..core.types import (
    ActionProfile,
    GlobalState,
    MessageKind,
    Role,
    Treaty,
    TypedMessage,
)
from ..genesis.wording import parse_wording_exact
from .context import structure_digest

INTERPRETATION_MISMATCH = "interpretation"
CAPITAL_MISMATCH = "capital_numbers"
UNANSWERED_VIOLATION = "norm_violation"


@dataclass(frozen=True)
class GovernanceFlag:
    """One inconsistency found by the governance cross-check."""

    kind: str  # one of the three module constants
    detail: dict = field(default_factory=dict)
    refers_to: Optional[str] = None  # message the flag is about, if any

    def dedup_key(self) -> tuple:
        """Stable identity so the same finding is only critiqued once."""
        anchor = (self.refers_to
                  or self.detail.get("operative_digest")
                  or self.detail.get("norm_id"))
        return (self.kind, anchor)


def _payload_shares(payload: Mapping[str, float]) -> dict[float, float]:
    return {float(k): float(v) for k, v in payload.items()}


def governance_check(state: GlobalState,
                     messages: Sequence[TypedMessage],
                     feasibility: FeasibilitySet,
                     *,
                     wording: str,
                     action: Optional[ActionProfile] = None,
                     history: Sequence[HistoryEvent] = (),
                     exact_terms: Optional[Treaty] = None,
                     abs_tol: float = 1e-6,
                     rel_tol: float = 1e-9) -> list[GovernanceFlag]:
    """Audit the episode so far and return every inconsistency found.

    Three kinds of flag are produced:

    * ``interpretation`` — the operative treaty structure differs from an
      independent exact re-parse of the original wording; the corrected
      structure rides along in the flag detail.
    * ``capital_numbers`` — a capital assessment message reports marginal
      SCR figures that differ from a recomputation against the current
      state beyond ``max(abs_tol, rel_tol * |recomputed|)``.  Only
      assessments labelled with the current structure digest are checked;
      stale assessments are superseded by a fresh report instead.
    * ``norm_violation`` — the assembled action (when one is supplied)
      violates a norm that no Constraint message has yet surfaced.

    The caller may pass ``exact_terms`` to reuse a cached re-parse;
    otherwise the wording is re-parsed here.
    """
    flags: list[GovernanceFlag] = []
    operative = state.treaty_view.terms
    if operative is None:
        return flags

    operative_digest = structure_digest(operative)
    exact = exact_terms if exact_terms is not None \
        else parse_wording_exact(wording)
    exact_digest = structure_digest(exact)
    if exact_digest != operative_digest:
        flags.append(GovernanceFlag(
            kind=INTERPRETATION_MISMATCH,
            detail={"corrected_terms": exact.to_dict(),
                    "operative_digest": operative_digest,
                    "expected_digest": exact_digest}))

    recomputed = state.capital_view.marginal_scr_by_share
    for msg in messages:
        if msg.sender is not Role.CAPITAL or msg.kind is not MessageKind.STATE:
            continue
        if "marginal_scr_by_share" not in msg.payload:
            continue
        if msg.payload.get("terms_digest") != operative_digest:
            continue
        reported = _payload_shares(msg.payload["marginal_scr_by_share"])
        for share in sorted(reported):
            truth = recomputed.get(share)
            value = reported[share]
            if truth is None or abs(truth - value) > max(
                    abs_tol, rel_tol * abs(truth)):
                flags.append(GovernanceFlag(
                    kind=CAPITAL_MISMATCH,
                    detail={"share": share, "reported": value,
                            "recomputed": truth},
                    refers_to=msg.msg_id))
                break  # one flag per assessment message is enough

    if action is not None:
        result = feasibility.check(state, action, history)
        surfaced = {m.payload.get("norm_id") for m in messages
                    if m.kind is MessageKind.CONSTRAINT}
        for norm_id in result.violated:
            if norm_id not in surfaced:
                flags.append(GovernanceFlag(
                    kind=UNANSWERED_VIOLATION,
                    detail={"norm_id": norm_id}))

    return flags
