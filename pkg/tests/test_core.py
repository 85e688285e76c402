"""Core carriers: treaty validation, rewards, audit chain, norm language."""
import hashlib
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cedesim.core import (
    ActionProfile,
    All,
    AuditChain,
    CapitalState,
    CommGraph,
    Comparison,
    ConfigurationError,
    ExclusionClause,
    ExclusionKind,
    FeasibilitySet,
    GENESIS_PREV,
    GlobalState,
    LineOfBusiness,
    Membership,
    MessageKind,
    NormKind,
    NormScope,
    NormSource,
    NormSpec,
    Peril,
    PortfolioAction,
    PortfolioState,
    PricingAction,
    ProtocolError,
    RegulatoryState,
    RewardVector,
    Role,
    ScalarRegistry,
    ScalarWeights,
    SubsetOf,
    TamperError,
    Treaty,
    TreatyLayer,
    TreatyState,
    TypedMessage,
    Workflow,
    audit_append,
    canonical_json,
    scalarize,
    substream,
)


def make_treaty(**overrides):
    base = dict(
        id="T0001",
        line_of_business=LineOfBusiness.PROPERTY_CAT,
        layers=(TreatyLayer(attachment=50_000_000, limit=100_000_000,
                            reinstatements=2),),
        perils=frozenset({Peril.WIND, Peril.FLOOD}),
        exclusions=(ExclusionClause(ExclusionKind.NUCLEAR),),
        zones=frozenset({"Z01", "Z02"}),
        hours_clause=72,
        wording="",
    )
    base.update(overrides)
    return Treaty(**base)


class TestTreaty:
    def test_layer_validation(self):
        with pytest.raises(ValueError):
            TreatyLayer(attachment=-1, limit=10, reinstatements=0)
        with pytest.raises(ValueError):
            TreatyLayer(attachment=0, limit=0, reinstatements=0)
        with pytest.raises(ValueError):
            TreatyLayer(attachment=0, limit=10, reinstatements=-1)

    def test_annual_capacity(self):
        layer = TreatyLayer(attachment=0, limit=50, reinstatements=2)
        assert layer.annual_capacity == 150

    def test_overlapping_layers_rejected(self):
        with pytest.raises(ValueError, match="overlaps"):
            make_treaty(layers=(
                TreatyLayer(attachment=0, limit=100, reinstatements=0),
                TreatyLayer(attachment=50, limit=100, reinstatements=0),
            ))

    def test_contiguous_layers_accepted(self):
        t = make_treaty(layers=(
            TreatyLayer(attachment=0, limit=100, reinstatements=0),
            TreatyLayer(attachment=100, limit=100, reinstatements=0),
        ))
        assert t.total_limit == 200

    def test_duplicate_exclusions_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            make_treaty(exclusions=(
                ExclusionClause(ExclusionKind.NUCLEAR),
                ExclusionClause(ExclusionKind.NUCLEAR, ambiguous=True),
            ))

    def test_empty_perils_rejected(self):
        with pytest.raises(ValueError):
            make_treaty(perils=frozenset())

    def test_structure_equal_ignores_wording_and_rendering(self):
        a = make_treaty(wording="alpha")
        b = make_treaty(
            wording="beta",
            exclusions=(ExclusionClause(ExclusionKind.NUCLEAR, ambiguous=True),),
        )
        assert a.structure_equal(b)
        c = make_treaty(hours_clause=24)
        assert not a.structure_equal(c)

    def test_dict_round_trip(self):
        t = make_treaty(wording="TREATY T0001\n...")
        assert Treaty.from_dict(t.to_dict()) == t


class TestRewards:
    @pytest.mark.parametrize("reward,weights,expected", [
        (RewardVector(cap=1.0, port=0.5, cons=0.0, gov=0.0),
         ScalarWeights(1.0, 1.0, 1.0, 1.0), 0.5),
        (RewardVector(), ScalarWeights(), 0.0),
        (RewardVector(cap=-2.0, port=4.0, cons=6.0, gov=8.0),
         ScalarWeights(1.0, 0.5, 0.5, 1.0), -15.0),
        (RewardVector(cap=3.0, port=2.0, cons=1.0, gov=0.0),
         ScalarWeights(2.0, 1.0, 1.0, 4.0), 3.0),
    ])
    def test_scalarize(self, reward, weights, expected):
        assert scalarize(reward, weights) == pytest.approx(expected)

    def test_penalties_nonnegative(self):
        with pytest.raises(ValueError):
            RewardVector(cap=0.0, port=-0.1, cons=0.0, gov=0.0)
        with pytest.raises(ValueError):
            ScalarWeights(alpha=-1.0)

    def test_add(self):
        total = RewardVector(cap=1.0, port=1.0) + RewardVector(cap=-3.0, gov=2.0)
        assert total == RewardVector(cap=-2.0, port=1.0, cons=0.0, gov=2.0)


class TestMessages:
    def test_self_message_rejected(self):
        with pytest.raises(ValueError):
            TypedMessage(
                msg_id="m1", workflow=Workflow.PRICING, round=0,
                sender=Role.PRICING, recipients=frozenset({Role.PRICING}),
                kind=MessageKind.STATE,
            )

    def test_comm_graph_enforced(self):
        graph = CommGraph.complete_over([Role.PRICING, Role.CAPITAL])
        ok = TypedMessage(
            msg_id="m1", workflow=Workflow.PRICING, round=0,
            sender=Role.PRICING, recipients=frozenset({Role.CAPITAL}),
            kind=MessageKind.PROPOSAL,
        )
        graph.check(ok)
        bad = TypedMessage(
            msg_id="m2", workflow=Workflow.PRICING, round=0,
            sender=Role.PRICING, recipients=frozenset({Role.GOVERNANCE}),
            kind=MessageKind.PROPOSAL,
        )
        with pytest.raises(ProtocolError, match="Pricing -> Governance"):
            graph.check(bad)

    def test_message_dict_round_trip(self):
        msg = TypedMessage(
            msg_id="m7", workflow=Workflow.PRICING, round=3,
            sender=Role.CAPITAL,
            recipients=frozenset({Role.PRICING, Role.PORTFOLIO_STEERING}),
            kind=MessageKind.CONSTRAINT,
            payload={"norm": "solvency_floor", "margin": -0.04},
            refers_to="m5",
        )
        assert TypedMessage.from_dict(msg.to_dict()) == msg


class TestSubstreams:
    def test_deterministic(self):
        a = substream(42, "hazard", 3).standard_normal(4)
        b = substream(42, "hazard", 3).standard_normal(4)
        assert (a == b).all()

    def test_distinct_labels_diverge(self):
        a = substream(42, "hazard", 3).standard_normal(4)
        b = substream(42, "hazard", 4).standard_normal(4)
        assert (a != b).any()


class TestAuditChain:
    def test_digests_match_hand_computation(self):
        # Oracle: recompute everything with hashlib directly, no chain code.
        payloads = [{"step": 0, "x": 1}, {"z": [1, 2], "a": "b"}]
        chain = AuditChain()
        for p in payloads:
            chain.append(p)

        prev = "0" * 64
        for i, payload in enumerate(payloads):
            text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
            payload_hash = hashlib.sha256(text.encode()).hexdigest()
            line = json.dumps(
                {"seq": i, "prev_hash": prev, "payload_hash": payload_hash,
                 "payload": text},
                separators=(",", ":"),
            )
            entry = chain.entries[i]
            assert entry.to_line() == line
            assert entry.prev_hash == prev
            assert entry.payload_hash == payload_hash
            prev = hashlib.sha256(line.encode()).hexdigest()
        assert chain.head == prev
        chain.verify()

    def test_empty_chain_head_is_genesis(self):
        assert AuditChain().head == GENESIS_PREV
        AuditChain().verify()

    def test_canonical_json_key_order_invariant(self):
        assert canonical_json({"b": 1, "a": 2}) == canonical_json({"a": 2, "b": 1})
        assert canonical_json({"a": 2, "b": 1}) == '{"a":2,"b":1}'

    def test_tamper_detected_at_first_broken_index(self):
        chain = AuditChain()
        for i in range(5):
            chain.append({"i": i})
        lines = chain.to_lines()
        # flip one byte inside entry 2's payload (escaped inside the line)
        assert '\\"i\\":2' in lines[2]
        lines[2] = lines[2].replace('\\"i\\":2', '\\"i\\":7')
        reloaded = AuditChain.from_lines(lines)
        with pytest.raises(TamperError) as err:
            reloaded.verify()
        assert err.value.index == 2

    def test_truncation_then_regrowth_detected(self):
        chain = AuditChain()
        for i in range(4):
            chain.append({"i": i})
        lines = chain.to_lines()
        del lines[1]
        reloaded = AuditChain.from_lines(lines)
        with pytest.raises(TamperError):
            reloaded.verify()

    def test_round_trip_and_resume(self):
        chain = AuditChain()
        chain.append({"a": 1})
        chain.append({"a": 2})
        reloaded = AuditChain.loads(chain.dump())
        audit_append(reloaded, {"a": 3})
        reloaded.verify()
        assert len(reloaded) == 3
        assert reloaded.entries[2].prev_hash == chain.head

    def test_audit_append_refuses_bad_chain(self):
        chain = AuditChain()
        chain.append({"a": 1})
        lines = chain.to_lines()
        bad = AuditChain.from_lines([lines[0].replace('\\"a\\":1', '\\"a\\":9')])
        with pytest.raises(TamperError):
            audit_append(bad, {"a": 2})

    @settings(max_examples=30, deadline=None)
    @given(st.lists(
        st.dictionaries(st.text("ab", max_size=3),
                        st.integers(-5, 5), max_size=3),
        min_size=1, max_size=8,
    ), st.data())
    def test_any_single_byte_flip_is_detected(self, payloads, data):
        chain = AuditChain()
        for p in payloads:
            chain.append(p)
        blob = chain.dump().encode()
        pos = data.draw(st.integers(0, len(blob) - 1))
        flipped = bytes([blob[pos] ^ 0x01])
        mutated = blob[:pos] + flipped + blob[pos + 1:]
        try:
            reloaded = AuditChain.loads(mutated.decode("utf-8", "strict"))
        except (UnicodeDecodeError, json.JSONDecodeError, KeyError, ValueError):
            return  # structurally destroyed, which also counts as detected
        with pytest.raises(TamperError):
            reloaded.verify()


def make_state(solvency_ratio=1.5, tail_var=0.0, zone_acc=None):
    return GlobalState(
        treaty_view=TreatyState(treaty_id="T1", wording=""),
        capital_view=CapitalState(own_funds=1_000, solvency_ratio=solvency_ratio),
        portfolio_view=PortfolioState(
            zone_accumulation=zone_acc or {}, tail_var=tail_var),
        regulatory_view=RegulatoryState(solvency_threshold=1.0, max_rounds=10),
    )


class TestNormLanguage:
    def test_obligation_comparison(self):
        norm = NormSpec(
            id="solvency_floor", kind=NormKind.OBLIGATION,
            scope=NormScope.STATE, source=NormSource.REGULATORY,
            predicate=Comparison("capital.solvency_ratio", ">=", 1.0),
        )
        fs = FeasibilitySet([norm])
        action = ActionProfile()
        assert fs.check(make_state(solvency_ratio=1.2), action).feasible
        result = fs.check(make_state(solvency_ratio=0.8), action)
        assert not result.feasible
        assert result.violated == ("solvency_floor",)

    def test_prohibition_inverts(self):
        norm = NormSpec(
            id="no_free_cover", kind=NormKind.PROHIBITION,
            scope=NormScope.ACTION, source=NormSource.INTERNAL,
            predicate=All((
                Comparison("action.rate_on_line", "<", 0.01),
                Comparison("action.capacity_granted", ">", 0.0),
            )),
        )
        fs = FeasibilitySet([norm])
        state = make_state()
        free = ActionProfile(pricing=PricingAction(rate_on_line=0.0),
                             portfolio=PortfolioAction(capacity_granted=100))
        assert not fs.check(state, free).feasible
        priced = ActionProfile(pricing=PricingAction(rate_on_line=0.05),
                               portfolio=PortfolioAction(capacity_granted=100))
        assert fs.check(state, priced).feasible
        idle = ActionProfile()  # rate 0 but no capacity: conjunction fails
        assert fs.check(state, idle).feasible

    def test_membership_and_subset(self):
        registry = ScalarRegistry()
        registry.register(
            "candidate.zones",
            lambda s, a: frozenset({"Z01", "Z05"}),
        )
        registry.register(
            "authorized.zones",
            lambda s, a: frozenset({"Z01", "Z02", "Z05"}),
        )
        registry.register("action.retro_kind_name",
                          lambda s, a: a.retro.kind.value if a.retro.kind else "")
        registry.register("allowed.retro_kinds",
                          lambda s, a: frozenset({"QuotaShare"}))
        norms = [
            NormSpec(id="zones_authorized", kind=NormKind.OBLIGATION,
                     scope=NormScope.STATE, source=NormSource.REGULATORY,
                     predicate=SubsetOf("candidate.zones", "authorized.zones")),
            NormSpec(id="retro_kind_allowed", kind=NormKind.PROHIBITION,
                     scope=NormScope.ACTION, source=NormSource.INTERNAL,
                     predicate=Membership("action.retro_kind_name",
                                          "allowed.retro_kinds", negate=True)),
        ]
        fs = FeasibilitySet(norms, registry)
        from cedesim.core import RetroAction, RetroKind
        ok = ActionProfile(retro=RetroAction(kind=RetroKind.QUOTA_SHARE,
                                             cession=0.2))
        assert fs.check(make_state(), ok).feasible
        bad = ActionProfile(retro=RetroAction(kind=RetroKind.AGGREGATE_XL,
                                              cession=0.2, limit=10))
        assert fs.check(make_state(), bad).violated == ("retro_kind_allowed",)

    def test_unknown_scalar_names_the_norm(self):
        norm = NormSpec(
            id="broken", kind=NormKind.OBLIGATION, scope=NormScope.STATE,
            source=NormSource.INTERNAL,
            predicate=Comparison("no.such_scalar", ">=", 0.0),
        )
        fs = FeasibilitySet([norm])
        with pytest.raises(ConfigurationError, match="broken"):
            fs.check(make_state(), ActionProfile())

    def test_duplicate_norm_ids_rejected(self):
        norm = NormSpec(
            id="dup", kind=NormKind.OBLIGATION, scope=NormScope.STATE,
            source=NormSource.INTERNAL,
            predicate=Comparison("capital.solvency_ratio", ">=", 0.0),
        )
        with pytest.raises(ConfigurationError):
            FeasibilitySet([norm, norm])

    def test_grid_agrees_with_direct_evaluation(self):
        # Oracle: evaluate the same norms as plain Python over a full grid.
        norms = [
            NormSpec(id="solvency_floor", kind=NormKind.OBLIGATION,
                     scope=NormScope.STATE, source=NormSource.REGULATORY,
                     predicate=Comparison("capital.solvency_ratio", ">=", 1.0)),
            NormSpec(id="tail_budget", kind=NormKind.PROHIBITION,
                     scope=NormScope.STATE, source=NormSource.INTERNAL,
                     predicate=Comparison("portfolio.tail_var", ">", 500.0)),
            NormSpec(id="rate_floor_when_granting", kind=NormKind.PROHIBITION,
                     scope=NormScope.ACTION, source=NormSource.INTERNAL,
                     predicate=All((
                         Comparison("action.rate_on_line", "<", 0.02),
                         Comparison("action.capacity_granted", ">", 0.0),
                     ))),
        ]
        fs = FeasibilitySet(norms)
        for ratio in (0.5, 0.99, 1.0, 1.01, 2.0):
            for tv in (0.0, 499.9, 500.0, 500.1, 900.0):
                for rate in (0.0, 0.019, 0.02, 0.1):
                    for cap in (0, 1, 1000):
                        state = make_state(solvency_ratio=ratio, tail_var=tv)
                        action = ActionProfile(
                            pricing=PricingAction(rate_on_line=rate),
                            portfolio=PortfolioAction(capacity_granted=cap),
                        )
                        expect = []
                        if not ratio >= 1.0:
                            expect.append("solvency_floor")
                        if tv > 500.0:
                            expect.append("tail_budget")
                        if rate < 0.02 and cap > 0:
                            expect.append("rate_floor_when_granting")
                        result = fs.check(state, action)
                        assert result.violated == tuple(expect)
                        assert result.feasible == (not expect)

    def test_history_rule_capital_check_before_accept(self):
        norm = NormSpec(
            id="capital_sign_off", kind=NormKind.OBLIGATION,
            scope=NormScope.HISTORY, source=NormSource.INTERNAL,
            history_rule="capital_check_before_accept",
        )
        fs = FeasibilitySet([norm])
        state = make_state()
        accept = ActionProfile(pricing=PricingAction(rate_on_line=0.05,
                                                     accept=True))
        hold = ActionProfile(pricing=PricingAction(rate_on_line=0.05))
        capital_msg = TypedMessage(
            msg_id="m1", workflow=Workflow.PRICING, round=1,
            sender=Role.CAPITAL, recipients=frozenset({Role.PRICING}),
            kind=MessageKind.CONSTRAINT, payload={"norm": "solvency_floor"},
        )
        assert fs.check(state, hold, history=()).feasible
        assert not fs.check(state, accept, history=()).feasible
        assert fs.check(state, accept, history=[capital_msg]).feasible

    def test_history_rule_critiques_resolved(self):
        norm = NormSpec(
            id="critiques_resolved", kind=NormKind.OBLIGATION,
            scope=NormScope.HISTORY, source=NormSource.INTERNAL,
            history_rule="critiques_resolved_before_accept",
        )
        fs = FeasibilitySet([norm])
        state = make_state()
        accept = ActionProfile(pricing=PricingAction(accept=True))
        critique = TypedMessage(
            msg_id="c1", workflow=Workflow.PRICING, round=2,
            sender=Role.PORTFOLIO_STEERING, recipients=frozenset({Role.PRICING}),
            kind=MessageKind.CRITIQUE, payload={"issue": "zone stack"},
            refers_to="p1",
        )
        answer = TypedMessage(
            msg_id="p2", workflow=Workflow.PRICING, round=3,
            sender=Role.PRICING, recipients=frozenset({Role.PORTFOLIO_STEERING}),
            kind=MessageKind.PROPOSAL, payload={}, refers_to="c1",
        )
        assert not fs.check(state, accept, history=[critique]).feasible
        assert fs.check(state, accept, history=[critique, answer]).feasible
