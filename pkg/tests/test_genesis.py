"""Tests for synthetic treaty generation, wording round-trips, and
portfolio validation statistics.

The round-trip property is the load-bearing guarantee: the exact parser
must be a total inverse of the renderer over the whole representable
treaty space.  A golden corpus pins the concrete wording format.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cedesim.core.types import (
    ExclusionClause,
    ExclusionKind,
    ExposureState,
    LineOfBusiness,
    Location,
    Peril,
    Treaty,
    TreatyLayer,
)
from cedesim.genesis.generator import (
    GeneratorConfig,
    GeneratorConfigError,
    Portfolio,
    generate_portfolio,
    zone_ids,
)
from cedesim.genesis.stats import (
    ValidationError,
    attachment_ratios,
    validate_statistics,
)
from cedesim.genesis.wording import (
    NoiseModel,
    ParseError,
    clause_count,
    clause_diff,
    parse_wording_exact,
    parse_wording_noisy,
    render_wording,
)

GOLDEN = Path(__file__).parent / "golden"
GRID = 500_000
M = 1_000_000


def structurally_equal(a: Treaty, b: Treaty) -> bool:
    return replace(a, wording="") == replace(b, wording="")


# ---------------------------------------------------------------------------
# Golden corpus
# ---------------------------------------------------------------------------

GOLDEN_NAMES = sorted(p.stem.replace(".wording", "")
                      for p in GOLDEN.glob("*.wording.txt"))


def test_golden_corpus_present():
    assert len(GOLDEN_NAMES) >= 3


@pytest.mark.parametrize("name", GOLDEN_NAMES)
def test_golden_wording_parses_to_expected_structure(name):
    text = (GOLDEN / f"{name}.wording.txt").read_text()
    expected = json.loads((GOLDEN / f"{name}.structure.json").read_text())
    parsed = parse_wording_exact(text)
    assert replace(parsed, wording=text).to_dict() == expected


@pytest.mark.parametrize("name", GOLDEN_NAMES)
def test_golden_structure_renders_to_expected_wording(name):
    text = (GOLDEN / f"{name}.wording.txt").read_text()
    expected = json.loads((GOLDEN / f"{name}.structure.json").read_text())
    treaty = Treaty.from_dict(expected)
    assert render_wording(treaty) == text


# ---------------------------------------------------------------------------
# Hypothesis round-trip over the representable treaty space
# ---------------------------------------------------------------------------

amounts = st.integers(min_value=1, max_value=400).map(lambda k: k * GRID)
attachments = st.integers(min_value=0, max_value=200).map(lambda k: k * GRID)
pcts = st.sampled_from([0.5, 1.0, 1.5])


@st.composite
def treaties(draw):
    tid = f"T{draw(st.integers(min_value=1, max_value=9999)):04d}"
    lob = draw(st.sampled_from(list(LineOfBusiness)))
    first = TreatyLayer(
        attachment=draw(attachments),
        limit=draw(amounts),
        reinstatements=draw(st.integers(min_value=0, max_value=2)),
        reinstatement_premium_pct=draw(pcts),
    )
    layers = [first]
    if draw(st.booleans()):
        layers.append(
            TreatyLayer(
                attachment=first.attachment + first.limit + draw(attachments),
                limit=draw(amounts),
                reinstatements=draw(st.integers(min_value=0, max_value=1)),
                reinstatement_premium_pct=draw(pcts),
            )
        )
    perils = frozenset(
        draw(st.sets(st.sampled_from(list(Peril)), min_size=1, max_size=3))
    )
    kinds = draw(st.sets(st.sampled_from(list(ExclusionKind)), max_size=4))
    exclusions = tuple(
        ExclusionClause(kind, draw(st.booleans()))
        for kind in sorted(kinds, key=lambda k: k.value)
    )
    zones = frozenset(
        draw(
            st.sets(
                st.integers(min_value=1, max_value=15).map(lambda i: f"Z{i:02d}"),
                min_size=1,
                max_size=4,
            )
        )
    )
    hours = draw(st.sampled_from([None, 24, 72, 168]))
    return Treaty(
        id=tid,
        line_of_business=lob,
        layers=tuple(layers),
        perils=perils,
        exclusions=exclusions,
        zones=zones,
        hours_clause=hours,
    )


@settings(max_examples=300, deadline=None)
@given(treaty=treaties())
def test_render_parse_round_trip(treaty):
    assert structurally_equal(parse_wording_exact(render_wording(treaty)), treaty)


def test_generator_output_round_trips():
    for seed in (1, 2):
        portfolio = generate_portfolio(GeneratorConfig(n_treaties=500, seed=seed))
        assert len(portfolio.treaties) == 500
        for treaty in portfolio.treaties:
            parsed = parse_wording_exact(treaty.wording)
            assert structurally_equal(parsed, treaty)


# ---------------------------------------------------------------------------
# Parse errors carry position information
# ---------------------------------------------------------------------------


def _golden_lines():
    return (GOLDEN / "single_layer_plain.wording.txt").read_text().splitlines()


def test_parse_error_on_truncated_wording():
    lines = _golden_lines()
    with pytest.raises(ParseError) as exc:
        parse_wording_exact("\n".join(lines[:2]))
    assert exc.value.line == 3
    # Cutting after the layer block leaves the perils clause missing.
    with pytest.raises(ParseError, match="unexpected end") as exc:
        parse_wording_exact("\n".join(lines[:3]))
    assert exc.value.line == 4


def test_parse_error_on_malformed_layer():
    lines = _golden_lines()
    lines[2] = "LAYER 1: one hundred xs fifty | REINSTATEMENTS: NIL"
    with pytest.raises(ParseError) as exc:
        parse_wording_exact("\n".join(lines))
    assert exc.value.line == 3


def test_parse_error_on_wrong_layer_index():
    lines = _golden_lines()
    lines[2] = lines[2].replace("LAYER 1:", "LAYER 2:")
    with pytest.raises(ParseError) as exc:
        parse_wording_exact("\n".join(lines))
    assert exc.value.line == 3


def test_parse_error_on_unknown_peril():
    lines = _golden_lines()
    lines[3] = "PERILS COVERED: Windstorm, Earthquake"
    with pytest.raises(ParseError) as exc:
        parse_wording_exact("\n".join(lines))
    assert exc.value.line == 4


def test_parse_error_on_unknown_exclusion_text():
    lines = _golden_lines()
    lines[4] = "EXCLUSION: LOSS CAUSED BY METEOR STRIKE"
    with pytest.raises(ParseError) as exc:
        parse_wording_exact("\n".join(lines))
    assert exc.value.line == 5


def test_parse_error_on_trailing_content():
    text = (GOLDEN / "single_layer_plain.wording.txt").read_text()
    with pytest.raises(ParseError):
        parse_wording_exact(text.rstrip("\n") + "\nSIDE LETTER: WAIVED\n")


# ---------------------------------------------------------------------------
# Noisy parsing
# ---------------------------------------------------------------------------


def _surge_treaty(ambiguous: bool) -> Treaty:
    return Treaty(
        id="TN01",
        line_of_business=LineOfBusiness.PROPERTY_CAT,
        layers=(TreatyLayer(attachment=50 * M, limit=100 * M, reinstatements=1),),
        perils=frozenset({Peril.WIND}),
        exclusions=(ExclusionClause(ExclusionKind.STORM_SURGE, ambiguous),),
        zones=frozenset({"Z01", "Z02"}),
        hours_clause=72,
    )


def test_zero_noise_equals_exact_parse():
    treaty = _surge_treaty(ambiguous=True)
    text = render_wording(treaty)
    rng = np.random.default_rng(0)
    noisy = parse_wording_noisy(text, NoiseModel(), rng)
    assert structurally_equal(noisy, parse_wording_exact(text))
    assert clause_diff(treaty, noisy) == 0


def test_full_noise_corrupts_every_clause():
    treaty = _surge_treaty(ambiguous=False)
    text = render_wording(treaty)
    rng = np.random.default_rng(1)
    noisy = parse_wording_noisy(
        text,
        NoiseModel(clause_error_rate=1.0, ambiguous_exclusion_error_rate=1.0),
        rng,
    )
    assert clause_diff(treaty, noisy) == clause_count(treaty)
    # The surge exclusion flips scope to a plain flood exclusion when the
    # treaty neither covers nor already excludes flood.
    assert {c.kind for c in noisy.exclusions} == {ExclusionKind.FLOOD}
    # Layer terms shrink rather than grow.
    assert (
        noisy.layers[0].attachment < treaty.layers[0].attachment
        or noisy.layers[0].limit < treaty.layers[0].limit
    )


def test_ambiguous_rate_replaces_base_rate_on_ambiguous_clauses():
    treaty = _surge_treaty(ambiguous=True)
    text = render_wording(treaty)
    rng = np.random.default_rng(2)
    noisy = parse_wording_noisy(
        text,
        NoiseModel(clause_error_rate=1.0, ambiguous_exclusion_error_rate=0.0),
        rng,
    )
    # Every clause is corrupted except the ambiguous exclusion, whose own
    # rate is zero.
    kinds = {(c.kind, c.ambiguous) for c in noisy.exclusions}
    assert kinds == {(ExclusionKind.STORM_SURGE, True)}
    assert clause_diff(treaty, noisy) == clause_count(treaty) - 1


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(clause_error_rate=-0.1)
    with pytest.raises(ValueError):
        NoiseModel(clause_error_rate=1.1)
    with pytest.raises(ValueError):
        NoiseModel(threshold_shift=0.0)
    with pytest.raises(ValueError):
        NoiseModel(threshold_shift=1.0)


def test_noisy_parse_error_rate_matches_binomial_oracle():
    # With every clause corrupted independently at p = 0.1, the pooled
    # clause error fraction is binomial; assert within 3 standard errors.
    p = 0.1
    portfolio = generate_portfolio(GeneratorConfig(n_treaties=500, seed=9))
    noise = NoiseModel(clause_error_rate=p, ambiguous_exclusion_error_rate=p)
    rng = np.random.default_rng(1234)
    diffs = counts = 0
    for treaty in portfolio.treaties:
        parsed = parse_wording_noisy(treaty.wording, noise, rng)
        diffs += clause_diff(treaty, parsed)
        counts += clause_count(treaty)
    rate = diffs / counts
    se = math.sqrt(p * (1 - p) / counts)
    assert abs(rate - p) <= 3 * se


# ---------------------------------------------------------------------------
# Generator configuration and output shape
# ---------------------------------------------------------------------------


def test_generator_config_validation():
    with pytest.raises(GeneratorConfigError):
        GeneratorConfig(n_treaties=0)
    with pytest.raises(GeneratorConfigError):
        GeneratorConfig(zone_count=0)
    with pytest.raises(GeneratorConfigError):
        GeneratorConfig(attachment_ratio_sd=-0.1)
    with pytest.raises(GeneratorConfigError):
        GeneratorConfig(property_cat_share=1.5)
    with pytest.raises(GeneratorConfigError):
        GeneratorConfig(limit_median=0)
    with pytest.raises(GeneratorConfigError):
        GeneratorConfig.from_dict({"n_treaties": 5, "bogus_knob": 1})


def test_generator_config_dict_round_trip():
    cfg = GeneratorConfig(n_treaties=7, seed=3, zone_count=4)
    assert GeneratorConfig.from_dict(cfg.to_dict()) == cfg


def test_zone_ids_format():
    assert zone_ids(3) == ("Z01", "Z02", "Z03")
    assert len(zone_ids(12)) == 12


def test_generate_portfolio_shape_and_ids():
    cfg = GeneratorConfig(n_treaties=40, seed=4, zone_count=6)
    portfolio = generate_portfolio(cfg)
    assert len(portfolio.treaties) == 40
    assert portfolio.zones == zone_ids(6)
    assert [t.id for t in portfolio.treaties] == [
        f"T{i:04d}" for i in range(1, 41)
    ]
    for treaty in portfolio.treaties:
        assert treaty.wording
        assert treaty.zones <= set(portfolio.zones)
    zones_seen = {loc.zone for loc in portfolio.exposures.locations}
    assert zones_seen == set(portfolio.zones)
    per_zone = {
        z: sum(1 for loc in portfolio.exposures.locations if loc.zone == z)
        for z in portfolio.zones
    }
    assert all(count >= 3 for count in per_zone.values())


def test_generate_portfolio_deterministic():
    cfg = GeneratorConfig(n_treaties=25, seed=12)
    assert generate_portfolio(cfg).to_dict() == generate_portfolio(cfg).to_dict()
    other = generate_portfolio(GeneratorConfig(n_treaties=25, seed=13))
    assert other.to_dict() != generate_portfolio(cfg).to_dict()


def test_portfolio_dict_round_trip():
    portfolio = generate_portfolio(GeneratorConfig(n_treaties=10, seed=2))
    assert Portfolio.from_dict(portfolio.to_dict()) == portfolio


def test_exposures_cluster_within_zones():
    portfolio = generate_portfolio(GeneratorConfig(n_treaties=5, seed=8))
    by_zone: dict[str, list[tuple[float, float]]] = {}
    for loc in portfolio.exposures.locations:
        by_zone.setdefault(loc.zone, []).append((loc.x, loc.y))

    def mean_dist(pairs):
        dists = [
            math.dist(a, b) for a, b in itertools.islice(pairs, 4000)
        ]
        return float(np.mean(dists))

    within = mean_dist(
        (a, b)
        for pts in by_zone.values()
        for a, b in itertools.combinations(pts, 2)
    )
    zones = sorted(by_zone)
    between = mean_dist(
        (a, b)
        for za, zb in itertools.combinations(zones, 2)
        for a in by_zone[za][:6]
        for b in by_zone[zb][:6]
    )
    assert within < between


# ---------------------------------------------------------------------------
# Validation statistics
# ---------------------------------------------------------------------------


def _manual_portfolio():
    def treaty(tid, lob, perils, attachment, limit):
        return Treaty(
            id=tid,
            line_of_business=lob,
            layers=(TreatyLayer(attachment=attachment, limit=limit,
                                reinstatements=0),),
            perils=frozenset(perils),
            exclusions=(),
            zones=frozenset({"Z01"}),
            wording="",
        )

    treaties = (
        treaty("T0001", LineOfBusiness.PROPERTY_CAT,
               {Peril.WIND, Peril.FLOOD}, 45 * M, 100 * M),
        treaty("T0002", LineOfBusiness.PROPERTY_CAT,
               {Peril.WIND, Peril.FLOOD}, 50 * M, 100 * M),
        treaty("T0003", LineOfBusiness.PROPERTY_CAT,
               {Peril.WIND, Peril.FLOOD}, 40 * M, 100 * M),
        treaty("T0004", LineOfBusiness.PROPERTY_CAT, {Peril.WIND},
               55 * M, 100 * M),
        treaty("T0005", LineOfBusiness.PROPERTY_CAT, {Peril.WILDFIRE},
               45 * M, 100 * M),
        treaty("T0006", LineOfBusiness.PROPERTY_PER_RISK, {Peril.WIND},
               50 * M, 100 * M),
        treaty("T0007", LineOfBusiness.PROPERTY_PER_RISK, {Peril.FLOOD},
               40 * M, 100 * M),
        treaty("T0008", LineOfBusiness.CASUALTY, {Peril.WIND},
               55 * M, 100 * M),
    )
    exposures = ExposureState(locations=(
        Location(zone="Z01", x=0.0, y=0.0, insured_value=M,
                 line_of_business=LineOfBusiness.PROPERTY_PER_RISK),
    ))
    return Portfolio(treaties=treaties, exposures=exposures, zones=("Z01",))


def test_validate_statistics_manual_oracle():
    portfolio = _manual_portfolio()
    # Annual losses 1..1000 (in millions): the 99.5% quantile is 995.005m.
    losses = [i * M for i in range(1, 1001)]
    own_funds = int(995.005 * M / 0.75)
    report = validate_statistics(portfolio, losses, own_funds)
    by_name = {band.name: band for band in report.statistics}

    ratios = attachment_ratios(portfolio)
    assert ratios == pytest.approx(
        [0.45, 0.50, 0.40, 0.55, 0.45, 0.50, 0.40, 0.55]
    )
    assert by_name["attachment_limit_ratio"].value == pytest.approx(0.475)
    assert by_name["attachment_limit_ratio"].sd == pytest.approx(
        float(np.std(ratios, ddof=1))
    )
    assert by_name["property_cat_share"].value == pytest.approx(0.625)
    assert by_name["multi_peril_share"].value == pytest.approx(0.375)
    assert by_name["tail_loss_over_capital"].value == pytest.approx(0.75, rel=1e-6)
    assert report.all_ok
    assert all(band.ok for band in report.statistics)


def test_validate_statistics_flags_out_of_band():
    portfolio = _manual_portfolio()
    bad = Treaty(
        id="T0009",
        line_of_business=LineOfBusiness.PROPERTY_CAT,
        layers=(TreatyLayer(attachment=100 * M, limit=100 * M,
                            reinstatements=0),),
        perils=frozenset({Peril.WIND}),
        exclusions=(),
        zones=frozenset({"Z01"}),
    )
    lopsided = Portfolio(
        treaties=(bad,) * 8,
        exposures=portfolio.exposures,
        zones=portfolio.zones,
    )
    losses = [i * M for i in range(1, 1001)]
    report = validate_statistics(lopsided, losses, int(995.005 * M / 0.75))
    by_name = {band.name: band for band in report.statistics}
    assert by_name["attachment_limit_ratio"].value == pytest.approx(1.0)
    assert not by_name["attachment_limit_ratio"].ok
    assert not report.all_ok


def test_validate_statistics_errors():
    portfolio = _manual_portfolio()
    losses = [float(i) for i in range(1, 101)]
    with pytest.raises(ValidationError):
        validate_statistics(
            Portfolio(treaties=(), exposures=portfolio.exposures, zones=("Z01",)),
            losses, 10**9,
        )
    with pytest.raises(ValidationError):
        validate_statistics(portfolio, [], 10**9)
    with pytest.raises(ValidationError):
        validate_statistics(portfolio, losses, 0)


def test_validation_report_dict_shape():
    portfolio = _manual_portfolio()
    losses = [i * M for i in range(1, 1001)]
    report = validate_statistics(portfolio, losses, int(995.005 * M / 0.75))
    payload = report.to_dict()
    assert payload["all_ok"] is True
    names = [row["name"] for row in payload["statistics"]]
    assert names == [
        "attachment_limit_ratio",
        "property_cat_share",
        "multi_peril_share",
        "tail_loss_over_capital",
    ]
    for row in payload["statistics"]:
        assert set(row) >= {"name", "value", "sd", "band", "ok"}
