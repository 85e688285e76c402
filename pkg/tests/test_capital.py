"""Tests for the solvency capital engine.

Every numeric expectation here is produced by an independent oracle:
closed-form algebra, an alternative quantile implementation, or a
frozen value computed once by hand, never by calling the code under
test twice.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cedesim.capital import (
    SCR_KEYS,
    CapitalConfigError,
    aggregate_scr,
    capital_norm,
    compute_capital_state,
    default_scr_correlation,
    key_loss_matrix,
    marginal_scr,
    peril_weights,
    scr_component,
    solvency_ratio,
)
from cedesim.core.types import (
    ExposureState,
    LineOfBusiness,
    Location,
    Peril,
    Treaty,
    TreatyLayer,
)
from cedesim.folio import AnnualCession, ComputationError
from cedesim.perils import (
    CatalogConfig,
    CorrelationSpec,
    build_event_catalog,
    build_loss_table,
    default_curves,
    simulate_annual_losses,
)


# ---------------------------------------------------------------------------
# Independent quantile oracle (linear interpolation on order statistics,
# the same convention R calls "type 7"): h = (n - 1) * p, interpolate
# between the floor and ceil order statistics.
# ---------------------------------------------------------------------------


def quantile_oracle(values, p):
    xs = sorted(float(v) for v in values)
    n = len(xs)
    if n == 1:
        return xs[0]
    h = (n - 1) * p
    lo = math.floor(h)
    hi = min(lo + 1, n - 1)
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo])


def test_quantile_oracle_matches_numpy_convention():
    rng = np.random.default_rng(42)
    for _ in range(50):
        data = rng.normal(size=rng.integers(2, 200))
        p = float(rng.uniform(0.01, 0.99))
        assert quantile_oracle(data, p) == pytest.approx(
            float(np.quantile(data, p)), abs=1e-12
        )


# ---------------------------------------------------------------------------
# scr_component
# ---------------------------------------------------------------------------


def test_scr_component_constant_losses_is_zero():
    assert scr_component([5.0] * 100) == 0.0


def test_scr_component_frozen_value_1_to_1000():
    # Oracle, worked by hand: sorted 1..1000, h = 999 * 0.995 = 994.005,
    # interpolating between the 995th and 996th order statistics gives
    # 995.005; mean is 500.5; component = 995.005 - 500.5 = 494.505.
    losses = list(range(1, 1001))
    assert scr_component(losses) == pytest.approx(494.505, abs=1e-9)
    assert scr_component(losses) == pytest.approx(
        quantile_oracle(losses, 0.995) - 500.5, abs=1e-12
    )


def test_scr_component_lognormal_matches_analytic():
    # X ~ LogNormal(0, 1): VaR_0.995 = exp(z_0.995), mean = exp(1/2).
    from scipy.stats import norm

    rng = np.random.default_rng(2024)
    sample = rng.lognormal(mean=0.0, sigma=1.0, size=200_000)
    analytic = math.exp(norm.ppf(0.995)) - math.exp(0.5)
    assert scr_component(sample) == pytest.approx(analytic, rel=0.02)


def test_scr_component_floors_at_zero():
    # One loss far beyond the 99.5% quantile drags the mean above it,
    # so the unfloored difference would be negative.
    losses = [0.0] * 999 + [1e12]
    assert quantile_oracle(losses, 0.995) < float(np.mean(losses))
    assert scr_component(losses) == 0.0


def test_scr_component_rejects_bad_inputs():
    with pytest.raises(ComputationError):
        scr_component([])
    with pytest.raises(ComputationError):
        scr_component([1.0, 2.0], confidence=0.0)
    with pytest.raises(ComputationError):
        scr_component([1.0, 2.0], confidence=1.0)


# ---------------------------------------------------------------------------
# aggregate_scr and correlation validation
# ---------------------------------------------------------------------------


def _equicorrelation(n: int, c: float) -> np.ndarray:
    return np.full((n, n), c) + (1.0 - c) * np.eye(n)


def test_aggregate_scr_worked_examples():
    s = [3.0, 4.0]
    identity = np.eye(2)
    ones = np.ones((2, 2))
    half = _equicorrelation(2, 0.5)
    # Oracles: sqrt(9 + 16) = 5; (3 + 4) = 7; sqrt(25 + 2*0.5*12) = sqrt(37).
    assert abs(aggregate_scr(s, identity) - 5.0) <= 1e-9
    assert abs(aggregate_scr(s, ones) - 7.0) <= 1e-9
    assert abs(aggregate_scr(s, half) - math.sqrt(37.0)) <= 1e-9


def test_aggregate_scr_rejects_invalid_correlation():
    s = [1.0, 1.0]
    with pytest.raises(CapitalConfigError):
        aggregate_scr(s, np.array([[1.0, 0.5]]))  # not square
    with pytest.raises(CapitalConfigError):
        aggregate_scr(s, np.array([[1.0, 0.5], [0.2, 1.0]]))  # asymmetric
    with pytest.raises(CapitalConfigError):
        aggregate_scr(s, np.array([[0.9, 0.0], [0.0, 1.0]]))  # bad diagonal
    with pytest.raises(CapitalConfigError):
        aggregate_scr(s, _equicorrelation(3, -0.9))  # not PSD
    with pytest.raises(CapitalConfigError):
        aggregate_scr([1.0, 1.0, 1.0], np.eye(2))  # size mismatch


nonneg_components = st.lists(
    st.floats(min_value=0.0, max_value=1e9, allow_nan=False),
    min_size=2,
    max_size=4,
)


@settings(max_examples=100, deadline=None)
@given(s=nonneg_components)
def test_aggregate_scr_identity_is_euclidean_norm(s):
    expected = math.sqrt(sum(v * v for v in s))
    assert aggregate_scr(s, np.eye(len(s))) == pytest.approx(expected, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(
    s=nonneg_components,
    c=st.floats(min_value=0.0, max_value=1.0),
    lam=st.floats(min_value=0.0, max_value=100.0),
)
def test_aggregate_scr_positive_homogeneity(s, c, lam):
    corr = _equicorrelation(len(s), c)
    scaled = [lam * v for v in s]
    assert aggregate_scr(scaled, corr) == pytest.approx(
        lam * aggregate_scr(s, corr), rel=1e-9, abs=1e-6
    )


@settings(max_examples=100, deadline=None)
@given(s=nonneg_components, c=st.floats(min_value=0.0, max_value=1.0))
def test_aggregate_scr_never_exceeds_plain_sum(s, c):
    corr = _equicorrelation(len(s), c)
    assert aggregate_scr(s, corr) <= sum(s) + 1e-6


@settings(max_examples=100, deadline=None)
@given(
    s=nonneg_components,
    c_lo=st.floats(min_value=0.0, max_value=1.0),
    c_hi=st.floats(min_value=0.0, max_value=1.0),
)
def test_aggregate_scr_monotone_in_correlation(s, c_lo, c_hi):
    if c_lo > c_hi:
        c_lo, c_hi = c_hi, c_lo
    lo = aggregate_scr(s, _equicorrelation(len(s), c_lo))
    hi = aggregate_scr(s, _equicorrelation(len(s), c_hi))
    assert lo <= hi + 1e-6


def test_default_scr_correlation_structure():
    corr = default_scr_correlation()
    assert corr.shape == (len(SCR_KEYS), len(SCR_KEYS))
    casualty = SCR_KEYS.index("casualty")
    for i in range(len(SCR_KEYS)):
        assert corr[i, i] == 1.0
        for j in range(i + 1, len(SCR_KEYS)):
            expected = 0.5 if casualty in (i, j) else 0.25
            assert corr[i, j] == expected
            assert corr[j, i] == expected


# ---------------------------------------------------------------------------
# capital_norm / solvency_ratio
# ---------------------------------------------------------------------------


def test_capital_norm_examples():
    assert capital_norm(150, 100.0, 1.0)
    assert not capital_norm(90, 100.0, 1.0)
    assert capital_norm(100, 100.0, 0.9)
    assert not capital_norm(100, 100.0, 1.1)


def test_capital_norm_degenerate_scr():
    assert capital_norm(0, 0.0, 1.5)
    assert capital_norm(10, -1.0, 99.0)
    assert not capital_norm(-1, 0.0, 1.0)


def test_solvency_ratio():
    assert solvency_ratio(150, 100.0) == pytest.approx(1.5)
    assert solvency_ratio(150, 0.0) == math.inf
    assert solvency_ratio(150, -5.0) == math.inf


# ---------------------------------------------------------------------------
# compute_capital_state / marginal_scr on constructed key matrices
# ---------------------------------------------------------------------------


def _key_matrix_from_columns(**columns) -> np.ndarray:
    n_years = len(next(iter(columns.values())))
    matrix = np.zeros((n_years, len(SCR_KEYS)))
    for key, col in columns.items():
        matrix[:, SCR_KEYS.index(key)] = col
    return matrix


def test_compute_capital_state_matches_componentwise_oracle():
    rng = np.random.default_rng(7)
    wind = rng.lognormal(15.0, 1.0, size=500)
    casualty = rng.lognormal(14.0, 0.5, size=500)
    matrix = _key_matrix_from_columns(wind=wind, casualty=casualty)
    state = compute_capital_state(matrix, own_funds=10**9)

    expected = {
        key: max(quantile_oracle(matrix[:, i], 0.995) - float(np.mean(matrix[:, i])), 0.0)
        for i, key in enumerate(SCR_KEYS)
    }
    for key in SCR_KEYS:
        assert state.components[key] == pytest.approx(expected[key], rel=1e-12)
    assert state.diversified_scr == pytest.approx(
        aggregate_scr([expected[k] for k in SCR_KEYS], default_scr_correlation()),
        rel=1e-12,
    )
    assert state.diversified_scr <= sum(expected.values()) + 1e-9
    assert state.solvency_ratio == pytest.approx(10**9 / state.diversified_scr)
    assert state.own_funds == 10**9


def test_marginal_scr_zero_candidate_is_zero():
    rng = np.random.default_rng(11)
    base = rng.lognormal(15.0, 1.0, size=(300, len(SCR_KEYS)))
    assert marginal_scr(base, np.zeros_like(base)) == 0.0


def test_marginal_scr_duplicating_the_book_doubles_it():
    rng = np.random.default_rng(13)
    base = rng.lognormal(15.0, 1.0, size=(300, len(SCR_KEYS)))
    baseline_scr = compute_capital_state(base, own_funds=1).diversified_scr
    # By positive homogeneity, doubling every loss doubles the SCR, so the
    # marginal contribution of a clone equals the baseline SCR.
    assert marginal_scr(base, base) == pytest.approx(baseline_scr, rel=1e-9)


def test_marginal_scr_can_be_negative_for_smoothing_candidate():
    n_years = 1000
    wind = np.zeros(n_years)
    wind[-10:] = 1000.0
    base = _key_matrix_from_columns(wind=wind)
    candidate = _key_matrix_from_columns(wind=1000.0 - wind)
    # base + candidate is constant in the wind key, so the combined SCR is
    # zero while the baseline SCR is strictly positive.
    assert compute_capital_state(base, own_funds=1).diversified_scr > 0
    assert marginal_scr(base, candidate) < 0


# ---------------------------------------------------------------------------
# peril_weights / key_loss_matrix on a small simulated book
# ---------------------------------------------------------------------------


def _tiny_world():
    zones = ("Z01", "Z02")
    cfg = CatalogConfig(events_per_peril={"Wind": 6, "Flood": 5, "Wildfire": 4})
    catalogs = {p: build_event_catalog(p, zones, cfg, seed=303) for p in Peril}
    locations = [
        Location(zone="Z01", x=1.0, y=1.0, insured_value=80_000_000,
                 line_of_business=LineOfBusiness.PROPERTY_PER_RISK),
        Location(zone="Z01", x=2.0, y=2.0, insured_value=50_000_000,
                 line_of_business=LineOfBusiness.CASUALTY),
        Location(zone="Z02", x=3.0, y=3.0, insured_value=60_000_000,
                 line_of_business=LineOfBusiness.PROPERTY_PER_RISK),
    ]
    exposures = ExposureState(locations=tuple(locations))
    table = build_loss_table(catalogs, default_curves(), exposures, zones)
    sample = simulate_annual_losses(
        catalogs, CorrelationSpec.from_preset("Medium"), n_years=150, seed=404
    )
    return zones, table, sample


def _treaty(lob, perils, zones=("Z01", "Z02")):
    return Treaty(
        id="TCAP",
        line_of_business=lob,
        layers=(TreatyLayer(attachment=1_000_000, limit=30_000_000,
                            reinstatements=0),),
        perils=frozenset(perils),
        exclusions=(),
        zones=frozenset(zones),
    )


def test_peril_weights_casualty_treaty_maps_to_casualty_key():
    _, table, sample = _tiny_world()
    treaty = _treaty(LineOfBusiness.CASUALTY, {Peril.WIND, Peril.FLOOD})
    assert peril_weights(sample, table, treaty) == {"casualty": 1.0}


def test_peril_weights_property_treaty_sums_to_one_over_covered_perils():
    _, table, sample = _tiny_world()
    treaty = _treaty(LineOfBusiness.PROPERTY_CAT, {Peril.WIND, Peril.FLOOD})
    weights = peril_weights(sample, table, treaty)
    assert set(weights) <= {"wind", "flood"}
    assert sum(weights.values()) == pytest.approx(1.0)
    assert all(w >= 0 for w in weights.values())


def test_key_loss_matrix_conserves_ceded_totals():
    zones, table, sample = _tiny_world()
    property_treaty = _treaty(LineOfBusiness.PROPERTY_CAT, {Peril.WIND, Peril.FLOOD})
    casualty_treaty = Treaty(
        id="TCAS",
        line_of_business=LineOfBusiness.CASUALTY,
        layers=(TreatyLayer(attachment=500_000, limit=10_000_000,
                            reinstatements=0),),
        perils=frozenset({Peril.WILDFIRE}),
        exclusions=(),
        zones=frozenset(zones),
    )
    n_years = sample.n_years
    rng = np.random.default_rng(5)
    cessions = {
        "TCAP": AnnualCession(
            ceded=rng.integers(0, 2_000_000, size=n_years),
            reinstatement_fraction=np.zeros(n_years),
        ),
        "TCAS": AnnualCession(
            ceded=rng.integers(0, 900_000, size=n_years),
            reinstatement_fraction=np.zeros(n_years),
        ),
    }
    matrix = key_loss_matrix(
        sample, table, [property_treaty, casualty_treaty], cessions
    )
    assert matrix.shape == (n_years, len(SCR_KEYS))
    total_ceded = cessions["TCAP"].ceded + cessions["TCAS"].ceded
    assert np.allclose(matrix.sum(axis=1), total_ceded)
    # The casualty treaty's cession lands entirely in the casualty key.
    casualty_col = matrix[:, SCR_KEYS.index("casualty")]
    assert np.all(casualty_col >= cessions["TCAS"].ceded - 1e-9)
