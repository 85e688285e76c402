"""Solvency capital engine: components, aggregation, marginal requirement.

The component measure is the 99.5% empirical quantile of annual aggregate
losses minus their mean, floored at zero; the quantile convention is
linear interpolation between order statistics (numpy's default), shared
with the portfolio tail statistic.  Aggregation is sqrt(s' C s) over a
fixed key set (three catastrophe perils plus casualty).
"""
from __future__ import annotations

import math
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .core.types import CapitalState, LineOfBusiness, Peril, Treaty
from .folio import AnnualCession, ComputationError, subject_gross_vector
from .perils import PERILS, EventLossTable, HazardSample

SCR_KEYS = ("wind", "flood", "wildfire", "casualty")

_PERIL_KEY = {Peril.WIND: "wind", Peril.FLOOD: "flood",
              Peril.WILDFIRE: "wildfire"}


class CapitalConfigError(ValueError):
    """Correlation matrix outside its invariants."""


def scr_component(annual_losses: Sequence[float],
                  confidence: float = 0.995) -> float:
    """VaR-minus-mean capital requirement for one key, floored at zero."""
    losses = np.asarray(annual_losses, dtype=float)
    if losses.size == 0:
        raise ComputationError("scr_component of empty sample")
    if not 0.0 < confidence < 1.0:
        raise ComputationError(f"confidence outside (0,1): {confidence}")
    return max(float(np.quantile(losses, confidence) - losses.mean()), 0.0)


def _check_correlation(corr: np.ndarray, size: int) -> np.ndarray:
    m = np.asarray(corr, dtype=float)
    if m.shape != (size, size):
        raise CapitalConfigError(f"correlation must be {size}x{size}")
    if not np.allclose(m, m.T, atol=1e-12):
        raise CapitalConfigError("correlation must be symmetric")
    if not np.allclose(np.diag(m), 1.0, atol=1e-12):
        raise CapitalConfigError("correlation diagonal must be 1")
    if np.linalg.eigvalsh(m).min() < -1e-10:
        raise CapitalConfigError("correlation must be PSD")
    return m


def aggregate_scr(components: Sequence[float],
                  corr: Sequence[Sequence[float]]) -> float:
    """Diversified requirement sqrt(s' C s) over component vector s."""
    s = np.asarray(components, dtype=float)
    m = _check_correlation(np.asarray(corr), s.size)
    return float(np.sqrt(s @ m @ s))


def default_scr_correlation() -> np.ndarray:
    """0.25 between catastrophe perils, 0.5 against casualty; PSD-checked."""
    m = np.full((len(SCR_KEYS), len(SCR_KEYS)), 0.25)
    m[:, 3] = m[3, :] = 0.5
    np.fill_diagonal(m, 1.0)
    return _check_correlation(m, len(SCR_KEYS))


def capital_norm(own_funds: int, diversified_scr: float,
                 threshold: float) -> bool:
    """Solvency test: own funds against the post-action requirement.

    Zero requirement passes whenever own funds are non-negative: no
    capital is needed for no risk.
    """
    if diversified_scr <= 0:
        return own_funds >= 0
    return own_funds / diversified_scr >= threshold


def solvency_ratio(own_funds: int, diversified_scr: float) -> float:
    return own_funds / diversified_scr if diversified_scr > 0 else math.inf


# ---------------------------------------------------------------------------
# Book-level key matrices.


def peril_weights(sample: HazardSample, table: EventLossTable,
                  treaty: Treaty) -> dict[str, float]:
    """Allocation weights of a treaty's cessions across SCR keys.

    Casualty treaties map entirely to the casualty key; property treaties
    split across peril keys pro-rata to realized subject gross per peril
    over the whole sample (a static allocation, not per-year).
    """
    if treaty.line_of_business is LineOfBusiness.CASUALTY:
        return {"casualty": 1.0}
    gross = subject_gross_vector(table, treaty)
    totals = {key: 0.0 for key in ("wind", "flood", "wildfire")}
    for occ in sample.occurrences:
        row = table.event_index[occ.event.id]
        g = float(gross[row])
        if g > 0:
            totals[_PERIL_KEY[occ.event.peril]] += g
    grand = sum(totals.values())
    if grand <= 0:
        # no realized subject loss: fall back to equal split over covered perils
        covered = [_PERIL_KEY[p] for p in PERILS if p in treaty.perils]
        return {k: 1.0 / len(covered) for k in covered}
    return {k: v / grand for k, v in totals.items() if v > 0}


def key_loss_matrix(sample: HazardSample, table: EventLossTable,
                    treaties: Iterable[Treaty],
                    cessions: Mapping[str, AnnualCession]) -> np.ndarray:
    """Annual ceded losses split across SCR keys, [n_years x len(SCR_KEYS)]."""
    matrix = np.zeros((sample.n_years, len(SCR_KEYS)))
    for treaty in treaties:
        cession = cessions.get(treaty.id)
        if cession is None:
            continue
        weights = peril_weights(sample, table, treaty)
        ceded = cession.ceded.astype(float)
        for key, w in weights.items():
            matrix[:, SCR_KEYS.index(key)] += ceded * w
    return matrix


def compute_capital_state(key_matrix: np.ndarray, own_funds: int,
                          corr: Optional[np.ndarray] = None,
                          confidence: float = 0.995) -> CapitalState:
    """Components, diversified requirement, and ratio from a key matrix."""
    m = default_scr_correlation() if corr is None else corr
    components = {
        key: scr_component(key_matrix[:, i], confidence)
        for i, key in enumerate(SCR_KEYS)
    }
    diversified = aggregate_scr([components[k] for k in SCR_KEYS], m)
    return CapitalState(
        own_funds=own_funds,
        components=components,
        diversified_scr=diversified,
        solvency_ratio=solvency_ratio(own_funds, diversified),
    )


def marginal_scr(baseline_matrix: np.ndarray, candidate_matrix: np.ndarray,
                 corr: Optional[np.ndarray] = None,
                 confidence: float = 0.995) -> float:
    """Diversified-requirement delta from adding the candidate's losses.

    May be negative when the candidate hedges the book.
    """
    m = default_scr_correlation() if corr is None else corr
    with_candidate = aggregate_scr(
        [scr_component((baseline_matrix + candidate_matrix)[:, i], confidence)
         for i in range(len(SCR_KEYS))], m)
    without = aggregate_scr(
        [scr_component(baseline_matrix[:, i], confidence)
         for i in range(len(SCR_KEYS))], m)
    return with_candidate - without
