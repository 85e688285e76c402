"""Synthetic portfolio generation: treaties, wordings, exposures, validation."""
from .generator import (
    GeneratorConfig,
    GeneratorConfigError,
    Portfolio,
    generate_portfolio,
    zone_ids,
)
from .stats import (
    MULTI_PERIL_BAND,
    PROPERTY_CAT_BAND,
    RATIO_BAND,
    TAIL_RATIO_BAND,
    StatisticBand,
    ValidationError,
    ValidationReport,
    attachment_ratios,
    validate_statistics,
)
from .wording import (
    AMOUNT_GRID,
    NoiseModel,
    ParseError,
    clause_count,
    clause_diff,
    parse_wording_exact,
    parse_wording_noisy,
    render_wording,
)

__all__ = [
    "AMOUNT_GRID", "GeneratorConfig", "GeneratorConfigError",
    "MULTI_PERIL_BAND", "NoiseModel", "PROPERTY_CAT_BAND", "ParseError",
    "Portfolio", "RATIO_BAND", "StatisticBand", "TAIL_RATIO_BAND",
    "ValidationError", "ValidationReport", "attachment_ratios",
    "clause_count", "clause_diff", "generate_portfolio",
    "parse_wording_exact", "parse_wording_noisy", "render_wording",
    "validate_statistics", "zone_ids",
]
