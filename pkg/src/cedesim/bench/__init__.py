"""Benchmark harness: four agent configurations, five metrics.

Runs the rule-based, single-agent, multi-agent, and ungoverned
configurations over identical synthetic books and seeds, computes
pricing variance, capital efficiency, interpretation error,
coordination rounds, and human-intervention metrics, and emits
deterministic markdown/CSV/JSON reports plus recomputable traces.
"""
from .config import PROFILE_ORDER, BenchConfigError, RunConfig
from .metrics import (DISPLAY_NAMES, EpisodeRecord, MetricError, MetricsRow,
                      build_rows, metric_capital_efficiency,
                      metric_coordination_rounds, metric_human_intervention,
                      metric_interpretation_error, metric_norm_violations,
                      metric_pricing_variance)
from .report import (METRIC_COLUMNS, REFERENCE_LABEL, REFERENCE_ROWS,
                     render_csv, render_json, render_markdown,
                     render_sweep_markdown)
from .runner import (BenchmarkReport, SweepReport, build_context, iter_trace_lines,
                     load_trace_records, run_benchmark, run_profiles,
                     run_sweep, run_validation, write_report_files,
                     write_sweep_files)

__all__ = [
    "BenchConfigError",
    "BenchmarkReport",
    "build_context",
    "DISPLAY_NAMES",
    "EpisodeRecord",
    "METRIC_COLUMNS",
    "MetricError",
    "MetricsRow",
    "PROFILE_ORDER",
    "REFERENCE_LABEL",
    "REFERENCE_ROWS",
    "RunConfig",
    "SweepReport",
    "build_rows",
    "iter_trace_lines",
    "load_trace_records",
    "metric_capital_efficiency",
    "metric_coordination_rounds",
    "metric_human_intervention",
    "metric_interpretation_error",
    "metric_norm_violations",
    "metric_pricing_variance",
    "render_csv",
    "render_json",
    "render_markdown",
    "render_sweep_markdown",
    "run_benchmark",
    "run_profiles",
    "run_sweep",
    "run_validation",
    "write_report_files",
    "write_sweep_files",
]
