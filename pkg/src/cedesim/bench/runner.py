"""Benchmark execution: profile runs, validation, reports, sweep.

``run_benchmark`` executes all four agent configurations on identical
portfolios, hazard worlds, and episode seeds, computes the five headline
metrics per configuration, validates the generator's calibration bands,
and (when an output directory is configured) writes the markdown/CSV/
JSON reports plus hash-chained episode traces from which every number
can be recomputed.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterator, Mapping, Optional, Sequence

from ..core.types import RegulatoryState
from ..genesis import Portfolio, generate_portfolio, validate_statistics
from ..kernel import EpisodeOutcome, Profile, SimulationContext, run_episode
from .config import PROFILE_ORDER, RunConfig
from .metrics import EpisodeRecord, MetricsRow, build_rows
from .report import (METRIC_COLUMNS, REFERENCE_LABEL, REFERENCE_ROWS,
                     render_csv, render_json, render_markdown,
                     render_sweep_markdown)

__all__ = [
    "BenchmarkReport",
    "build_context",
    "SweepReport",
    "run_profiles",
    "run_validation",
    "run_benchmark",
    "run_sweep",
    "write_report_files",
    "write_sweep_files",
    "load_trace_records",
    "iter_trace_lines",
]

SWEEP_PRESETS = ("Low", "Medium", "High")
SWEEP_THRESHOLD_FACTORS = (0.9, 1.0, 1.1)


def build_context(cfg: RunConfig, portfolio: Portfolio) -> SimulationContext:
    regulatory = RegulatoryState(
        solvency_threshold=cfg.solvency_threshold,
        max_rounds=cfg.max_rounds,
    )
    return SimulationContext(
        portfolio,
        seed=cfg.sim_seed,
        n_years=cfg.n_years,
        correlation_preset=cfg.correlation_preset,
        own_funds=cfg.own_funds,
        regulatory=regulatory,
        expense_ratio=cfg.expense_ratio,
    )


def run_profiles(
        cfg: RunConfig,
) -> tuple[Portfolio, SimulationContext,
           dict[str, dict[int, list[EpisodeOutcome]]]]:
    """Run every profile over the same book, world, and episode seeds."""
    portfolio = generate_portfolio(cfg.generator)
    context = build_context(cfg, portfolio)
    outcomes: dict[str, dict[int, list[EpisodeOutcome]]] = {}
    for profile in PROFILE_ORDER:
        noise = cfg.noise_for(profile)
        per_seed: dict[int, list[EpisodeOutcome]] = {}
        for seed in cfg.seeds:
            per_seed[seed] = [
                run_episode(context, treaty, profile, seed,
                            noise=noise, weights=cfg.weights)
                for treaty in portfolio.treaties
            ]
        outcomes[profile.value] = per_seed
    return portfolio, context, outcomes


def run_validation(cfg: RunConfig) -> dict[str, Any]:
    """Calibration-band statistics for one generated book per seed.

    The generator seed varies; the hazard world stays pinned to
    ``sim_seed`` so the tail statistic measures the book, not catalog
    resampling noise.
    """
    reports = []
    for seed in cfg.seeds:
        portfolio = generate_portfolio(replace(cfg.generator, seed=seed))
        context = build_context(cfg, portfolio)
        report = validate_statistics(
            portfolio, context.total_annual_ceded.astype(float),
            cfg.own_funds)
        reports.append({"seed": seed, **report.to_dict()})
    return {
        "reports": reports,
        "all_ok": all(r["all_ok"] for r in reports),
    }


def _records_by_profile(
        outcomes: Mapping[str, Mapping[int, Sequence[EpisodeOutcome]]],
) -> dict[str, list[EpisodeRecord]]:
    return {
        profile: [EpisodeRecord.from_outcome(o)
                  for seed in sorted(per_seed)
                  for o in per_seed[seed]]
        for profile, per_seed in outcomes.items()
    }


def _audit_digests(
        outcomes: Mapping[str, Mapping[int, Sequence[EpisodeOutcome]]],
) -> dict[str, dict[str, str]]:
    """Per (profile, seed): sha256 over the episode audit heads in order."""
    digests: dict[str, dict[str, str]] = {}
    for profile, per_seed in outcomes.items():
        digests[profile] = {}
        for seed in sorted(per_seed):
            h = hashlib.sha256()
            for outcome in per_seed[seed]:
                h.update(outcome.audit_head.encode("ascii"))
            digests[profile][str(seed)] = h.hexdigest()
    return digests


def _trace_digest(digests: Mapping[str, Mapping[str, str]]) -> str:
    h = hashlib.sha256()
    for profile in sorted(digests):
        for seed in sorted(digests[profile]):
            h.update(f"{profile}:{seed}:{digests[profile][seed]}"
                     .encode("ascii"))
    return h.hexdigest()


@dataclass(frozen=True)
class BenchmarkReport:
    """Everything a benchmark run produced, JSON-serialisable."""

    config: dict[str, Any]
    rows: tuple[MetricsRow, ...]
    validation: dict[str, Any]
    audit_digests: dict[str, dict[str, str]]
    trace_digest: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config,
            "rows": [row.to_dict() for row in self.rows],
            "reference": {
                "label": REFERENCE_LABEL,
                "rows": [
                    {"display_name": name,
                     "pricing_variance": v[0],
                     "capital_efficiency": v[1],
                     "interpretation_error": v[2],
                     "coordination_rounds": v[3],
                     "human_intervention": v[4]}
                    for name, v in REFERENCE_ROWS.items()
                ],
            },
            "validation": self.validation,
            "audit_digests": self.audit_digests,
            "trace_digest": self.trace_digest,
        }


def run_benchmark(cfg: RunConfig, *,
                  validate: bool = True) -> BenchmarkReport:
    """Execute the full benchmark; write artefacts when configured."""
    _, _, outcomes = run_profiles(cfg)
    records = _records_by_profile(outcomes)
    rows = tuple(build_rows(records))
    validation = (run_validation(cfg) if validate
                  else {"reports": [], "all_ok": True})
    digests = _audit_digests(outcomes)
    report = BenchmarkReport(
        config=cfg.to_dict(),
        rows=rows,
        validation=validation,
        audit_digests=digests,
        trace_digest=_trace_digest(digests),
    )
    if cfg.out_dir is not None:
        write_report_files(report, Path(cfg.out_dir))
        _write_traces(outcomes, Path(cfg.out_dir) / "traces")
    return report


def write_report_files(report: BenchmarkReport | Mapping[str, Any],
                       out_dir: Path,
                       formats: Sequence[str] = ("md", "csv", "json"),
                       ) -> list[Path]:
    """Write benchmark.{md,csv,json}; accepts the report or its dict."""
    data = (report.to_dict() if isinstance(report, BenchmarkReport)
            else dict(report))
    out_dir.mkdir(parents=True, exist_ok=True)
    renderers = {"md": render_markdown, "csv": render_csv,
                 "json": render_json}
    written = []
    for fmt in formats:
        if fmt not in renderers:
            raise ValueError(f"unknown report format {fmt!r}")
        path = out_dir / f"benchmark.{fmt}"
        path.write_text(renderers[fmt](data), encoding="utf-8")
        written.append(path)
    return written


def _write_traces(
        outcomes: Mapping[str, Mapping[int, Sequence[EpisodeOutcome]]],
        trace_dir: Path) -> None:
    """One JSONL file per (profile, seed); one episode trace per line."""
    trace_dir.mkdir(parents=True, exist_ok=True)
    for profile in sorted(outcomes):
        for seed in sorted(outcomes[profile]):
            path = trace_dir / f"{profile}-{seed}.jsonl"
            with path.open("w", encoding="utf-8") as fh:
                for outcome in outcomes[profile][seed]:
                    fh.write(json.dumps(
                        {"treaty_id": outcome.treaty_id,
                         "lines": outcome.audit.to_lines()},
                        sort_keys=True) + "\n")


def iter_trace_lines(trace_dir: Path) -> Iterator[tuple[str, list[str]]]:
    """Yield (treaty_id, audit lines) for every persisted episode."""
    for path in sorted(trace_dir.glob("*.jsonl")):
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                obj = json.loads(line)
                yield obj["treaty_id"], list(obj["lines"])


def load_trace_records(trace_dir: Path) -> dict[str, list[EpisodeRecord]]:
    """Rebuild metric inputs from persisted traces alone."""
    records: dict[str, list[EpisodeRecord]] = {}
    for _, lines in iter_trace_lines(trace_dir):
        record = EpisodeRecord.from_audit_lines(lines)
        records.setdefault(record.profile, []).append(record)
    return records


def _orderings(rows: Sequence[MetricsRow]) -> dict[str, list[str]]:
    """Per metric: profile display names sorted by ascending value.

    Profiles without a value for a metric are excluded. Ties break on
    the canonical profile order, keeping the result deterministic.
    """
    rank = {row.display_name: i for i, row in enumerate(rows)}
    orderings: dict[str, list[str]] = {}
    for key, _ in METRIC_COLUMNS:
        valued = [(row.to_dict()[key], rank[row.display_name],
                   row.display_name)
                  for row in rows if row.to_dict()[key] is not None]
        orderings[key] = [name for _, _, name in sorted(valued)]
    return orderings


@dataclass(frozen=True)
class SweepReport:
    """Sensitivity of profile orderings to preset and threshold."""

    config: dict[str, Any]
    base: dict[str, Any]
    metrics: tuple[str, ...]
    base_orderings: dict[str, list[str]]
    combos: tuple[dict[str, Any], ...]

    def to_dict(self) -> dict[str, Any]:
        all_preserved = {
            metric: all(c["preserved"][metric] for c in self.combos
                        if not c["is_base"])
            for metric in self.metrics
        }
        return {
            "config": self.config,
            "base": self.base,
            "metrics": list(self.metrics),
            "base_orderings": self.base_orderings,
            "combos": list(self.combos),
            "all_preserved": all_preserved,
            "preserved_everywhere": all(all_preserved.values()),
        }


def run_sweep(cfg: RunConfig) -> SweepReport:
    """Re-run the benchmark over 3 presets x solvency threshold +-10%.

    Reports, per combination and metric, whether the profile ordering
    matches the base combination (the config's own preset/threshold).
    """
    base_key = (cfg.correlation_preset, cfg.solvency_threshold)
    combos: list[dict[str, Any]] = []
    rows_by_combo: dict[tuple[str, float], tuple[MetricsRow, ...]] = {}
    for preset in SWEEP_PRESETS:
        for factor in SWEEP_THRESHOLD_FACTORS:
            threshold = cfg.solvency_threshold * factor
            sub = replace(cfg, correlation_preset=preset,
                          solvency_threshold=threshold, out_dir=None)
            _, _, outcomes = run_profiles(sub)
            rows = tuple(build_rows(_records_by_profile(outcomes)))
            rows_by_combo[(preset, threshold)] = rows
    # RunConfig validates the preset against the named levels and the
    # factor 1.0 leaves the threshold bit-identical, so the base
    # combination is always part of the grid.
    base_orderings = _orderings(rows_by_combo[base_key])
    metrics = tuple(key for key, _ in METRIC_COLUMNS)
    for (preset, threshold), rows in rows_by_combo.items():
        orderings = _orderings(rows)
        is_base = (preset, threshold) == base_key
        combos.append({
            "correlation_preset": preset,
            "solvency_threshold": threshold,
            "is_base": is_base,
            "rows": [row.to_dict() for row in rows],
            "orderings": orderings,
            "preserved": {m: orderings[m] == base_orderings[m]
                          for m in metrics},
        })
    combos.sort(key=lambda c: (SWEEP_PRESETS.index(c["correlation_preset"]),
                               c["solvency_threshold"]))
    report = SweepReport(
        config=cfg.to_dict(),
        base={"correlation_preset": base_key[0],
              "solvency_threshold": base_key[1]},
        metrics=metrics,
        base_orderings=base_orderings,
        combos=tuple(combos),
    )
    if cfg.out_dir is not None:
        write_sweep_files(report, Path(cfg.out_dir))
    return report


def write_sweep_files(report: SweepReport | Mapping[str, Any],
                      out_dir: Path,
                      formats: Sequence[str] = ("md", "json"),
                      ) -> list[Path]:
    data = (report.to_dict() if isinstance(report, SweepReport)
            else dict(report))
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        if fmt == "md":
            path = out_dir / "sweep.md"
            path.write_text(render_sweep_markdown(data), encoding="utf-8")
        elif fmt == "json":
            path = out_dir / "sweep.json"
            path.write_text(render_json(data), encoding="utf-8")
        else:
            raise ValueError(f"unknown sweep format {fmt!r}")
        written.append(path)
    return written
