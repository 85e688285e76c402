"""Deterministic report rendering: markdown, CSV, and JSON.

Renderers take plain dicts (the JSON form of a report), so a remote
client can rebuild byte-identical files from an HTTP response. No
timestamps or environment data are embedded: equal configs and seeds
yield byte-identical artefacts.

The measured table is laid out next to published reference results from
an LLM-based study of the same benchmark design; those numbers are
quoted for orientation only and are not reproduced by this simulator.
"""
from __future__ import annotations

import csv
import io
import json
from typing import Any, Mapping, Optional, Sequence

__all__ = [
    "REFERENCE_LABEL",
    "REFERENCE_ROWS",
    "METRIC_COLUMNS",
    "render_markdown",
    "render_csv",
    "render_json",
    "render_sweep_markdown",
]

REFERENCE_LABEL = "reference (LLM-based study, not reproduced)"

# (pricing variance, capital efficiency, interpretation error,
#  coordination rounds, human intervention) per configuration.
REFERENCE_ROWS: dict[str, tuple[float, float, float, Optional[float], float]] = {
    "Rule-Based": (1.00, 0.74, 0.19, None, 0.42),
    "Single-Agent": (0.82, 0.79, 0.14, 11.2, 0.31),
    "Multi-Agent": (0.63, 0.83, 0.10, 6.8, 0.18),
    "No-Governance": (0.72, 0.81, 0.16, 7.1, 0.27),
}

METRIC_COLUMNS = (
    ("pricing_variance", "Pricing Var."),
    ("capital_efficiency", "Capital Eff."),
    ("interpretation_error", "Interp. Error"),
    ("coordination_rounds", "Coord. Rounds"),
    ("human_intervention", "Human Interv."),
)


def _cell(value: Optional[float], digits: int = 2) -> str:
    return "--" if value is None else f"{value:.{digits}f}"


def render_markdown(report: Mapping[str, Any]) -> str:
    """Markdown report: measured table, reference table, validation."""
    lines: list[str] = []
    cfg = report["config"]
    lines.append("# Benchmark report")
    lines.append("")
    lines.append(
        f"{cfg['generator']['n_treaties']} treaties, "
        f"{len(cfg['seeds'])} seeds {cfg['seeds']}, "
        f"correlation preset {cfg['correlation_preset']}, "
        f"solvency threshold {cfg['solvency_threshold']:.2f}. "
        "Pricing variance is normalised so the rule-based pipeline "
        "reads 1.00. Lower is better except capital efficiency.")
    lines.append("")
    lines.append("## Measured")
    lines.append("")
    header = ["Configuration"] + [label for _, label in METRIC_COLUMNS]
    header += ["Norm Violations", "Episodes"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for row in report["rows"]:
        cells = [row["display_name"]]
        cells.append(_cell(row["pricing_variance"]))
        cells.append(_cell(row["capital_efficiency"]))
        cells.append(_cell(row["interpretation_error"]))
        cells.append(_cell(row["coordination_rounds"], digits=1))
        cells.append(_cell(row["human_intervention"]))
        cells.append(str(row["norm_violations"]))
        cells.append(str(row["episodes"]))
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    lines.append(f"## {REFERENCE_LABEL[0].upper()}{REFERENCE_LABEL[1:]}")
    lines.append("")
    header = ["Configuration"] + [label for _, label in METRIC_COLUMNS]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for name, values in REFERENCE_ROWS.items():
        pv, ce, ie, rounds, hi = values
        cells = [name, _cell(pv), _cell(ce), _cell(ie),
                 _cell(rounds, digits=1), _cell(hi)]
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    validation = report.get("validation")
    if validation is not None and validation["reports"]:
        lines.append("## Generator validation")
        lines.append("")
        lines.append("| Generator seed | Statistic | Value | Band | OK |")
        lines.append("|---|---|---|---|---|")
        for rep in validation["reports"]:
            for stat in rep["statistics"]:
                low, high = stat["band"]
                lines.append(
                    f"| {rep['seed']} | {stat['name']} | "
                    f"{stat['value']:.4f} | [{low:.2f}, {high:.2f}] | "
                    f"{'yes' if stat['ok'] else 'NO'} |")
        verdict = "pass" if validation["all_ok"] else "FAIL"
        lines.append("")
        lines.append(f"All statistics in band: {verdict}.")
        lines.append("")
    lines.append("## Determinism")
    lines.append("")
    lines.append(f"Combined audit trace digest: `{report['trace_digest']}`.")
    lines.append("")
    return "\n".join(lines)


def render_csv(report: Mapping[str, Any]) -> str:
    """Flat CSV: measured rows plus reference rows, tagged by source."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["source", "configuration"]
                    + [key for key, _ in METRIC_COLUMNS]
                    + ["norm_violations", "episodes"])
    for row in report["rows"]:
        writer.writerow(
            ["measured", row["display_name"]]
            + [("" if row[key] is None else repr(row[key]))
               for key, _ in METRIC_COLUMNS]
            + [row["norm_violations"], row["episodes"]])
    for name, values in REFERENCE_ROWS.items():
        writer.writerow(["reference", name]
                        + [("" if v is None else repr(v)) for v in values]
                        + ["", ""])
    return buf.getvalue()


def render_json(report: Mapping[str, Any]) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def render_sweep_markdown(sweep: Mapping[str, Any]) -> str:
    """Markdown sensitivity report: per-combination ordering checks."""
    lines: list[str] = []
    lines.append("# Sensitivity sweep")
    lines.append("")
    base = sweep["base"]
    lines.append(
        "Profile orderings per metric, against the base combination "
        f"(preset {base['correlation_preset']}, threshold "
        f"{base['solvency_threshold']:.2f}). A combination preserves a "
        "metric when its profile ordering matches the base run's.")
    lines.append("")
    metrics = list(sweep["metrics"])
    header = ["Preset", "Threshold"] + metrics + ["All preserved"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for combo in sweep["combos"]:
        preserved = combo["preserved"]
        cells = [combo["correlation_preset"],
                 f"{combo['solvency_threshold']:.2f}"]
        if combo["is_base"]:
            cells += ["base"] * len(metrics) + ["base"]
        else:
            cells += ["yes" if preserved[m] else "NO" for m in metrics]
            cells.append("yes" if all(preserved[m] for m in metrics)
                         else "NO")
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    lines.append("## Base orderings (ascending metric value)")
    lines.append("")
    for metric in metrics:
        order = " < ".join(sweep["base_orderings"][metric])
        lines.append(f"- {metric}: {order}")
    lines.append("")
    overall = all(sweep["all_preserved"][m] for m in metrics)
    lines.append(f"Orderings preserved across every combination: "
                 f"{'yes' if overall else 'NO'}.")
    lines.append("")
    return "\n".join(lines)
