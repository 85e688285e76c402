"""Command-line client for the simulation service.

Every subcommand speaks HTTP to the FastAPI app. By default the app
runs in-process over an ASGI transport (no socket, fully deterministic
batch runs); ``--server URL`` targets a remote instance instead, with
identical payloads either way.

Config files are JSON in the :class:`cedesim.bench.RunConfig` layout;
``generate`` also accepts a bare generator-knobs object. Exit codes:
0 success, 2 validation statistics out of band, 1 any other failure.
"""
from __future__ import annotations

import asyncio
import csv
import io
import json
from pathlib import Path
from typing import Any, Mapping, Optional

import click
import httpx

from .bench.report import (render_csv, render_json, render_markdown,
                           render_sweep_markdown)

__all__ = ["main"]

PROFILE_CHOICES = ("rule", "single", "multi", "nogov")
FORMAT_CHOICES = ("md", "csv", "json")


def _call(server: Optional[str], method: str, path: str,
          payload: Optional[dict[str, Any]] = None) -> dict[str, Any]:
    """POST/GET against the remote server or the in-process app."""
    try:
        if server is not None:
            response = httpx.request(method, server.rstrip("/") + path,
                                     json=payload, timeout=None)
        else:
            from .service import create_app

            async def _go() -> httpx.Response:
                transport = httpx.ASGITransport(app=create_app())
                async with httpx.AsyncClient(
                        transport=transport,
                        base_url="http://cedesim.internal",
                        timeout=None) as client:
                    return await client.request(method, path, json=payload)

            response = asyncio.run(_go())
    except httpx.HTTPError as exc:
        raise click.ClickException(f"transport failure: {exc}") from exc
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise click.ClickException(
            f"{path} failed ({response.status_code}): {detail}")
    return response.json()


def _load_config(path: Optional[str]) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, ValueError) as exc:
        raise click.ClickException(f"cannot read config {path}: {exc}")
    if not isinstance(data, dict):
        raise click.ClickException(f"config {path} must be a JSON object")
    return data


def _write(out_dir: Optional[str], name: str, text: str) -> Optional[Path]:
    if out_dir is None:
        return None
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / name
    path.write_text(text, encoding="utf-8")
    click.echo(f"wrote {path}")
    return path


_CONFIG_OPT = click.option(
    "--config", "config_path", metavar="PATH", default=None,
    help="JSON run config (benchmark layout).")
_SEED_OPT = click.option("--seed", type=click.IntRange(min=0), default=None,
                         help="Seed override (see subcommand help).")
_OUT_OPT = click.option("--out", "out_dir", metavar="DIR", default=None,
                        help="Directory for written artefacts.")
_FORMAT_OPT = click.option(
    "--format", "fmt", type=click.Choice(FORMAT_CHOICES), default="md",
    show_default=True, help="Report format.")


@click.group()
@click.option("--server", metavar="URL", default=None,
              help="Remote service URL; default runs the service "
                   "in-process.")
@click.version_option()
@click.pass_context
def main(ctx: click.Context, server: Optional[str]) -> None:
    """Deterministic reinsurance treaty simulation and benchmarks."""
    ctx.obj = {"server": server}


@main.command()
@_CONFIG_OPT
@_SEED_OPT
@click.option("--n-treaties", type=click.IntRange(min=1), default=None,
              help="Override the number of treaties.")
@_OUT_OPT
@click.pass_context
def generate(ctx: click.Context, config_path: Optional[str],
             seed: Optional[int], n_treaties: Optional[int],
             out_dir: Optional[str]) -> None:
    """Generate a synthetic treaty book (--seed: generator seed).

    Writes portfolio.json when --out is given; always prints a summary.
    """
    payload = {"config": _load_config(config_path), "seed": seed,
               "n_treaties": n_treaties}
    result = _call(ctx.obj["server"], "POST", "/generate", payload)
    click.echo(f"generated {result['n_treaties']} treaties across "
               f"{len(result['zones'])} zones")
    _write(out_dir, "portfolio.json",
           json.dumps(result["portfolio"], sort_keys=True, indent=2) + "\n")


def _validation_csv(reports: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["seed", "statistic", "value", "low", "high", "ok"])
    for rep in reports:
        for stat in rep["statistics"]:
            low, high = stat["band"]
            writer.writerow([rep["seed"], stat["name"], repr(stat["value"]),
                             low, high, stat["ok"]])
    return buf.getvalue()


def _validation_markdown(reports: list[dict[str, Any]],
                         all_ok: bool) -> str:
    lines = ["# Generator validation", "",
             "| Generator seed | Statistic | Value | Band | OK |",
             "|---|---|---|---|---|"]
    for rep in reports:
        for stat in rep["statistics"]:
            low, high = stat["band"]
            lines.append(f"| {rep['seed']} | {stat['name']} | "
                         f"{stat['value']:.4f} | [{low:.2f}, {high:.2f}] | "
                         f"{'yes' if stat['ok'] else 'NO'} |")
    lines += ["", f"All statistics in band: {'pass' if all_ok else 'FAIL'}.",
              ""]
    return "\n".join(lines)


@main.command()
@_CONFIG_OPT
@_SEED_OPT
@_OUT_OPT
@_FORMAT_OPT
@click.pass_context
def validate(ctx: click.Context, config_path: Optional[str],
             seed: Optional[int], out_dir: Optional[str], fmt: str) -> None:
    """Check generator calibration bands (--seed: single generator seed).

    Exits 2 when any statistic falls outside its band.
    """
    payload = {"config": _load_config(config_path), "seed": seed}
    result = _call(ctx.obj["server"], "POST", "/validate", payload)
    reports, all_ok = result["reports"], result["all_ok"]
    renderers = {
        "md": lambda: _validation_markdown(reports, all_ok),
        "csv": lambda: _validation_csv(reports),
        "json": lambda: json.dumps(result, sort_keys=True, indent=2) + "\n",
    }
    text = renderers[fmt]()
    click.echo(text, nl=False)
    _write(out_dir, f"validation.{fmt}", text)
    if not all_ok:
        ctx.exit(2)


@main.command()
@_CONFIG_OPT
@_SEED_OPT
@click.option("--profile", type=click.Choice(PROFILE_CHOICES),
              default="multi", show_default=True,
              help="Agent configuration to run.")
@click.option("--treaty-id", default=None,
              help="Treaty to price; default: first in the book.")
@_OUT_OPT
@_FORMAT_OPT
@click.pass_context
def episode(ctx: click.Context, config_path: Optional[str],
            seed: Optional[int], profile: str, treaty_id: Optional[str],
            out_dir: Optional[str], fmt: str) -> None:
    """Run one pricing episode (--seed: episode seed).

    Writes episode.json with the full hash-chained trace when --out is
    given.
    """
    payload = {"config": _load_config(config_path), "seed": seed,
               "profile": profile, "treaty_id": treaty_id,
               "include_trace": out_dir is not None}
    result = _call(ctx.obj["server"], "POST", "/episode", payload)
    if fmt == "json":
        shown = {k: v for k, v in result.items() if k != "trace"}
        click.echo(json.dumps(shown, sort_keys=True, indent=2))
    else:
        rate = result["recommended_rate"]
        click.echo(f"treaty {result['treaty_id']} profile "
                   f"{result['profile']} seed {result['seed']}")
        click.echo(f"  accepted: {result['accepted']}  escalated: "
                   f"{result['escalated']}"
                   + (f" ({result['escalation_reason']})"
                      if result["escalation_reason"] else ""))
        click.echo(f"  rounds: {result['rounds']}  messages: "
                   f"{result['message_count']}")
        click.echo("  recommended rate: "
                   + ("--" if rate is None else f"{rate:.4f}"))
        click.echo(f"  premium: {result['premium']:.2f}")
        click.echo(f"  audit head: {result['audit_head']}")
    _write(out_dir, "episode.json",
           json.dumps(result, sort_keys=True, indent=2) + "\n")


@main.command()
@_CONFIG_OPT
@_SEED_OPT
@_OUT_OPT
@_FORMAT_OPT
@click.option("--skip-validation", is_flag=True, default=False,
              help="Skip the generator calibration sub-report.")
@click.pass_context
def bench(ctx: click.Context, config_path: Optional[str],
          seed: Optional[int], out_dir: Optional[str], fmt: str,
          skip_validation: bool) -> None:
    """Run the four-profile benchmark (--seed: hazard world seed).

    Prints the report in the chosen format; --out also writes
    benchmark.<format>.
    """
    data = _load_config(config_path)
    if seed is not None:
        data["sim_seed"] = seed
    payload = {"config": data, "validate_generator": not skip_validation}
    result = _call(ctx.obj["server"], "POST", "/bench", payload)
    report = result["report"]
    renderers = {"md": render_markdown, "csv": render_csv,
                 "json": render_json}
    text = renderers[fmt](report)
    click.echo(text, nl=False)
    _write(out_dir, f"benchmark.{fmt}", text)


def _sweep_csv(sweep_report: Mapping[str, Any]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["correlation_preset", "solvency_threshold", "is_base"]
                    + list(sweep_report["metrics"]))
    for combo in sweep_report["combos"]:
        writer.writerow(
            [combo["correlation_preset"], combo["solvency_threshold"],
             combo["is_base"]]
            + [combo["preserved"][m] for m in sweep_report["metrics"]])
    return buf.getvalue()


@main.command()
@_CONFIG_OPT
@_SEED_OPT
@_OUT_OPT
@_FORMAT_OPT
@click.pass_context
def sweep(ctx: click.Context, config_path: Optional[str],
          seed: Optional[int], out_dir: Optional[str], fmt: str) -> None:
    """Sensitivity sweep: 3 correlation presets x threshold +-10%.

    (--seed: hazard world seed.)
    """
    data = _load_config(config_path)
    if seed is not None:
        data["sim_seed"] = seed
    result = _call(ctx.obj["server"], "POST", "/sweep", {"config": data})
    report = result["report"]
    renderers = {"md": render_sweep_markdown, "csv": _sweep_csv,
                 "json": render_json}
    text = renderers[fmt](report)
    click.echo(text, nl=False)
    _write(out_dir, f"sweep.{fmt}", text)


if __name__ == "__main__":
    main()
