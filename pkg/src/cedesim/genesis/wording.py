"""Treaty wording grammar: renderer, exact parser, noisy parser.

The grammar is a closed clause-template form, one clause per line, with a
fixed section order:

    TREATY <id>
    LINE OF BUSINESS: <name>
    LAYER <n>: <limit> xs <attachment> | REINSTATEMENTS: <count> @ <pct>% PRO RATA
    ...                                                   (or REINSTATEMENTS: NIL)
    PERILS COVERED: <peril>, ...
    EXCLUSION: <template text>          (zero or more lines)
    HOURS CLAUSE: <n> CONSECUTIVE HOURS (optional line)
    TERRITORY: <zone>, ...

Amounts carry thousands separators.  Every exclusion kind has two template
variants: an explicit-scope text and an elided-scope text whose reading
requires the disambiguation rules (the ambiguous rendering).  The exact
parser knows both variants and is a total inverse of render_wording on
valid structures; the noisy parser corrupts individual clauses with
configured probabilities, the mechanism behind interpretation error.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core.types import (
    EXCLUSION_ORDER,
    ExclusionClause,
    ExclusionKind,
    LineOfBusiness,
    Peril,
    Treaty,
    TreatyLayer,
)

AMOUNT_GRID = 500_000  # currency rounding grid for thresholds

_LOB_TEXT = {
    LineOfBusiness.PROPERTY_CAT: "Property Catastrophe",
    LineOfBusiness.PROPERTY_PER_RISK: "Property Per Risk",
    LineOfBusiness.CASUALTY: "Casualty",
}
_LOB_FROM_TEXT = {v: k for k, v in _LOB_TEXT.items()}

_PERIL_TEXT = {
    Peril.WIND: "Windstorm",
    Peril.FLOOD: "Flood",
    Peril.WILDFIRE: "Wildfire",
}
_PERIL_FROM_TEXT = {v: k for k, v in _PERIL_TEXT.items()}

# (explicit-scope text, elided-scope text) per exclusion kind.  The elided
# variant states the peril by effect rather than by name, which is what the
# noisy parser's elevated misread rate models.
_EXCLUSION_TEXT: dict[ExclusionKind, tuple[str, str]] = {
    ExclusionKind.STORM_SURGE: (
        "LOSS OR DAMAGE CAUSED BY STORM SURGE; INLAND FLOOD NOT ARISING "
        "FROM SEA WATER REMAINS COVERED",
        "LOSS OR DAMAGE CAUSED BY ACTION OF SEA WATER DURING A STORM EVENT",
    ),
    ExclusionKind.FLOOD: (
        "LOSS OR DAMAGE CAUSED BY FLOOD, INCLUDING RIVERINE AND SURFACE "
        "WATER, WHETHER OR NOT WIND-DRIVEN",
        "LOSS OR DAMAGE CAUSED BY RISING WATER",
    ),
    ExclusionKind.WILDFIRE: (
        "LOSS OR DAMAGE CAUSED BY WILDFIRE, INCLUDING EMBER ATTACK AND SMOKE",
        "LOSS OR DAMAGE CAUSED BY FIRE ORIGINATING OUTSIDE INSURED PREMISES",
    ),
    ExclusionKind.TERROR: (
        "LOSS OR DAMAGE CAUSED BY CERTIFIED OR NON-CERTIFIED ACTS OF TERRORISM",
        "LOSS OR DAMAGE CAUSED BY HOSTILE ACTS",
    ),
    ExclusionKind.NUCLEAR: (
        "LOSS OR DAMAGE CAUSED BY NUCLEAR REACTION, RADIATION OR "
        "RADIOACTIVE CONTAMINATION",
        "LOSS OR DAMAGE CAUSED BY ATOMIC PERIL",
    ),
    ExclusionKind.CYBER_SILENT: (
        "LOSS OR DAMAGE CAUSED BY CYBER EVENTS NOT EXPRESSLY AFFIRMED "
        "ELSEWHERE IN THIS CONTRACT",
        "LOSS OR DAMAGE CAUSED BY FAILURE OF COMPUTER SYSTEMS",
    ),
}
_EXCLUSION_FROM_TEXT: dict[str, tuple[ExclusionKind, bool]] = {}
for _kind, (_explicit, _elided) in _EXCLUSION_TEXT.items():
    _EXCLUSION_FROM_TEXT[_explicit] = (_kind, False)
    _EXCLUSION_FROM_TEXT[_elided] = (_kind, True)


class ParseError(Exception):
    """Wording text falls outside the grammar.

    ``line`` is 1-based; ``clause`` names the section being parsed.
    """

    def __init__(self, line: int, clause: str, message: str) -> None:
        super().__init__(f"line {line}, {clause}: {message}")
        self.line = line
        self.clause = clause


def _amount(value: int) -> str:
    return f"{value:,}"


def render_wording(treaty: Treaty) -> str:
    """Render a treaty structure into grammar-conformant wording text."""
    lines = [
        f"TREATY {treaty.id}",
        f"LINE OF BUSINESS: {_LOB_TEXT[treaty.line_of_business]}",
    ]
    for i, layer in enumerate(treaty.layers, start=1):
        if layer.reinstatements == 0 and layer.reinstatement_premium_pct == 1.0:
            reinst = "NIL"
        else:
            pct = layer.reinstatement_premium_pct * 100
            reinst = f"{layer.reinstatements} @ {pct:g}% PRO RATA"
        lines.append(
            f"LAYER {i}: {_amount(layer.limit)} xs {_amount(layer.attachment)}"
            f" | REINSTATEMENTS: {reinst}"
        )
    perils = ", ".join(_PERIL_TEXT[p] for p in treaty.sorted_perils())
    lines.append(f"PERILS COVERED: {perils}")
    for clause in treaty.exclusions:
        explicit, elided = _EXCLUSION_TEXT[clause.kind]
        lines.append(f"EXCLUSION: {elided if clause.ambiguous else explicit}")
    if treaty.hours_clause is not None:
        lines.append(f"HOURS CLAUSE: {treaty.hours_clause} CONSECUTIVE HOURS")
    lines.append(f"TERRITORY: {', '.join(treaty.sorted_zones())}")
    return "\n".join(lines) + "\n"


_LAYER_RE = re.compile(
    r"LAYER (\d+): ([\d,]+) xs ([\d,]+) \| REINSTATEMENTS: (.+)$"
)
_REINST_RE = re.compile(r"(\d+) @ ([\d.]+)% PRO RATA$")


def parse_wording_exact(text: str) -> Treaty:
    """Parse grammar-conformant wording back into its treaty structure.

    Total inverse of render_wording, including ambiguous exclusion variants
    (this parser knows the disambiguation rules).  Raises ParseError with
    line and clause position on any text outside the grammar.
    """
    lines = [l for l in text.splitlines()]
    while lines and not lines[-1].strip():
        lines.pop()
    pos = 0

    def need(clause: str) -> str:
        if pos >= len(lines):
            raise ParseError(len(lines) + 1, clause, "unexpected end of wording")
        return lines[pos]

    line = need("treaty header")
    if not line.startswith("TREATY ") or not line[7:].strip():
        raise ParseError(1, "treaty header", f"expected 'TREATY <id>', got {line!r}")
    treaty_id = line[7:].strip()
    pos += 1

    line = need("line of business")
    prefix = "LINE OF BUSINESS: "
    if not line.startswith(prefix):
        raise ParseError(pos + 1, "line of business", f"got {line!r}")
    lob_text = line[len(prefix):]
    if lob_text not in _LOB_FROM_TEXT:
        raise ParseError(pos + 1, "line of business", f"unknown {lob_text!r}")
    lob = _LOB_FROM_TEXT[lob_text]
    pos += 1

    layers: list[TreatyLayer] = []
    while pos < len(lines) and lines[pos].startswith("LAYER "):
        m = _LAYER_RE.match(lines[pos])
        if not m:
            raise ParseError(pos + 1, "layer", f"malformed layer line {lines[pos]!r}")
        index, limit_s, attach_s, reinst_s = m.groups()
        if int(index) != len(layers) + 1:
            raise ParseError(pos + 1, "layer",
                             f"expected layer {len(layers) + 1}, got {index}")
        if reinst_s == "NIL":
            count, pct = 0, 1.0
        else:
            rm = _REINST_RE.match(reinst_s)
            if not rm:
                raise ParseError(pos + 1, "layer",
                                 f"malformed reinstatements {reinst_s!r}")
            count = int(rm.group(1))
            pct = float(rm.group(2)) / 100.0
        layers.append(TreatyLayer(
            attachment=int(attach_s.replace(",", "")),
            limit=int(limit_s.replace(",", "")),
            reinstatements=count,
            reinstatement_premium_pct=pct,
        ))
        pos += 1
    if not layers:
        raise ParseError(pos + 1, "layer", "at least one layer required")

    line = need("perils")
    prefix = "PERILS COVERED: "
    if not line.startswith(prefix):
        raise ParseError(pos + 1, "perils", f"got {line!r}")
    perils: set[Peril] = set()
    for name in line[len(prefix):].split(", "):
        if name not in _PERIL_FROM_TEXT:
            raise ParseError(pos + 1, "perils", f"unknown peril {name!r}")
        perils.add(_PERIL_FROM_TEXT[name])
    pos += 1

    exclusions: list[ExclusionClause] = []
    while pos < len(lines) and lines[pos].startswith("EXCLUSION: "):
        body = lines[pos][len("EXCLUSION: "):]
        if body not in _EXCLUSION_FROM_TEXT:
            raise ParseError(pos + 1, "exclusion", f"unknown clause {body!r}")
        kind, ambiguous = _EXCLUSION_FROM_TEXT[body]
        exclusions.append(ExclusionClause(kind=kind, ambiguous=ambiguous))
        pos += 1

    hours: Optional[int] = None
    if pos < len(lines) and lines[pos].startswith("HOURS CLAUSE: "):
        m = re.match(r"HOURS CLAUSE: (\d+) CONSECUTIVE HOURS$", lines[pos])
        if not m:
            raise ParseError(pos + 1, "hours clause", f"got {lines[pos]!r}")
        hours = int(m.group(1))
        pos += 1

    line = need("territory")
    prefix = "TERRITORY: "
    if not line.startswith(prefix):
        raise ParseError(pos + 1, "territory", f"got {line!r}")
    zones = frozenset(line[len(prefix):].split(", "))
    pos += 1

    if pos != len(lines):
        raise ParseError(pos + 1, "end", f"trailing content {lines[pos]!r}")

    try:
        return Treaty(
            id=treaty_id,
            line_of_business=lob,
            layers=tuple(layers),
            perils=frozenset(perils),
            exclusions=tuple(exclusions),
            zones=zones,
            hours_clause=hours,
            wording=text,
        )
    except ValueError as exc:
        raise ParseError(pos, "structure", str(exc)) from exc


# ---------------------------------------------------------------------------
# Noisy parsing.


@dataclass(frozen=True)
class NoiseModel:
    """Per-clause misparse probabilities for the noisy interpreter.

    ``ambiguous_exclusion_error_rate`` replaces (not multiplies) the base
    rate on exclusion clauses rendered ambiguously; ``threshold_shift`` is
    the relative size of layer threshold misreads.
    """

    clause_error_rate: float = 0.0
    ambiguous_exclusion_error_rate: float = 0.0
    threshold_shift: float = 0.10

    def __post_init__(self) -> None:
        for name in ("clause_error_rate", "ambiguous_exclusion_error_rate"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} outside [0,1]: {p}")
        if not 0.0 < self.threshold_shift < 1.0:
            raise ValueError("threshold_shift must lie in (0,1)")


_PERIL_CYCLE = {Peril.WIND: Peril.FLOOD, Peril.FLOOD: Peril.WILDFIRE,
                Peril.WILDFIRE: Peril.WIND}


def _shrink(value: int, shift: float) -> int:
    """Scale a threshold down and snap to grid, guaranteeing a change."""
    shrunk = int(round(value * (1.0 - shift) / AMOUNT_GRID)) * AMOUNT_GRID
    if shrunk >= value:
        shrunk = value - AMOUNT_GRID
    return max(shrunk, AMOUNT_GRID)


def _corrupt_layer(layer: TreatyLayer, first: bool, shift: float,
                   rng: np.random.Generator) -> TreatyLayer:
    # Only the bottom layer's attachment may move (downward) without
    # breaking layer ordering; other layers take the hit on their limit.
    fields = {}
    if first and layer.attachment > 0 and rng.random() < 0.5:
        fields["attachment"] = _shrink(layer.attachment, shift)
    else:
        fields["limit"] = _shrink(layer.limit, shift)
    return TreatyLayer(
        attachment=fields.get("attachment", layer.attachment),
        limit=fields.get("limit", layer.limit),
        reinstatements=layer.reinstatements,
        reinstatement_premium_pct=layer.reinstatement_premium_pct,
    )


def _neighbor_zone(zone: str) -> str:
    m = re.match(r"([A-Za-z]+)(\d+)$", zone)
    if not m:
        return zone + "X"
    head, num = m.group(1), int(m.group(2))
    return f"{head}{(num % 99) + 1:02d}"


def parse_wording_noisy(text: str, noise: NoiseModel,
                        rng: np.random.Generator) -> Treaty:
    """Parse wording with clause-level misreads.

    Each clause is independently corrupted with its configured probability:
    layer thresholds shift, perils drop or swap, exclusion scopes flip
    between StormSurge and Flood (other kinds drop), hours clauses move or
    drop, territory zones drop or swap.  Every corruption changes exactly
    one clause of the structure.  Deterministic given the rng stream; all
    probabilities zero reproduces the exact parse.
    """
    truth = parse_wording_exact(text)

    layers = list(truth.layers)
    for i, layer in enumerate(layers):
        if rng.random() < noise.clause_error_rate:
            layers[i] = _corrupt_layer(layer, i == 0, noise.threshold_shift, rng)

    perils = set(truth.perils)
    if rng.random() < noise.clause_error_rate:
        ordered = truth.sorted_perils()
        if len(ordered) > 1:
            perils.discard(ordered[int(rng.integers(len(ordered)))])
        else:
            perils = {_PERIL_CYCLE[ordered[0]]}

    exclusions: list[ExclusionClause] = []
    present = truth.excluded_kinds
    for clause in truth.exclusions:
        rate = (noise.ambiguous_exclusion_error_rate if clause.ambiguous
                else noise.clause_error_rate)
        if rng.random() >= rate:
            exclusions.append(clause)
            continue
        flip = {ExclusionKind.STORM_SURGE: ExclusionKind.FLOOD,
                ExclusionKind.FLOOD: ExclusionKind.STORM_SURGE}.get(clause.kind)
        if flip is not None and flip not in present:
            exclusions.append(ExclusionClause(kind=flip,
                                              ambiguous=clause.ambiguous))
        # otherwise: clause dropped

    hours = truth.hours_clause
    if hours is not None and rng.random() < noise.clause_error_rate:
        options = [h for h in (24, 72, 168) if h != hours] + [None]
        hours = options[int(rng.integers(len(options)))]

    zones = set(truth.zones)
    if rng.random() < noise.clause_error_rate:
        ordered_zones = truth.sorted_zones()
        victim = ordered_zones[int(rng.integers(len(ordered_zones)))]
        if len(ordered_zones) > 1:
            zones.discard(victim)
        else:
            zones = {_neighbor_zone(victim)}

    return Treaty(
        id=truth.id,
        line_of_business=truth.line_of_business,
        layers=tuple(layers),
        perils=frozenset(perils),
        exclusions=tuple(exclusions),
        zones=frozenset(zones),
        hours_clause=hours,
        wording=text,
    )


# ---------------------------------------------------------------------------
# Clause-level comparison, the measurement behind interpretation error.


def clause_count(treaty: Treaty) -> int:
    """Number of clause slots: layers, perils, exclusions, hours, territory."""
    return (
        len(treaty.layers)
        + 1  # perils line
        + len(treaty.exclusions)
        + (1 if treaty.hours_clause is not None else 0)
        + 1  # territory line
    )


def clause_diff(truth: Treaty, parsed: Treaty) -> int:
    """Count clause slots where the parsed structure differs from truth.

    Layers compare positionally on terms; exclusions compare as kind sets
    (a scope flip counts once, a drop counts once); the perils, hours, and
    territory lines each count at most once.
    """
    errors = 0
    for i in range(max(len(truth.layers), len(parsed.layers))):
        if i >= len(truth.layers) or i >= len(parsed.layers):
            errors += 1
        elif truth.layers[i] != parsed.layers[i]:
            errors += 1
    if truth.perils != parsed.perils:
        errors += 1
    truth_kinds = truth.excluded_kinds
    parsed_kinds = parsed.excluded_kinds
    errors += max(len(truth_kinds - parsed_kinds), len(parsed_kinds - truth_kinds))
    hours_slot = (truth.hours_clause is not None
                  or parsed.hours_clause is not None)
    if hours_slot and truth.hours_clause != parsed.hours_clause:
        errors += 1
    if truth.zones != parsed.zones:
        errors += 1
    return errors
