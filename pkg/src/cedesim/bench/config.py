"""Benchmark run configuration.

A :class:`RunConfig` pins everything a benchmark run depends on: the
portfolio generator knobs, the hazard world (reference seed, years,
correlation preset), the regulatory parameters, the per-profile parsing
noise, and the episode seeds. Two runs with equal configs produce
byte-identical reports.

Seed semantics: ``seeds`` are *episode* seeds — the portfolio and hazard
world stay fixed while parsing noise is redrawn per seed, so per-treaty
across-seed dispersion of the recommended rate is well defined.
``sim_seed`` pins the hazard world. Validation statistics instead vary
the *generator* seed over the same ``seeds`` (one synthetic book per
seed) against the fixed hazard world.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping, Optional

from ..core.types import ScalarWeights
from ..genesis import GeneratorConfig, NoiseModel
from ..kernel import Profile, default_noise
from ..perils import CorrelationSpec

__all__ = ["BenchConfigError", "RunConfig", "PROFILE_ORDER"]

# Canonical row order for every report.
PROFILE_ORDER: tuple[Profile, ...] = (
    Profile.RULE_BASED,
    Profile.SINGLE_AGENT,
    Profile.MULTI_AGENT,
    Profile.NO_GOVERNANCE,
)


class BenchConfigError(ValueError):
    """Benchmark configuration outside its invariants."""


def _default_noise() -> dict[str, NoiseModel]:
    return {p.value: default_noise(p) for p in PROFILE_ORDER}


@dataclass(frozen=True)
class RunConfig:
    """Full specification of one benchmark run."""

    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    seeds: tuple[int, ...] = (1, 2, 3)
    sim_seed: int = 7
    n_years: int = 2000
    correlation_preset: str = "Medium"
    solvency_threshold: float = 1.0
    max_rounds: int = 20
    own_funds: int = 13_500_000_000
    expense_ratio: float = 0.0
    weights: ScalarWeights = field(default_factory=ScalarWeights)
    noise: Mapping[str, NoiseModel] = field(default_factory=_default_noise)
    out_dir: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.seeds:
            raise BenchConfigError("at least one seed required")
        if len(set(self.seeds)) != len(self.seeds):
            raise BenchConfigError("seeds must be distinct")
        for s in self.seeds:
            if not isinstance(s, int) or s < 0:
                raise BenchConfigError(f"seeds must be non-negative ints: {s!r}")
        if self.solvency_threshold <= 0:
            raise BenchConfigError("solvency_threshold must be positive")
        if self.max_rounds < 1:
            raise BenchConfigError("max_rounds must be >= 1")
        if self.n_years < 1:
            raise BenchConfigError("n_years must be >= 1")
        if self.own_funds <= 0:
            raise BenchConfigError("own_funds must be positive")
        if not 0.0 <= self.expense_ratio < 1.0:
            raise BenchConfigError("expense_ratio must lie in [0, 1)")
        # Fails fast on unknown preset names.
        CorrelationSpec.from_preset(self.correlation_preset)
        known = {p.value for p in Profile}
        unknown = set(self.noise) - known
        if unknown:
            raise BenchConfigError(f"unknown profiles in noise map: {sorted(unknown)}")

    @property
    def n_treaties(self) -> int:
        return self.generator.n_treaties

    def noise_for(self, profile: Profile) -> NoiseModel:
        model = self.noise.get(profile.value)
        return model if model is not None else default_noise(profile)

    def to_dict(self) -> dict[str, Any]:
        return {
            "generator": self.generator.to_dict(),
            "seeds": list(self.seeds),
            "sim_seed": self.sim_seed,
            "n_years": self.n_years,
            "correlation_preset": self.correlation_preset,
            "solvency_threshold": self.solvency_threshold,
            "max_rounds": self.max_rounds,
            "own_funds": self.own_funds,
            "expense_ratio": self.expense_ratio,
            "weights": {"alpha": self.weights.alpha, "beta": self.weights.beta,
                        "gamma": self.weights.gamma, "delta": self.weights.delta},
            "noise": {
                name: {
                    "clause_error_rate": m.clause_error_rate,
                    "ambiguous_exclusion_error_rate":
                        m.ambiguous_exclusion_error_rate,
                    "threshold_shift": m.threshold_shift,
                }
                for name, m in sorted(self.noise.items())
            },
            "out_dir": self.out_dir,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)} | {"n_treaties", "generator_seed"}
        unknown = set(data) - known
        if unknown:
            raise BenchConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        generator = GeneratorConfig.from_dict(data.get("generator", {}))
        # Top-level conveniences override the nested generator block.
        if "n_treaties" in data:
            generator = replace(generator, n_treaties=int(data["n_treaties"]))
        if "generator_seed" in data:
            generator = replace(generator, seed=int(data["generator_seed"]))
        kwargs["generator"] = generator
        if "seeds" in data:
            kwargs["seeds"] = tuple(int(s) for s in data["seeds"])
        for name in ("sim_seed", "n_years", "max_rounds", "own_funds"):
            if name in data:
                kwargs[name] = int(data[name])
        for name in ("solvency_threshold", "expense_ratio"):
            if name in data:
                kwargs[name] = float(data[name])
        if "correlation_preset" in data:
            kwargs["correlation_preset"] = str(data["correlation_preset"])
        if "weights" in data:
            kwargs["weights"] = ScalarWeights(**data["weights"])
        if "noise" in data:
            kwargs["noise"] = {name: NoiseModel(**spec)
                               for name, spec in data["noise"].items()}
        if "out_dir" in data:
            kwargs["out_dir"] = (None if data["out_dir"] is None
                                 else str(data["out_dir"]))
        return cls(**kwargs)
