"""HTTP service exposing generation, validation, episodes, benchmarks.

The app is a thin shell over the library: every endpoint builds the
same objects the Python API exposes and returns their dict forms, so a
remote client and an in-process client see identical payloads.
"""
from __future__ import annotations

from typing import Any, NoReturn, Optional

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..bench import (RunConfig, build_context, run_benchmark, run_sweep,
                     run_validation)
from ..genesis import generate_portfolio
from ..kernel import Profile, action_to_dict, run_episode
from .schemas import (BenchRequest, BenchResponse, EpisodeRequest,
                      EpisodeResponse, GenerateRequest, GenerateResponse,
                      HealthResponse, SweepRequest, SweepResponse,
                      ValidateRequest, ValidateResponse)

__all__ = ["create_app", "resolve_profile", "PROFILE_ALIASES"]

PROFILE_ALIASES: dict[str, Profile] = {
    "rule": Profile.RULE_BASED,
    "single": Profile.SINGLE_AGENT,
    "multi": Profile.MULTI_AGENT,
    "nogov": Profile.NO_GOVERNANCE,
    **{p.value: p for p in Profile},
}


def resolve_profile(name: str) -> Profile:
    try:
        return PROFILE_ALIASES[name]
    except KeyError:
        raise ValueError(
            f"unknown profile {name!r}; expected one of "
            f"{sorted(PROFILE_ALIASES)}") from None


def _bad_request(exc: Exception) -> NoReturn:
    raise HTTPException(status_code=400, detail=str(exc)) from exc


def _run_config(data: dict[str, Any],
                seed: Optional[int] = None) -> RunConfig:
    try:
        cfg = RunConfig.from_dict(data)
        if seed is not None:
            from dataclasses import replace
            cfg = replace(cfg, seeds=(seed,))
        return cfg
    except (ValueError, TypeError) as exc:
        _bad_request(exc)


def create_app() -> FastAPI:
    app = FastAPI(title="cedesim", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/generate", response_model=GenerateResponse)
    def generate(req: GenerateRequest) -> GenerateResponse:
        data = dict(req.config)
        # Accept either a full run config or bare generator knobs.
        run_level_keys = {"generator", "generator_seed", "seeds", "sim_seed",
                          "n_years", "correlation_preset",
                          "solvency_threshold", "max_rounds", "own_funds",
                          "expense_ratio", "weights", "noise", "out_dir"}
        try:
            from dataclasses import replace

            from ..genesis import GeneratorConfig
            if run_level_keys & set(data):
                generator = RunConfig.from_dict(data).generator
            else:
                generator = GeneratorConfig.from_dict(data)
            if req.seed is not None:
                generator = replace(generator, seed=req.seed)
            if req.n_treaties is not None:
                generator = replace(generator, n_treaties=req.n_treaties)
            portfolio = generate_portfolio(generator)
        except (ValueError, TypeError) as exc:
            _bad_request(exc)
        return GenerateResponse(
            n_treaties=len(portfolio.treaties),
            zones=list(portfolio.zones),
            portfolio=portfolio.to_dict(),
        )

    @app.post("/validate", response_model=ValidateResponse)
    def validate(req: ValidateRequest) -> ValidateResponse:
        cfg = _run_config(req.config, seed=req.seed)
        try:
            result = run_validation(cfg)
        except (ValueError, TypeError) as exc:
            _bad_request(exc)
        return ValidateResponse(all_ok=result["all_ok"],
                                reports=result["reports"])

    @app.post("/episode", response_model=EpisodeResponse)
    def episode(req: EpisodeRequest) -> EpisodeResponse:
        cfg = _run_config(req.config)
        try:
            profile = resolve_profile(req.profile)
        except ValueError as exc:
            _bad_request(exc)
        portfolio = generate_portfolio(cfg.generator)
        if req.treaty_id is None:
            treaty = portfolio.treaties[0]
        else:
            matches = [t for t in portfolio.treaties
                       if t.id == req.treaty_id]
            if not matches:
                raise HTTPException(
                    status_code=404,
                    detail=f"treaty {req.treaty_id!r} not in generated book")
            treaty = matches[0]
        seed = req.seed if req.seed is not None else cfg.seeds[0]
        context = build_context(cfg, portfolio)
        outcome = run_episode(context, treaty, profile, seed,
                              noise=cfg.noise_for(profile),
                              weights=cfg.weights)
        certificate = (None if outcome.certificate is None
                       else outcome.certificate.to_dict())
        return EpisodeResponse(
            treaty_id=outcome.treaty_id,
            profile=outcome.profile.value,
            seed=outcome.seed,
            accepted=outcome.accepted,
            escalated=outcome.escalated,
            escalation_reason=outcome.escalation_reason,
            rounds=outcome.rounds,
            message_count=outcome.message_count,
            recommended_rate=outcome.recommended_rate,
            premium=outcome.premium,
            action=action_to_dict(outcome.action),
            certificate=certificate,
            audit_head=outcome.audit_head,
            trace=(outcome.audit.to_lines() if req.include_trace else None),
        )

    @app.post("/bench", response_model=BenchResponse)
    def bench(req: BenchRequest) -> BenchResponse:
        cfg = _run_config(req.config)
        try:
            report = run_benchmark(cfg, validate=req.validate_generator)
        except (ValueError, TypeError) as exc:
            _bad_request(exc)
        return BenchResponse(report=report.to_dict())

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest) -> SweepResponse:
        cfg = _run_config(req.config)
        try:
            report = run_sweep(cfg)
        except (ValueError, TypeError) as exc:
            _bad_request(exc)
        return SweepResponse(report=report.to_dict())

    return app
