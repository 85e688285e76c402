"""Request/response models for the HTTP service.

Requests carry the same JSON config dicts the library accepts
(:class:`cedesim.bench.RunConfig` / generator knobs), plus per-call
conveniences such as a seed override. Responses are JSON-stable: the
benchmark report dict embedded in :class:`BenchResponse` renders to
byte-identical markdown/CSV via :mod:`cedesim.bench.report` on either
side of the wire.
"""
from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

__all__ = [
    "GenerateRequest", "GenerateResponse",
    "ValidateRequest", "ValidateResponse",
    "EpisodeRequest", "EpisodeResponse",
    "BenchRequest", "BenchResponse",
    "SweepRequest", "SweepResponse",
    "HealthResponse",
]


class _Request(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GenerateRequest(_Request):
    config: dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    n_treaties: Optional[int] = None


class GenerateResponse(BaseModel):
    n_treaties: int
    zones: list[str]
    portfolio: dict[str, Any]


class ValidateRequest(_Request):
    config: dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None  # validate this single generator seed


class ValidateResponse(BaseModel):
    all_ok: bool
    reports: list[dict[str, Any]]


class EpisodeRequest(_Request):
    config: dict[str, Any] = Field(default_factory=dict)
    treaty_id: Optional[str] = None  # default: first treaty in the book
    profile: str = "multi"
    seed: Optional[int] = None  # default: first configured seed
    include_trace: bool = False


class EpisodeResponse(BaseModel):
    treaty_id: str
    profile: str
    seed: int
    accepted: bool
    escalated: bool
    escalation_reason: Optional[str]
    rounds: Optional[int]
    message_count: int
    recommended_rate: Optional[float]
    premium: float
    action: dict[str, Any]
    certificate: Optional[dict[str, Any]]
    audit_head: str
    trace: Optional[list[str]] = None


class BenchRequest(_Request):
    config: dict[str, Any] = Field(default_factory=dict)
    validate_generator: bool = True


class BenchResponse(BaseModel):
    report: dict[str, Any]


class SweepRequest(_Request):
    config: dict[str, Any] = Field(default_factory=dict)


class SweepResponse(BaseModel):
    report: dict[str, Any]


class HealthResponse(BaseModel):
    status: str
    version: str
