"""HTTP layer: FastAPI app plus request/response schemas."""
from .app import PROFILE_ALIASES, create_app, resolve_profile
from .schemas import (BenchRequest, BenchResponse, EpisodeRequest,
                      EpisodeResponse, GenerateRequest, GenerateResponse,
                      HealthResponse, SweepRequest, SweepResponse,
                      ValidateRequest, ValidateResponse)

__all__ = [
    "PROFILE_ALIASES",
    "create_app",
    "resolve_profile",
    "BenchRequest", "BenchResponse",
    "EpisodeRequest", "EpisodeResponse",
    "GenerateRequest", "GenerateResponse",
    "HealthResponse",
    "SweepRequest", "SweepResponse",
    "ValidateRequest", "ValidateResponse",
]
