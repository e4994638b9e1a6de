from functools import lru_cache
from typing import Optional
import logging
import os

from pydantic import BaseModel, Field, field_validator
from dotenv import load_dotenv


# Eagerly load .env so os.environ has all keys even without pydantic-settings
load_dotenv(dotenv_path=os.path.join(os.getcwd(), ".env"), override=False)


def _env(name: str, default: Optional[str] = None) -> Optional[str]:
    return os.environ.get(f"FRAKGEO_{name}", default)


class Settings(BaseModel):
    # Core
    log_level: str = Field(default_factory=lambda: _env("LOG_LEVEL", "WARNING"))

    # Numerics
    grid_scheme: str = Field(default_factory=lambda: _env("GRID_SCHEME", "spline"))
    regularity_tol: float = Field(default_factory=lambda: float(_env("REGULARITY_TOL", "1e-8")))
    boundary_margin: int = Field(default_factory=lambda: int(_env("BOUNDARY_MARGIN", "2")))

    # Probe vectors for the θ(X,Y) = g(JX,Y) identity
    probe_seed: int = Field(default_factory=lambda: int(_env("PROBE_SEED", "42")))
    probe_pairs: int = Field(default_factory=lambda: int(_env("PROBE_PAIRS", "100")))
    probe_nodes: int = Field(default_factory=lambda: int(_env("PROBE_NODES", "16")))

    # Default tolerances, overridable per job
    symbolic_tol: float = Field(default_factory=lambda: float(_env("SYMBOLIC_TOL", "1e-10")))
    grid_tol: float = Field(default_factory=lambda: float(_env("GRID_TOL", "1e-4")))
    fractional_tol: float = Field(default_factory=lambda: float(_env("FRACTIONAL_TOL", "5e-3")))

    @field_validator("grid_scheme")
    def validate_grid_scheme(cls, v):
        allowed = {"spline", "l1"}
        if v not in allowed:
            raise ValueError(f"FRAKGEO_GRID_SCHEME must be one of {allowed}")
        return v

    @field_validator("log_level")
    def validate_log_level(cls, v):
        v = v.upper()
        if not isinstance(logging.getLevelName(v), int):
            raise ValueError(f"FRAKGEO_LOG_LEVEL is not a logging level: {v}")
        return v

    @field_validator("regularity_tol", "symbolic_tol", "grid_tol", "fractional_tol")
    def require_positive_tolerance(cls, v, info):
        if v <= 0:
            field_name = info.field_name if hasattr(info, "field_name") else "value"
            raise ValueError(f"{field_name.upper()} must be positive")
        return v

    @field_validator("boundary_margin", "probe_pairs", "probe_nodes")
    def require_non_negative(cls, v, info):
        if v < 0:
            raise ValueError(f"{info.field_name.upper()} must be non-negative")
        return v


@lru_cache()
def get_settings() -> Settings:
    # Construct from environment to avoid dependency on pydantic-settings
    return Settings()
