"""Run configuration: environment defaults, TOML files and CLI overrides.

Precedence is CLI flag > TOML value > CLARK_* environment / .env default.
"""

import hashlib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import numpy as np
import orjson
import toml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from . import __version__
from .errors import ClarkError, ConfigError
from .profiles import PROFILES, TOLERANCE_PROFILES
from .schemas import RifSpec

load_dotenv()


# ============================================================================
# Environment Defaults
# ============================================================================

class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="CLARK_", extra="ignore")

    out_dir: str = "output"
    nodes: int = 1024
    degree: int = 8
    scan: int = 256
    tol_profile: str = "strict"
    projector: Literal["series", "sampled"] = "series"


def get_settings() -> Settings:
    return Settings()


# ============================================================================
# Run Configuration
# ============================================================================

def _power_of_two(n: int) -> bool:
    return n > 0 and not n & (n - 1)


class RunConfig(BaseModel):
    """Validated parameters of one command invocation."""

    rif: RifSpec
    profile: Optional[str] = Field(default=None, description="Bundled profile the RIF came from")
    alpha: List[float] = Field(description="Alpha angles in radians")
    nodes: int = Field(description="Quadrature nodes N per branch")
    degree: int = Field(ge=1, description="Degree cutoff D")
    grid: Optional[int] = Field(default=None, description="Boundary grid G")
    scan: int = Field(description="Taylor scan grid size")
    tol_profile: str = "strict"
    projector: Literal["series", "sampled"] = "series"
    out: str = "output"
    format: Literal["csv", "json"] = "csv"

    @field_validator("alpha")
    @classmethod
    def _finite_angles(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("at least one alpha angle is required")
        if not all(np.isfinite(a) for a in v):
            raise ValueError("alpha angles must be finite")
        return v

    @field_validator("nodes")
    @classmethod
    def _nodes_ok(cls, v: int) -> int:
        if v < 64 or not _power_of_two(v):
            raise ValueError("nodes must be a power of two >= 64")
        return v

    @field_validator("scan")
    @classmethod
    def _scan_ok(cls, v: int) -> int:
        if v < 16:
            raise ValueError("scan grid must be >= 16")
        return v

    @field_validator("tol_profile")
    @classmethod
    def _known_profile(cls, v: str) -> str:
        if v not in TOLERANCE_PROFILES:
            raise ValueError(f"tolerance profile must be one of {sorted(TOLERANCE_PROFILES)}")
        return v

    @model_validator(mode="after")
    def _grid_ok(self) -> "RunConfig":
        g = self.grid
        if g is not None and (not _power_of_two(g) or g < 2 * self.degree + 2):
            raise ValueError(f"grid must be a power of two >= {2 * self.degree + 2}")
        return self

    def alphas(self) -> List[complex]:
        return [complex(np.exp(1j * a)) for a in self.alpha]


# ============================================================================
# Loading
# ============================================================================

def load_toml(path: str) -> Dict[str, Any]:
    try:
        return toml.load(path)
    except (OSError, toml.TomlDecodeError) as e:
        raise ConfigError(f"could not read config file {path}: {e}") from e


def parse_rif(source: str) -> Dict[str, Any]:
    """RIF from a profile name, an inline JSON document or a JSON file path."""
    if source in PROFILES:
        return PROFILES[source].rif.model_dump()
    text = source
    if not source.lstrip().startswith("{"):
        try:
            text = Path(source).read_text()
        except OSError as e:
            raise ConfigError(f"could not read RIF file {source}: {e}") from e
    try:
        return orjson.loads(text)
    except orjson.JSONDecodeError as e:
        raise ConfigError(f"malformed RIF JSON: {e}") from e


def parse_alpha(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"alpha must be a comma list of angles: {e}") from e


def build_config(
    overrides: Optional[Dict[str, Any]] = None,
    config_path: Optional[str] = None,
    settings: Optional[Settings] = None,
) -> RunConfig:
    """Merge settings, TOML and CLI values, then validate.

    The RIF is also constructed once, so stability failures surface here
    as configuration errors before any computation or output.
    """
    settings = settings or get_settings()
    merged: Dict[str, Any] = {
        "nodes": settings.nodes,
        "degree": settings.degree,
        "scan": settings.scan,
        "tol_profile": settings.tol_profile,
        "projector": settings.projector,
        "out": settings.out_dir,
    }
    if config_path:
        merged.update(load_toml(config_path))
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})

    rif = merged.get("rif")
    if rif is None:
        raise ConfigError("no RIF given (use --rif or a config file)")
    if isinstance(rif, str):
        if rif in PROFILES:
            merged.setdefault("profile", rif)
            if "alpha" not in merged:
                merged["alpha"] = PROFILES[rif].alphas
        merged["rif"] = parse_rif(rif)
    if isinstance(merged.get("alpha"), str):
        merged["alpha"] = parse_alpha(merged["alpha"])
    if isinstance(merged.get("alpha"), (int, float)):
        merged["alpha"] = [float(merged["alpha"])]
    merged.setdefault("alpha", [0.0])

    try:
        cfg = RunConfig(**merged)
    except ValidationError as e:
        raise ConfigError(str(e)) from e

    from .rif import rif_from_spec

    try:
        rif_from_spec(cfg.rif)
    except (ClarkError, ValueError) as e:
        raise ConfigError(f"invalid RIF: {e}") from e
    return cfg


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the canonical JSON of the validated config."""
    payload = orjson.dumps(cfg.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS)
    return hashlib.sha256(payload).hexdigest()


def stamp(cfg: RunConfig) -> Dict[str, str]:
    return {"config_hash": config_hash(cfg), "version": __version__}
