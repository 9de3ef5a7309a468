"""Configuration module for the eta-hardy toolkit.

Process-wide defaults come from environment variables (and an optional .env
file) through pydantic-settings sections. A run file (TOML or JSON) describes
one reproducible run and is validated by ``RunConfig``.
"""

import hashlib
import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings

from errors import ConfigError

load_dotenv()


class GeometryConfig(BaseSettings):
    """Root system and group closure settings."""

    closure_cap: int = Field(default=10_000, description="Maximum number of group elements before closure aborts")
    float_tol: float = Field(default=1e-12, description="Tolerance for float-mode root and orthogonality checks")
    key_tol: float = Field(default=1e-9, description="Bucket size for float-mode matrix identity keys")

    class Config:
        env_prefix = "GEOM_"


class GridConfig(BaseSettings):
    """Piecewise-constant function settings."""

    window_half: int = Field(default=8, description="Default window is [-window_half, window_half]^d")
    max_overlay_cells: int = Field(default=4_000_000, description="Upper bound on elementary cells produced by an overlay")

    class Config:
        env_prefix = "GRID_"


class KernelConfig(BaseSettings):
    """Kernel, maximal function and quadrature settings."""

    t_min: float = Field(default=2.0 ** -10, description="Smallest time in the geometric t-grid")
    t_ratio: float = Field(default=2.0, description="Ratio of the geometric t-grid")
    t_max: float = Field(default=2.0 ** 10, description="Largest time in the geometric t-grid")
    local_t_max: float = Field(default=1.0, description="Local range keeps t strictly below this value")
    h: float = Field(default=0.125, description="Lattice spacing of maximal-function evaluation")
    quad_points: int = Field(default=4, description="Gauss-Legendre points per axis per cell")
    quad_subdivisions: int = Field(default=2, description="Per-axis refinement of each cell for Poisson quadrature")
    threads: int = Field(default=1, description="Worker threads for lattice evaluation")

    class Config:
        env_prefix = "KERNEL_"


class AtomsConfig(BaseSettings):
    """Atomic decomposition settings."""

    extra_levels: int = Field(default=2, description="Whitney levels past the payload resolution")
    sqrt_bits: int = Field(default=40, description="Binary precision of dyadic square-root ceilings")
    float_tol: float = Field(default=1e-12, description="Relative tolerance for float-mode atom checks")

    class Config:
        env_prefix = "ATOMS_"


class BmoConfig(BaseSettings):
    """Cube family and BMO norm settings."""

    max_level: int = Field(default=7, description="Finest cube side is 2^-max_level")
    break_point: float = Field(default=1.0, description="Breaking point a of the local norms")
    kappa: float = Field(default=0.0, description="Adjacency slack: dist(Q, wall) <= kappa * l(Q)")
    max_grid_cells: int = Field(default=2 ** 24, description="Raster size limit for family sweeps")

    class Config:
        env_prefix = "BMO_"


class VerifyConfig(BaseSettings):
    """Acceptance suite settings."""

    seed: int = Field(default=20240611, description="Seed of every random family in the suite")
    random_functions: int = Field(default=50, description="Random PCFunctions per identity check")
    random_lists: int = Field(default=100, description="Random atom lists per decomposition check")
    whitney_cubes: int = Field(default=500, description="Random admissible cubes for Whitney counting")
    duality_pairs: int = Field(default=100, description="Random (b, f) pairs per duality configuration")
    band_functions: int = Field(default=50, description="Random chamber functions per equivalence band")

    class Config:
        env_prefix = "VERIFY_"


class AppConfig(BaseSettings):
    """Application configuration."""

    debug: bool = Field(default=False, description="Enable debug mode")
    log_level: str = Field(default="INFO", description="Logging level")
    host: str = Field(default="0.0.0.0", description="API host")
    port: int = Field(default=8000, description="API port")
    log_file: str = Field(default="eta_hardy.log", description="Rotating debug log file")

    class Config:
        env_prefix = "APP_"


class Settings:
    """Main settings class that combines all configurations."""

    def __init__(self):
        self.geometry = GeometryConfig()
        self.grid = GridConfig()
        self.kernel = KernelConfig()
        self.atoms = AtomsConfig()
        self.bmo = BmoConfig()
        self.verify = VerifyConfig()
        self.app = AppConfig()


# Global settings instance
settings = Settings()


def parse_t_grid(text: str) -> "TGrid":
    """Parse ``a:r:b`` into a t-grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"t-grid must look like a:r:b, got {text!r}")
    try:
        t_min, ratio, t_max = (float(p) for p in parts)
    except ValueError as e:
        raise ConfigError(f"t-grid values must be numbers: {e}")
    try:
        return TGrid(t_min=t_min, ratio=ratio, t_max=t_max)
    except ValidationError as e:
        raise ConfigError(f"Invalid t-grid {text!r}: {e.errors()[0]['msg']}")


class TGrid(BaseModel):
    """Geometric time grid t_min * ratio^j, j >= 0, t <= t_max."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    t_min: float = Field(default_factory=lambda: settings.kernel.t_min, gt=0)
    ratio: float = Field(default_factory=lambda: settings.kernel.t_ratio, gt=1)
    t_max: float = Field(default_factory=lambda: settings.kernel.t_max, gt=0)

    def values(self, upper: Optional[float] = None) -> list:
        """Grid points, optionally restricted to t < upper."""
        out = []
        t = self.t_min
        while t <= self.t_max * (1 + 1e-12):
            if upper is None or t < upper:
                out.append(t)
            t *= self.ratio
        return out

    def as_string(self) -> str:
        return f"{self.t_min!r}:{self.ratio!r}:{self.t_max!r}"


class VerifySection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    random_functions: int = Field(default_factory=lambda: settings.verify.random_functions, ge=1, le=10_000)
    random_lists: int = Field(default_factory=lambda: settings.verify.random_lists, ge=1, le=10_000)
    whitney_cubes: int = Field(default_factory=lambda: settings.verify.whitney_cubes, ge=1, le=100_000)
    duality_pairs: int = Field(default_factory=lambda: settings.verify.duality_pairs, ge=1, le=10_000)
    band_functions: int = Field(default_factory=lambda: settings.verify.band_functions, ge=2, le=10_000)
    duality_bound: float = Field(default=64.0, gt=0, description="Upper bound asserted on pairing ratios")
    band_width: float = Field(default=50.0, gt=1, description="Maximum max/min of an equivalence band")
    orbit_points: int = Field(default=100, ge=1, le=100_000, description="Random chamber points per orbit check")
    truncation_bound: float = Field(default=32.0, gt=1, description="Ceiling on the odd-truncation BMO* ratio")


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    report: Optional[str] = None
    format: Literal["json", "markdown"] = "json"


class RunConfig(BaseModel):
    """Structured run configuration; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    window_half: int = Field(default_factory=lambda: settings.grid.window_half, ge=1, le=64)
    h: float = Field(default_factory=lambda: settings.kernel.h, gt=0, le=1)
    t_grid: TGrid = Field(default_factory=TGrid)
    max_level: int = Field(default_factory=lambda: settings.bmo.max_level, ge=0, le=12)
    break_point: float = Field(default_factory=lambda: settings.bmo.break_point, gt=0)
    kappa: float = Field(default_factory=lambda: settings.bmo.kappa, ge=0)
    seed: int = Field(default_factory=lambda: settings.verify.seed, ge=0)
    value_mode: Literal["exact", "float"] = "exact"
    verify: VerifySection = Field(default_factory=VerifySection)
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def _check_t_grid(self) -> "RunConfig":
        if self.t_grid.t_max < self.t_grid.t_min:
            raise ValueError("t_grid.t_max must not be below t_grid.t_min")
        return self

    def fingerprint(self) -> str:
        """SHA-256 of the canonical JSON form."""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Return a copy with non-None overrides applied and re-validated."""
        data = self.model_dump()
        for key, value in overrides.items():
            if value is None:
                continue
            if isinstance(value, BaseModel):
                value = value.model_dump()
            data[key] = value
        return load_run_config_dict(data)


def load_run_config_dict(data: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(p) for p in first["loc"])
        raise ConfigError(f"Invalid configuration at {location or '<root>'}: {first['msg']}")


def load_run_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """Load a run file; TOML by suffix, JSON otherwise. No path gives defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}")

    if path.suffix.lower() == ".toml":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"Malformed TOML in {path}: {e}")
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Malformed JSON in {path} at line {e.lineno}, column {e.colno}: {e.msg}")
    if not isinstance(data, dict):
        raise ConfigError(f"Config {path} must be a table/object")
    return load_run_config_dict(data)
