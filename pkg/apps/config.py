"""Configuration management for the pullback lab.

Values come from three sources, lowest precedence first: built-in defaults,
a config file, and command-line flags. The config file is a flat
``key=value`` file read with python-dotenv, or a flat YAML mapping.
"""

import os
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import yaml
from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from dynamics.errors import ConfigError, LabError
from schemas.maps import MapSpec, parse_complex, parse_map_spec
from schemas.reports import BoundParams

VALID_LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


class OrbitSettings(BaseModel):
    """Map, starting point and orbit length."""
    map: str = Field(default="poly:d=2,c=-2", description="Map spec string")
    z0: complex = Field(default=0j, description="Starting point")
    n: int = Field(default=20, description="Orbit length")
    n_series: Optional[List[int]] = Field(default=None, description="Orbit lengths for sweeps")
    escape_radius: float = Field(default=1e100, description="Iteration stops beyond this modulus")
    chi_window: Optional[int] = Field(default=None, description="Trailing window; default n/10")

    @field_validator("map")
    @classmethod
    def validate_map(cls, v: str) -> str:
        """Validate the map grammar."""
        parse_map_spec(v)
        return v

    @field_validator("z0", mode="before")
    @classmethod
    def validate_z0(cls, v: Any) -> complex:
        """Parse complex literals such as 1-0.5i."""
        if isinstance(v, str):
            return parse_complex(v)
        return v

    @field_validator("n")
    @classmethod
    def validate_n(cls, v: int) -> int:
        """Validate n >= 1."""
        if v < 1:
            raise ValueError(f"n must be >= 1, got: {v}")
        return v

    @field_validator("n_series", mode="before")
    @classmethod
    def validate_n_series(cls, v: Any) -> Optional[List[int]]:
        """Accept comma-separated strings; sort and deduplicate."""
        if v is None:
            return None
        if isinstance(v, str):
            v = [item for item in v.replace(" ", "").split(",") if item]
        values = sorted({int(item) for item in v})
        if not values or values[0] < 1:
            raise ValueError(f"n_series must hold positive integers, got: {v}")
        return values

    @property
    def map_spec(self) -> MapSpec:
        return parse_map_spec(self.map)


class TelescopeSettings(BaseModel):
    """Pullback tracing and bisection settings."""
    precision_bits: int = Field(default=53, description="Initial mantissa bits")
    samples: int = Field(default=256, description="Initial circle samples")
    bisect_tol: float = Field(default=1e-6, description="Relative bisection tolerance")
    step_tol: float = Field(default=1e-2, description="Max pulled-back step / region diameter")
    max_points: int = Field(default=2 ** 20, description="Refinement cap")
    escalation_attempts: int = Field(default=3, description="Precision doublings on failure")

    @field_validator("precision_bits")
    @classmethod
    def validate_bits(cls, v: int) -> int:
        """Validate at least double precision."""
        if v < 53:
            raise ValueError(f"precision_bits must be >= 53, got: {v}")
        return v

    @field_validator("samples")
    @classmethod
    def validate_samples(cls, v: int) -> int:
        """Validate samples >= 8."""
        if v < 8:
            raise ValueError(f"samples must be >= 8, got: {v}")
        return v

    @field_validator("bisect_tol", "step_tol")
    @classmethod
    def validate_tolerance(cls, v: float) -> float:
        """Validate tolerances lie in (0, 1)."""
        if not 0 < v < 1:
            raise ValueError(f"tolerance must lie in (0, 1), got: {v}")
        return v


class CycleSearchSettings(BaseModel):
    """Periodic-point search and basin detection."""
    max_period: int = Field(default=4, description="Largest period searched")
    box: float = Field(default=4.0, description="Seed box half-width")
    grid: int = Field(default=64, description="Seeds per axis")
    basin_max_iter: int = Field(default=10_000, description="Iterations for basin detection")

    @field_validator("max_period", "grid", "basin_max_iter")
    @classmethod
    def validate_positive_int(cls, v: int) -> int:
        """Validate positive counts."""
        if v < 1:
            raise ValueError(f"value must be >= 1, got: {v}")
        return v

    @field_validator("box")
    @classmethod
    def validate_box(cls, v: float) -> float:
        """Validate a positive box."""
        if v <= 0:
            raise ValueError(f"box must be positive, got: {v}")
        return v


def parse_grid(text: str) -> List[float]:
    """``start:stop:count`` into ``count`` evenly spaced values."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be start:stop:count, got: {text!r}")
    start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise ValueError(f"grid count must be >= 1, got: {count}")
    if count == 1:
        return [start]
    step = (stop - start) / (count - 1)
    return [start + k * step for k in range(count)]


class SweepSettings(BaseModel):
    """Sweep concurrency and grids."""
    jobs: int = Field(default=1, description="Worker processes")
    c_re: Optional[str] = Field(default=None, description="Real parts of c as start:stop:count")
    c_im: str = Field(default="0:0:1", description="Imaginary parts of c as start:stop:count")
    kappa: Optional[float] = Field(default=None, description="Slow-decay rate constant")
    beta: Optional[float] = Field(default=None, description="Slow-decay rate exponent")

    @field_validator("jobs")
    @classmethod
    def validate_jobs(cls, v: int) -> int:
        """Validate jobs >= 1."""
        if v < 1:
            raise ValueError(f"jobs must be >= 1, got: {v}")
        return v

    @field_validator("c_re", "c_im")
    @classmethod
    def validate_grid(cls, v: Optional[str]) -> Optional[str]:
        """Validate the grid syntax."""
        if v is not None:
            parse_grid(v)
        return v

    def c_grid(self) -> List[complex]:
        """Parameter grid, row-major in (re, im)."""
        if self.c_re is None:
            return []
        return [complex(re, im) for re in parse_grid(self.c_re) for im in parse_grid(self.c_im)]


class OutputSettings(BaseModel):
    """Output format and destination."""
    format: str = Field(default="csv", description="csv or json")
    path: Optional[str] = Field(default=None, description="Output file; stdout when absent")

    @field_validator("format")
    @classmethod
    def validate_format(cls, v: str) -> str:
        """Validate the format."""
        if v not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got: {v}")
        return v


class LoggingConfig(BaseModel):
    """Logging configuration."""
    level: str = Field(default="INFO", description="Log level")

    @field_validator("level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level."""
        if v.upper() not in VALID_LOG_LEVELS:
            raise ValueError(f"Invalid log level: {v}")
        return v.upper()


class RunConfig(BaseModel):
    """Main configuration class."""
    orbit: OrbitSettings = Field(default_factory=OrbitSettings)
    telescope: TelescopeSettings = Field(default_factory=TelescopeSettings)
    cycles: CycleSearchSettings = Field(default_factory=CycleSearchSettings)
    sweep: SweepSettings = Field(default_factory=SweepSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    bounds: BoundParams = Field(default_factory=BoundParams)


# Flat key -> (section, field)
KEYS: Dict[str, Tuple[str, str]] = {
    "map": ("orbit", "map"),
    "z0": ("orbit", "z0"),
    "n": ("orbit", "n"),
    "n_series": ("orbit", "n_series"),
    "escape_radius": ("orbit", "escape_radius"),
    "chi_window": ("orbit", "chi_window"),
    "precision_bits": ("telescope", "precision_bits"),
    "samples": ("telescope", "samples"),
    "bisect_tol": ("telescope", "bisect_tol"),
    "step_tol": ("telescope", "step_tol"),
    "max_points": ("telescope", "max_points"),
    "escalation_attempts": ("telescope", "escalation_attempts"),
    "max_period": ("cycles", "max_period"),
    "box": ("cycles", "box"),
    "grid": ("cycles", "grid"),
    "basin_max_iter": ("cycles", "basin_max_iter"),
    "jobs": ("sweep", "jobs"),
    "c_re": ("sweep", "c_re"),
    "c_im": ("sweep", "c_im"),
    "kappa": ("sweep", "kappa"),
    "beta": ("sweep", "beta"),
    "format": ("output", "format"),
    "output": ("output", "path"),
    "log_level": ("logging", "level"),
    "gamma": ("bounds", "gamma"),
    "C_abs": ("bounds", "C_abs"),
    "c1": ("bounds", "c1"),
    "c2": ("bounds", "c2"),
    "c3": ("bounds", "c3"),
    "c4": ("bounds", "c4"),
    "c5": ("bounds", "c5"),
    "c6": ("bounds", "c6"),
    "a_n_rule": ("bounds", "a_n_rule"),
}


def read_config_file(path: str) -> Dict[str, Any]:
    """Flat mapping from a key=value file or a .yaml/.yml file.

    Raises:
        ConfigError: If the file is missing or not a flat mapping
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    if file_path.suffix in (".yaml", ".yml"):
        with open(file_path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict) or any(isinstance(v, dict) for v in data.values()):
            raise ConfigError(f"Config file must hold a flat mapping: {path}")
        return {str(k): v for k, v in data.items()}
    return {k: v for k, v in dotenv_values(file_path).items() if v is not None}


def load_config(
    config_file: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    env_file: Optional[str] = None,
) -> RunConfig:
    """Load configuration from defaults, a config file and flag overrides.

    Args:
        config_file: Optional key=value or YAML file
        overrides: Flag values; None entries are ignored
        env_file: Optional .env file for LOG_LEVEL

    Returns:
        RunConfig: Validated configuration object

    Raises:
        ConfigError: On unknown keys or failed validation
    """
    if env_file:
        load_dotenv(env_file)
    else:
        load_dotenv()

    values: Dict[str, Any] = {}
    if os.getenv("LOG_LEVEL"):
        values["log_level"] = os.getenv("LOG_LEVEL")
    if config_file:
        values.update(read_config_file(config_file))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})

    unknown = sorted(set(values) - set(KEYS))
    if unknown:
        raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}")

    sections: Dict[str, Dict[str, Any]] = {}
    for key, value in values.items():
        section, field = KEYS[key]
        sections.setdefault(section, {})[field] = value

    try:
        return RunConfig(**sections)
    except ValidationError as e:
        raise ConfigError(f"Configuration validation failed: {e}") from e
    except LabError as e:
        raise ConfigError(f"Configuration validation failed: {e}") from e
