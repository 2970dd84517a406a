import json
import logging
import os
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from eptrap.config import Tolerances, plain_data, set_dotted
from eptrap.errors import ConfigError
from eptrap.models import CNum, ModelSpec

# Set up logger
logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = "EPTRAP_LOG_LEVEL"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

# =============================================================================
# PYDANTIC MODELS
# =============================================================================


class GridConfig(BaseModel):
    """Sweep axis: either start/stop/num or explicit values"""

    model_config = ConfigDict(extra="forbid")

    parameter: str = Field(description="Dotted model parameter to sweep")
    start: Optional[float] = Field(default=None, description="First sample")
    stop: Optional[float] = Field(default=None, description="Last sample")
    num: Optional[int] = Field(default=None, ge=2, description="Number of samples")
    values: Optional[List[CNum]] = Field(default=None, description="Explicit samples (may be complex)")

    @model_validator(mode="after")
    def _one_form(self):
        linear = self.start is not None and self.stop is not None and self.num is not None
        if linear == (self.values is not None):
            raise ValueError("give either start/stop/num or values")
        return self

    def samples(self) -> List[complex]:
        if self.values is not None:
            return list(self.values)
        return [complex(v) for v in np.linspace(self.start, self.stop, self.num)]


class LinearAxis(BaseModel):
    model_config = ConfigDict(extra="forbid")

    start: float = Field(description="First sample")
    stop: float = Field(description="Last sample")
    num: int = Field(ge=2, description="Number of samples")

    def points(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)


class ObservablesConfig(BaseModel):
    """Observable series requested by `observe`"""

    model_config = ConfigDict(extra="forbid")

    requested: List[str] = Field(description="Series names to compute")
    energies: Optional[LinearAxis] = Field(default=None, description="Energy grid for scattering observables")
    times: Optional[LinearAxis] = Field(default=None, description="Time grid for the decay rate")
    pair: Optional[Tuple[int, int]] = Field(default=None, description="Channel pair read as transmission")
    channel: int = Field(default=0, ge=0, description="Entrance channel of the internal wavefunction")


class EpConfig(BaseModel):
    """EP search plane and encircling loop"""

    model_config = ConfigDict(extra="forbid")

    parameters: List[str] = Field(description="One complex or two real parameter names")
    guess: Optional[List[CNum]] = Field(default=None, description="Starting point of the search")
    radius: float = Field(default=0.1, gt=0.0, description="Encircling radius")
    steps: int = Field(default=200, ge=100, description="Steps per loop")
    loops: int = Field(default=4, ge=1, description="Loops traversed")
    direction: int = Field(default=1, description="+1 counter-clockwise, -1 clockwise")


class RunConfig(BaseModel):
    """Top-level JSON config document"""

    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = Field(description="Model spec, discriminated by kind")
    grid: Optional[GridConfig] = Field(default=None, description="Sweep axis")
    observables: Optional[ObservablesConfig] = Field(default=None, description="Requested observables")
    ep: Optional[EpConfig] = Field(default=None, description="EP search and encircling")
    tolerances: Tolerances = Field(default_factory=Tolerances, description="Numerical tolerances")

    def require(self, section: str):
        value = getattr(self, section)
        if value is None:
            raise ConfigError(f"config has no '{section}' section")
        return value


# =============================================================================
# LOADING
# =============================================================================


def log_level() -> str:
    level = os.getenv(LOG_LEVEL_ENV, "INFO").strip().upper()
    return level if level in LOG_LEVELS else "INFO"


def read_json(path: str) -> Dict[str, Any]:
    """Load a JSON document; missing or malformed files are config errors"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {path}: {e.msg} at line {e.lineno}")


def _validate(data: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        raise ConfigError(f"invalid config: {err['msg']} at {'.'.join(map(str, err['loc']))}")


def load_config(path: str, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Validated RunConfig with dotted overrides applied on the full document"""
    config = _validate(read_json(path))
    if not overrides:
        return config
    data = plain_data(config.model_dump())
    for key, value in overrides.items():
        set_dotted(data, key, value, owner="config")
    return _validate(data)


def parse_set(items: Optional[Sequence[str]]) -> Dict[str, Any]:
    """--set key=value pairs; values parsed as JSON with a plain-string fallback"""
    out: Dict[str, Any] = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got '{item}'")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        out[key.strip()] = value
    return out


def load_manifest(path: str) -> Dict[str, Any]:
    """Scenario manifest written by a previous run"""
    manifest = read_json(path)
    for key in ("scenario", "parameters", "tolerances"):
        if key not in manifest:
            raise ConfigError(f"manifest {path} has no '{key}' entry")
    return manifest
