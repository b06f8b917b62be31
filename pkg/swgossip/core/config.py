"""
Configuration for swgossip.

Two layers:

- ``Settings``: process-wide knobs (logging, dense size caps, tolerances) read from
  ``SWGOSSIP_*`` environment variables or a ``.env`` file.
- Config files: versioned JSON (or YAML) documents validated by the pydantic models
  below. Unknown keys are rejected.
"""

import json
from functools import lru_cache
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Type, TypeVar, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigurationError


class Settings(BaseSettings):
    """Runtime settings."""

    model_config = SettingsConfigDict(env_prefix="SWGOSSIP_", env_file=".env", extra="ignore")

    log_level: str = Field(default="INFO")
    log_file: Optional[str] = Field(default=None)

    # dense N²×N² storage
    kron_max_n: int = Field(default=40, ge=2)
    b3_max_n: int = Field(default=12, ge=2)
    # link-failure enumeration falls back to Monte Carlo moments above this degree
    failure_enum_max_degree: int = Field(default=15, ge=1)
    failure_mc_samples: int = Field(default=20000, ge=100)

    stochastic_tol: float = Field(default=1e-12, gt=0)
    perron_tol: float = Field(default=1e-8, gt=0)
    zero_radius_tol: float = Field(default=1e-14, ge=0)
    gelfand_squarings: int = Field(default=60, ge=4)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return the cached process settings."""
    return Settings()


Algorithm = Literal["bwgossip", "random_gossip", "pushsum", "broadcast_gossip"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RggSpec(_Strict):
    """Random geometric graph."""

    kind: Literal["rgg"] = "rgg"
    n: int = Field(ge=2)
    r0: float = Field(gt=0)
    seed: Optional[int] = Field(default=None, ge=0)


class EdgeListSpec(_Strict):
    """Graph given by its edges."""

    kind: Literal["edges"] = "edges"
    n: int = Field(ge=2)
    edges: List[Tuple[int, int]] = Field(default_factory=list)


GraphSpec = Annotated[Union[RggSpec, EdgeListSpec], Field(discriminator="kind")]


class ExplicitX0(_Strict):
    kind: Literal["explicit"] = "explicit"
    values: List[float]


class NormalX0(_Strict):
    """i.i.d. standard normal initial values."""

    kind: Literal["normal"] = "normal"
    seed: Optional[int] = Field(default=None, ge=0)


X0Spec = Annotated[Union[ExplicitX0, NormalX0], Field(discriminator="kind")]


class _Versioned(_Strict):
    version: Literal[1]
    seed: int = Field(default=0, ge=0, lt=2**64)
    output_dir: str = Field(default="output")


class GraphConfig(_Versioned):
    """`gen-graph` config."""

    graph: GraphSpec


class ExperimentConfig(_Versioned):
    """Config for `check`, `spectral` and `simulate`.

    `graph` may be omitted for `pushsum`, which runs on the complete graph of `n` nodes.
    """

    graph: Optional[GraphSpec] = None
    n: Optional[int] = Field(default=None, ge=2)
    algorithm: Algorithm = "bwgossip"
    gamma: float = Field(default=0.5, gt=0, lt=1)
    p_e: Optional[float] = Field(default=None, ge=0, lt=1)
    replicas: int = Field(default=1, ge=1)
    ticks: int = Field(default=1000, ge=0)
    alpha: float = Field(default=1.0, ge=0, le=1)
    mode: Literal["average", "sum", "single_variate"] = "average"
    trigger: Optional[int] = Field(default=None, ge=0)
    x0: X0Spec = Field(default_factory=NormalX0)
    diagnostics: bool = False
    window: Optional[int] = Field(default=None, ge=1)
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _graph_or_n(self) -> "ExperimentConfig":
        if self.graph is None and self.n is None:
            raise ValueError("either 'graph' or 'n' must be given")
        if self.graph is None and self.algorithm != "pushsum":
            raise ValueError(f"algorithm '{self.algorithm}' needs a 'graph'")
        if self.mode == "sum" and self.trigger is None:
            raise ValueError("sum mode needs a 'trigger' node")
        return self

    @property
    def node_count(self) -> int:
        return self.graph.n if self.graph is not None else int(self.n)


class SlopeStudyConfig(_Versioned):
    """`slope-study` config (slope vs κ over N)."""

    n_values: List[int] = Field(default_factory=lambda: [4, 8, 12, 16])
    r0: float = Field(default=4.0, gt=0)
    algorithm: Literal["bwgossip", "random_gossip"] = "bwgossip"
    replicas: int = Field(default=10000, ge=1)
    ticks: Optional[int] = Field(default=None, ge=1)
    max_resamples: int = Field(default=100, ge=1)
    workers: int = Field(default=1, ge=1)

    @field_validator("n_values")
    @classmethod
    def _n_at_least_two(cls, values: List[int]) -> List[int]:
        if not values or min(values) < 2:
            raise ValueError("n_values must be non-empty with every n >= 2")
        return values


class FailureStudyConfig(_Versioned):
    """`failure-study` config."""

    graph: GraphSpec
    p_e_values: List[float] = Field(default_factory=lambda: [0.0, 0.1, 0.2, 0.3])
    x0: X0Spec = Field(default_factory=NormalX0)
    replicas: int = Field(default=50, ge=1)
    ticks: int = Field(default=2000, ge=1)
    workers: int = Field(default=1, ge=1)

    @field_validator("p_e_values")
    @classmethod
    def _probabilities(cls, values: List[float]) -> List[float]:
        if not values or any(not 0 <= p < 1 for p in values):
            raise ValueError("p_e_values must be non-empty, each in [0, 1)")
        return values


class ClockSweepConfig(_Versioned):
    """`clock-sweep` config."""

    graph: GraphSpec
    alphas: List[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0])
    x0: X0Spec = Field(default_factory=NormalX0)
    replicas: int = Field(default=50, ge=1)
    ticks: int = Field(default=2000, ge=1)
    workers: int = Field(default=1, ge=1)

    @field_validator("alphas")
    @classmethod
    def _unit_interval(cls, values: List[float]) -> List[float]:
        if not values or any(not 0 <= a <= 1 for a in values):
            raise ValueError("alphas must be non-empty, each in [0, 1]")
        return values


class ComparisonConfig(_Versioned):
    """`compare` config: several algorithms on one graph, same x(0) and replica seeds."""

    graph: GraphSpec
    algorithms: List[Literal["bwgossip", "random_gossip", "broadcast_gossip"]] = Field(
        default_factory=lambda: ["bwgossip", "random_gossip", "broadcast_gossip"]
    )
    gamma: float = Field(default=0.5, gt=0, lt=1)
    x0: X0Spec = Field(default_factory=NormalX0)
    replicas: int = Field(default=50, ge=1)
    ticks: int = Field(default=2000, ge=1)
    workers: int = Field(default=1, ge=1)

    @field_validator("algorithms")
    @classmethod
    def _distinct(cls, values: List[str]) -> List[str]:
        if not values or len(set(values)) != len(values):
            raise ValueError("algorithms must be non-empty and distinct")
        return values


ConfigT = TypeVar("ConfigT", bound=BaseModel)


def load_config(path: Union[str, Path], model: Type[ConfigT]) -> ConfigT:
    """Load and validate a config file.

    Args:
        path: JSON file (``.yaml``/``.yml`` accepted as well)
        model: Target config model

    Returns:
        The validated config

    Raises:
        ConfigurationError: If the file cannot be read or fails the schema
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e}", {"path": str(path)})
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigurationError(f"cannot parse config {path}: {e}", {"path": str(path)})
    return parse_config(data, model)


def parse_config(data: object, model: Type[ConfigT]) -> ConfigT:
    """Validate an already-decoded config document."""
    if not isinstance(data, dict):
        raise ConfigurationError("config document must be an object")
    try:
        return model.model_validate(data)
    except PydanticValidationError as e:
        raise ConfigurationError(
            f"invalid {model.__name__}: {e.error_count()} error(s)",
            {"errors": [f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors()]},
        )
