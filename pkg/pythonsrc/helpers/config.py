"""Run configuration: file (TOML or JSON) -> CLI overrides -> environment defaults.

Example TOML::

    seed = 7
    a0_star = 1.0

    [system]
    name = "diag-hyperbolic"
    params = { lam = 1.0 }

    [rate]
    name = "poly"
    params = { power = 1.0 }

    [grid]
    span = 6.0
    step = 0.25

    [params]
    C = 1.0
    lambda = 1.0
    D = 1.0
"""

import json
import logging
import tomllib
from argparse import Namespace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from helpers.errors import ConfigError
from helpers.utils import env_int, parse_params
from hdichotomy.checkers import DichotomyConstants
from hdichotomy.construct import DEFAULT_GAP_THRESHOLD, DEFAULT_HORIZON, PipelineConfig
from hdichotomy.families import EvolutionFamily
from hdichotomy.grid import SigmaGrid
from hdichotomy.rates import GrowthRate, build_rate
from hdichotomy.rescale import sigma_of_t
from hdichotomy.sphere import SphereConfig
from hdichotomy.systems import build_system

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class RateSpec(_Strict):
    name: str = "exp"
    params: Dict[str, Any] = Field(default_factory=dict)

    def build(self) -> GrowthRate:
        return build_rate(self.name, **self.params)


class SystemSpec(_Strict):
    name: str = "diag-hyperbolic"
    params: Dict[str, Any] = Field(default_factory=dict)

    def build(self, rate: GrowthRate) -> EvolutionFamily:
        return build_system(self.name, rate, **self.params)


class GridSpec(_Strict):
    sigma_min: Optional[float] = None
    sigma_max: Optional[float] = None
    span: float = Field(default=6.0, gt=0)
    step: float = Field(default=0.25, gt=0)

    @model_validator(mode="after")
    def _nonempty(self) -> "GridSpec":
        if self.sigma_min is not None and self.sigma_max is not None and self.sigma_max < self.sigma_min:
            raise ValueError(f"sigma_max={self.sigma_max} < sigma_min={self.sigma_min}")
        return self


class SphereSpec(_Strict):
    samples: int = Field(default=10_000, ge=1)
    restarts: int = Field(default=8, ge=1)
    max_iter: int = Field(default=200, ge=0)
    refine_top: int = Field(default=16, ge=0)


class CommandParams(_Strict):
    C: Optional[float] = Field(default=None, gt=0)
    beta: Optional[float] = Field(default=None, gt=0)
    D: Optional[float] = Field(default=None, ge=1)
    lam: Optional[float] = Field(default=None, gt=0, alias="lambda")
    horizon: float = Field(default=DEFAULT_HORIZON, gt=0)
    gap_threshold: float = Field(default=DEFAULT_GAP_THRESHOLD, gt=1)
    margin: float = Field(default=0.5, gt=0, lt=1)
    windows: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0], min_length=1)
    window_max: Optional[float] = Field(default=None, gt=0)
    projection: Optional[List[List[float]]] = None
    cross_check: bool = True


class RunConfig(_Strict):
    system: SystemSpec = Field(default_factory=SystemSpec)
    rate: RateSpec = Field(default_factory=RateSpec)
    a0_star: Optional[float] = None
    grid: GridSpec = Field(default_factory=GridSpec)
    params: CommandParams = Field(default_factory=CommandParams)
    sphere: SphereSpec = Field(default_factory=SphereSpec)
    seed: int = 0
    workers: int = Field(default_factory=lambda: env_int("HDICHOTOMY_WORKERS", 1), ge=1)

    def build_rate(self) -> GrowthRate:
        return self.rate.build()

    def build_system(self, rate: GrowthRate) -> EvolutionFamily:
        return self.system.build(rate)

    def inputs(self) -> Tuple[GrowthRate, EvolutionFamily, SigmaGrid]:
        rate = self.build_rate()
        return rate, self.build_system(rate), self.build_grid(rate)

    def build_grid(self, rate: GrowthRate) -> SigmaGrid:
        """sigma_min defaults to ln h(a0*) when a0* is set, else 0; sigma_max to sigma_min + span."""
        if self.grid.sigma_min is not None:
            start = self.grid.sigma_min
        elif self.a0_star is not None:
            start = sigma_of_t(rate, self.a0_star)
        else:
            start = 0.0
        stop = self.grid.sigma_max if self.grid.sigma_max is not None else start + self.grid.span
        return SigmaGrid.build(rate, start, stop, self.grid.step)

    def sphere_config(self) -> SphereConfig:
        return SphereConfig(samples=self.sphere.samples, restarts=self.sphere.restarts,
                            max_iter=self.sphere.max_iter, refine_top=self.sphere.refine_top, seed=self.seed)

    def dichotomy_constants(self) -> Optional[DichotomyConstants]:
        if self.params.D is None or self.params.lam is None:
            return None
        return DichotomyConstants(self.params.D, self.params.lam)

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            span=self.grid.span,
            step=self.grid.step,
            horizon_sigma=self.params.horizon,
            gap_threshold=self.params.gap_threshold,
            windows=tuple(self.params.windows),
            dichotomy=self.dichotomy_constants(),
            beta=self.params.beta,
            margin=self.params.margin,
            expansive_window=self.params.window_max,
            sphere=self.sphere_config(),
            workers=self.workers,
            cross_check=self.params.cross_check,
        )

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


def validate_config(data: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid run config: {e}") from e


def load_config(path: Optional[str]) -> RunConfig:
    """Read a TOML or JSON run config; no path means all defaults."""
    if not path:
        return validate_config({})
    p = Path(path)
    try:
        if p.suffix.lower() == ".toml":
            with p.open("rb") as fh:
                data = tomllib.load(fh)
        elif p.suffix.lower() == ".json":
            data = json.loads(p.read_text(encoding="utf-8"))
        else:
            raise ConfigError(f"config must be .toml or .json, got '{p.name}'")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from e
    LOG.info("Loaded run config from %s", path)
    return validate_config(data)


_PARAM_FLAGS = {"C": "C", "beta": "beta", "lam": "lambda", "D": "D", "horizon": "horizon", "margin": "margin"}


def apply_overrides(config: RunConfig, args: Namespace) -> RunConfig:
    """CLI flags win over file values; unset flags leave the file alone."""
    data = config.model_dump(by_alias=True)
    if getattr(args, "system", None):
        if args.system != data["system"]["name"]:
            data["system"]["params"] = {}
        data["system"]["name"] = args.system
    if getattr(args, "rate", None):
        if args.rate != data["rate"]["name"]:
            data["rate"]["params"] = {}
        data["rate"]["name"] = args.rate
    data["system"]["params"].update(parse_params(getattr(args, "param", None)))
    data["rate"]["params"].update(parse_params(getattr(args, "rate_param", None)))
    for attr, key in _PARAM_FLAGS.items():
        value = getattr(args, attr, None)
        if value is not None:
            data["params"][key] = value
    for attr in ("seed", "workers"):
        value = getattr(args, attr, None)
        if value is not None:
            data[attr] = value
    return validate_config(data)
