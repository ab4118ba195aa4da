"""Run configuration: one structured file (YAML or JSON) plus flag overrides."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .milp import SolverParams

CONFIG_ENV = "RESERVEZONES_CONFIG"
MODELS = ("sequential", "stochastic", "zonal-extensive", "zonal-benders")


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


@dataclass
class ScenarioSource:
    count: int = 1000
    seed: int = 42
    reduce_to: int | None = 10
    file: str | None = None
    tau: float = 6.0

    def validate(self) -> None:
        if self.file is None:
            if self.count < 1:
                raise ConfigError("scenarios.count must be >= 1")
            if self.reduce_to is not None and not 1 <= self.reduce_to <= self.count:
                raise ConfigError(f"scenarios.reduce_to={self.reduce_to} must lie in 1..count={self.count}")
        if self.tau <= 0:
            raise ConfigError("scenarios.tau must be > 0")


@dataclass
class ModelSpec:
    """One entry of a stability comparison."""

    model: str
    q: float = 0.03
    zones: int = 1
    chi: float = 0.0

    @property
    def label(self) -> str:
        if self.model == "sequential":
            return f"sequential q={self.q:g}"
        if self.model.startswith("zonal"):
            return f"{self.model} Z={self.zones} chi={self.chi:g}"
        return self.model


@dataclass
class RunConfig:
    case: str = "ring4"
    model: str = "zonal-extensive"
    q: float = 0.03
    zones: int = 1
    chi: float = 0.0
    y_min: int = 1
    scenarios: ScenarioSource = field(default_factory=ScenarioSource)
    solver: dict = field(default_factory=dict)
    eps: float | None = None
    rel_eps: float = 1e-4
    max_iter: int = 50
    output: str = "out"
    jobs: int = 1
    mps: bool = False
    stability_sets: int = 10
    stability_models: list = field(default_factory=list)

    def validate(self) -> "RunConfig":
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {', '.join(MODELS)}; got {self.model!r}")
        if not 0.0 < self.q < 0.5:
            raise ConfigError(f"q must lie in (0, 0.5); got {self.q}")
        if self.zones < 1:
            raise ConfigError("zones must be >= 1")
        if not 0.0 <= self.chi <= 1.0:
            raise ConfigError(f"chi must lie in [0, 1]; got {self.chi}")
        if self.y_min < 1:
            raise ConfigError("y_min must be >= 1")
        if self.eps is not None and self.eps <= 0:
            raise ConfigError("eps must be > 0")
        if self.rel_eps <= 0:
            raise ConfigError("rel_eps must be > 0")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.stability_sets < 1:
            raise ConfigError("stability_sets must be >= 1")
        self.scenarios.validate()
        self.solver_params()
        for spec in self.stability_models:
            if spec.model not in MODELS:
                raise ConfigError(f"stability model {spec.model!r} is not one of {', '.join(MODELS)}")
        return self

    def solver_params(self) -> SolverParams:
        try:
            return SolverParams.from_mapping(self.solver)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"solver: {exc}") from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stability_models"] = [asdict(m) for m in self.stability_models]
        return d


def _check_keys(data: dict, cls, where: str) -> None:
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def parse_model_list(text: str) -> list[ModelSpec]:
    """``"sequential:q=0.03;zonal-extensive:zones=2,chi=0.6;stochastic"``."""
    out = []
    for item in filter(None, (s.strip() for s in text.split(";"))):
        name, _, rest = item.partition(":")
        kwargs: dict[str, Any] = {}
        for kv in filter(None, (s.strip() for s in rest.split(","))):
            k, sep, v = kv.partition("=")
            if not sep:
                raise ConfigError(f"bad model option {kv!r} in {item!r}")
            kwargs[k.strip()] = v.strip()
        out.append(_model_spec({"model": name.strip(), **kwargs}, f"model {item!r}"))
    return out


def _model_spec(d: dict, where: str) -> ModelSpec:
    _check_keys(d, ModelSpec, where)
    try:
        return ModelSpec(model=str(d["model"]), q=float(d.get("q", 0.03)),
                         zones=int(d.get("zones", 1)), chi=float(d.get("chi", 0.0)))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_mapping(data: dict | None) -> RunConfig:
    data = dict(data or {})
    if not isinstance(data, dict):
        raise ConfigError("configuration document must be a mapping")
    _check_keys(data, RunConfig, "configuration")
    scen = data.pop("scenarios", None) or {}
    if not isinstance(scen, dict):
        raise ConfigError("scenarios must be a mapping")
    _check_keys(scen, ScenarioSource, "scenarios")
    models = data.pop("stability_models", None) or []
    try:
        cfg = RunConfig(**data)
        cfg.scenarios = ScenarioSource(**scen)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.stability_models = [_model_spec(m, f"stability_models[{i}]") if isinstance(m, dict)
                            else parse_model_list(str(m))[0] for i, m in enumerate(models)]
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    """Read a YAML/JSON config; ``None`` falls back to the environment variable or defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        return RunConfig()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a mapping")
    return config_from_mapping(data)
