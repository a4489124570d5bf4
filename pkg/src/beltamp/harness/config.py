"""Experiment configuration: flat ``key=value`` files with command-line overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..baselines import BaselineSpec
from ..learner import LearnConfig


class ConfigError(ValueError):
    pass


def parse_seeds(text: str) -> list:
    """``"0-19"``, ``"3"`` or ``"1,4,7-9"`` -> list of ints, order kept, duplicates dropped."""
    out: list = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        try:
            if "-" in part[1:]:
                cut = part.index("-", 1)
                lo, hi = int(part[:cut]), int(part[cut + 1:])
                if hi < lo:
                    raise ConfigError(f"empty seed range {part!r}")
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise ConfigError(f"bad seed list {text!r}") from None
    seen = set()
    return [s for s in out if not (s in seen or seen.add(s))]


def parse_env(text: str) -> tuple:
    """``name`` or ``name:k=v,k=v`` -> (name, {k: v})."""
    name, _, rest = str(text).partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        k, eq, v = item.partition("=")
        if not eq:
            raise ConfigError(f"environment parameter {item!r} is not key=value")
        params[k.strip()] = v.strip()
    return name.strip(), params


_LEARN_KEYS = {f.name for f in dataclasses.fields(LearnConfig)}


@dataclass
class ExperimentConfig:
    env: str = "grid"
    env_params: dict = field(default_factory=dict)
    domain: Optional[str] = None
    methods: list = field(default_factory=lambda: [BaselineSpec()])
    seeds: list = field(default_factory=lambda: [0])
    budgets: list = field(default_factory=lambda: [10_000])
    budget_unit: str = "sims"
    gamma: float = 0.98
    learn: LearnConfig = field(default_factory=LearnConfig)
    step_limit: int = 100
    rollouts: int = 1000
    depth: int = 20
    c_ucb: float = 2 ** 0.5
    K_show: int = 3
    objects: str = ""
    init: str = ""
    out: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if not self.budgets or min(self.budgets) < 1:
            raise ConfigError("budgets must be positive")
        if self.budget_unit not in ("sims", "iterations"):
            raise ConfigError("budget_unit must be 'sims' or 'iterations'")
        if not 0 < self.gamma < 1:
            raise ConfigError("gamma must lie in (0, 1)")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    def method_specs(self) -> list:
        return [dataclasses.replace(m, rollouts=self.rollouts, depth=self.depth, c_ucb=self.c_ucb)
                if m.learning == "mcts" else m for m in self.methods]


def _to_int(key, v) -> int:
    try:
        return int(v)
    except ValueError:
        raise ConfigError(f"{key} expects an integer, got {v!r}") from None


def _to_float(key, v) -> float:
    try:
        return float(v)
    except ValueError:
        raise ConfigError(f"{key} expects a number, got {v!r}") from None


def apply_settings(cfg: ExperimentConfig, settings: dict) -> ExperimentConfig:
    """Return a copy of ``cfg`` with the textual ``settings`` applied."""
    top: dict = {}
    learn: dict = {}
    for key, raw in settings.items():
        key = key.strip().replace("-", "_")
        v = str(raw).strip()
        if key in _LEARN_KEYS:
            learn[key] = (_to_int if key in ("I", "K", "S", "horizon_cap") else _to_float)(key, v)
        elif key == "env":
            top["env"], params = parse_env(v)
            top["env_params"] = {**cfg.env_params, **params} if top["env"] == cfg.env else params
        elif key in ("methods", "method"):
            try:
                top["methods"] = [BaselineSpec.parse(m) for m in v.split(",") if m.strip()]
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            if not top["methods"]:
                raise ConfigError("methods must be nonempty")
        elif key in ("seeds", "seed"):
            top["seeds"] = parse_seeds(v)
        elif key in ("budgets", "budget"):
            top["budgets"] = [_to_int(key, b) for b in v.split(",") if b.strip()]
        elif key in ("step_limit", "rollouts", "depth", "K_show", "workers"):
            top[key] = _to_int(key, v)
        elif key in ("gamma", "c_ucb"):
            top[key] = _to_float(key, v)
        elif key in ("domain", "budget_unit", "objects", "init", "out"):
            top[key] = v
        elif key.startswith("env."):
            top.setdefault("env_params", dict(cfg.env_params))[key[4:]] = v
        else:
            raise ConfigError(f"unknown setting {key!r}")
    try:
        new_learn = dataclasses.replace(cfg.learn, **learn)
        return dataclasses.replace(cfg, learn=new_learn, **top)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def read_config_text(text: str, where: str = "<config>") -> dict:
    settings = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq or not key.strip():
            raise ConfigError(f"{where}:{n}: expected key=value")
        settings[key.strip()] = value.strip()
    return settings


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None,
                base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    cfg = base or ExperimentConfig()
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        cfg = apply_settings(cfg, read_config_text(text, path))
    if overrides:
        cfg = apply_settings(cfg, overrides)
    return cfg
