"""Experiment configuration: JSON schema, defaults and validation.

Defaults reproduce the standard circular-road scenario; every field can be
overridden from a JSON file. Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

MODES = ("slam", "los-only")
BOUND_MODES = ("full", "known-map")
LANDMARK_NOISE_MODES = ("map", "identity", "zero")


@dataclass
class MotionConfig:
    v: float = 22.22
    omega: float = float(np.pi / 10.0)
    T: float = 0.5
    q_diag: list = field(default_factory=lambda: [0.04, 0.04, 1e-6, 0.04])


@dataclass
class ScenarioConfig:
    sp_visibility_radius: float = 50.0
    max_range: float = 200.0
    clutter_lambda: float = 1.0
    ue_height: float = 0.0
    range_var: float = 1e-2
    angle_var: float = 1e-4
    # Optional fixed SP heights; drawn U(0, 40) from the seed when null.
    sp_heights: list | None = None


@dataclass
class FilterConfig:
    p_d: float = 0.9
    p_s: float = 0.99
    p_b: float = 1e-6
    q_map: float = 1e-4
    prune_threshold: float = 1e-6
    merge_threshold: float = 50.0
    cap: int = 50
    gate_tail_prob: float = 1e-9
    extraction_threshold: float = 0.5


@dataclass
class BoundsConfig:
    mode: str = "full"
    landmark_noise: str = "map"


@dataclass
class GospaConfig:
    p: float = 2.0
    c: float = 20.0
    alpha: float = 2.0


@dataclass
class ExperimentConfig:
    seed: int = 0
    mc_runs: int = 100
    cycles: int = 100
    steps_per_cycle: int = 40
    mode: str = "slam"
    jobs: int = 1
    out_dir: str = "out"
    initial_bias: float = 300.0
    # When true, the true trajectory evolves with the motion model's process
    # noise (one draw per run); bounds are evaluated on the nominal circle.
    noisy_truth: bool = False
    p0_diag: list = field(default_factory=lambda: [0.09, 0.09, 0.0052**2, 0.09])
    motion: MotionConfig = field(default_factory=MotionConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    bounds: BoundsConfig = field(default_factory=BoundsConfig)
    gospa: GospaConfig = field(default_factory=GospaConfig)

    def validate(self) -> None:
        if self.cycles < 1:
            raise ConfigError("cycles must be >= 1")
        if self.steps_per_cycle < 1:
            raise ConfigError("steps_per_cycle must be >= 1")
        if self.mc_runs < 1:
            raise ConfigError("mc_runs must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.bounds.mode not in BOUND_MODES:
            raise ConfigError(f"bounds.mode must be one of {BOUND_MODES}")
        if self.bounds.landmark_noise not in LANDMARK_NOISE_MODES:
            raise ConfigError(
                f"bounds.landmark_noise must be one of {LANDMARK_NOISE_MODES}"
            )
        if self.gospa.alpha != 2.0:
            raise ConfigError("gospa.alpha must be 2")
        if not 0.0 <= self.filter.p_d <= 1.0:
            raise ConfigError("filter.p_d must be in [0, 1]")
        if not 0.0 <= self.filter.p_s <= 1.0:
            raise ConfigError("filter.p_s must be in [0, 1]")
        if len(self.p0_diag) != 4:
            raise ConfigError("p0_diag must have 4 entries")
        if len(self.motion.q_diag) != 4:
            raise ConfigError("motion.q_diag must have 4 entries")
        if self.motion.T <= 0:
            raise ConfigError("motion.T must be positive")
        if self.scenario.sp_heights is not None and len(self.scenario.sp_heights) != 4:
            raise ConfigError("scenario.sp_heights must have 4 entries")
        if self.filter.cap < 1:
            raise ConfigError("filter.cap must be >= 1")


def _from_dict(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown keys {sorted(unknown)}")
    return cls(**data)


_NESTED = {
    "motion": MotionConfig,
    "scenario": ScenarioConfig,
    "filter": FilterConfig,
    "bounds": BoundsConfig,
    "gospa": GospaConfig,
}


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(data) - {f.name for f in dataclasses.fields(ExperimentConfig)}
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        if name in _NESTED:
            kwargs[name] = _from_dict(_NESTED[name], value, f"{name}.")
        else:
            kwargs[name] = value
    cfg = ExperimentConfig(**kwargs)
    cfg.validate()
    return cfg


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return dataclasses.asdict(cfg)


def parse_config(path) -> ExperimentConfig:
    """Load and validate a JSON config file; defaults fill missing keys."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"invalid JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    try:
        return config_from_dict(data)
    except TypeError as exc:
        raise ConfigError(f"invalid config value in {path}: {exc}") from exc
