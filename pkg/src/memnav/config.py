"""Run configuration: one commented YAML file, strict keys, one hash.

Flags override file values; the config hash is computed on the fully
resolved configuration and embedded in every artifact a run produces, so
any output can be traced back to the exact settings that made it.
"""

from __future__ import annotations

import copy
import hashlib
import math

import yaml

from .artifacts import canonical_json
from .collect import Strategy
from .decide import TrainParams
from .evaluate import EvalOptions
from .percept import NoiseParams
from .scene import SceneGenParams
from .sim import SensorConfig

DEFAULTS: dict = {
    "seed": 7,
    "scenes": {
        "count": 8,
        "width_cells": [40, 56],
        "height_cells": [40, 56],
        "rooms": [2, 4],
        "objects": [8, 14],
        "categories": list(SceneGenParams().categories),
        "embedding_dim": 32,
        "category_groups": 0,
        "group_weight": 0.7,
        "theme_prob": 0.85,
    },
    "episodes": {
        "per_scene": 4,
        "goals_per_episode": 1,
        "goal_kinds": ["category"],
        "description_sigma": 0.1,
        "sequential": False,
        "revisit_heavy": False,
        "max_steps": 2000,
    },
    "noise": {
        "sigma_center": 0.05,
        "sigma_size": 0.05,
        "sigma_vocab": 0.05,
        "sigma_feature": 0.05,
    },
    "sensor": {
        "max_range": 5.0,
        "fov_degrees": 90.0,
        "n_rays": 180,
    },
    "memory": {
        "epsilon": 0.25,
    },
    "collect": {
        "mix": {"optimal": 0.5, "random": 0.3, "hybrid:0.5": 0.2},
        "pre_explored_frac": 0.0,
    },
    "train": {
        "batch_size": 64,
        "learning_rate": 0.001,
        "epochs": 10,
        "hidden": 16,
    },
    "eval": {
        "decision_budget": 12,
        "success_radius": 1.0,
        "budgets": [2, 4, 6, 8, 10, 12],
        "heuristic_tau": 0.85,
    },
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key: {where}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be a mapping")
            if key == "mix":  # mix maps arbitrary strategy names to weights
                out[key] = copy.deepcopy(value)
            else:
                out[key] = _merge(base[key], value, where)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path: str | None = None, overrides: dict | None = None) -> dict:
    """Resolve defaults <- file <- flag overrides; reject unknown keys."""
    config = copy.deepcopy(DEFAULTS)
    if path is not None:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        config = _merge(config, data)
    if overrides:
        config = _merge(config, overrides)
    return config


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


# -- builders ------------------------------------------------------------------


def scene_params(config: dict) -> SceneGenParams:
    s = config["scenes"]
    return SceneGenParams(
        width_cells=tuple(s["width_cells"]),
        height_cells=tuple(s["height_cells"]),
        rooms=tuple(s["rooms"]),
        objects=tuple(s["objects"]),
        categories=tuple(s["categories"]),
        embedding_dim=s["embedding_dim"],
        category_groups=s["category_groups"],
        group_weight=s["group_weight"],
        theme_prob=s["theme_prob"],
    )


def noise_params(config: dict) -> NoiseParams:
    n = config["noise"]
    return NoiseParams(
        sigma_center=n["sigma_center"],
        sigma_size=n["sigma_size"],
        sigma_vocab=n["sigma_vocab"],
        sigma_feature=n["sigma_feature"],
    )


def sensor_config(config: dict) -> SensorConfig:
    s = config["sensor"]
    return SensorConfig(
        max_range=s["max_range"],
        fov=math.radians(s["fov_degrees"]),
        n_rays=s["n_rays"],
    )


def train_params(config: dict) -> TrainParams:
    t = config["train"]
    return TrainParams(
        batch_size=t["batch_size"],
        learning_rate=t["learning_rate"],
        epochs=t["epochs"],
        hidden=t["hidden"],
    )


def eval_options(config: dict, reset_memory_per_goal: bool = False) -> EvalOptions:
    e = config["eval"]
    return EvalOptions(
        noise=noise_params(config),
        sensor=sensor_config(config),
        epsilon=config["memory"]["epsilon"],
        decision_budget=e["decision_budget"],
        success_radius=e["success_radius"],
        reset_memory_per_goal=reset_memory_per_goal,
        seed=config["seed"],
    )


def strategy_mix(config: dict) -> list[tuple[Strategy, float]]:
    return parse_mix(config["collect"]["mix"])


def parse_mix(mix) -> list[tuple[Strategy, float]]:
    """Accept either a mapping {name: weight} or 'name=w,name=w' text."""
    if isinstance(mix, str):
        pairs = {}
        for part in mix.split(","):
            name, _, weight = part.partition("=")
            if not weight:
                raise ConfigError(f"bad mix entry {part!r} (want name=weight)")
            pairs[name.strip()] = float(weight)
        mix = pairs
    out = [(Strategy.parse(name), float(w)) for name, w in mix.items()]
    total = sum(w for _, w in out)
    if abs(total - 1.0) > 1e-9:
        raise ConfigError(f"strategy mix weights sum to {total}, expected 1")
    return out
