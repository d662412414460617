"""JSON environment configurations with a `type` discriminator.

A config document looks like:

    {"type": "double_integrator", "x0": [...], "env": {...}, "planner": {...}}

`env` holds constructor fields for the chosen environment; `planner` holds
branch length, exploration constants, and budget defaults that the CLI and
services pick up. Unknown keys inside `env`/`planner` are rejected to catch
typos early.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np

from ..mdp import MdpDefinition
from .double_integrator import DoubleIntegratorConfig, make_double_integrator
from .glider import ConfigError, GliderConfig, make_glider, trimmed_initial_state
from .hazard import HazardGrid
from .spacecraft_net import (NetParams, SpacecraftNetConfig, default_initial_state,
                             make_spacecraft_net)
from .tracked_vehicle import TrackedVehicleConfig, make_tracked_vehicle

ENV_TYPES = ("double_integrator", "tracked_vehicle", "spacecraft_net", "glider")


@dataclass(frozen=True)
class PlannerSettings:
    branch_len: int = 10
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 0.5
    budget_iters: Optional[int] = 1000
    budget_ms: Optional[float] = None
    time_invariant_lin: bool = False
    gain_mode: str = "dare"
    seed: int = 0


@dataclass
class EnvBundle:
    """A loaded planning problem: the MDP, its start state, and extras."""

    name: str
    mdp: MdpDefinition
    x0: np.ndarray
    planner: PlannerSettings
    hazard: Optional[HazardGrid] = None
    raw: Optional[dict] = None


def _build_dataclass(cls, obj: dict, label: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(obj) - names
    if unknown:
        raise ConfigError(f"unknown {label} fields: {', '.join(sorted(unknown))}")
    return cls(**obj)


def load_env(doc: dict) -> EnvBundle:
    if "type" not in doc:
        raise ConfigError("config missing 'type'")
    env_type = doc["type"]
    if env_type not in ENV_TYPES:
        raise ConfigError(f"unknown environment type '{env_type}'")
    env_fields = dict(doc.get("env", {}))
    planner = _build_dataclass(PlannerSettings, doc.get("planner", {}), "planner")
    hazard = None

    if env_type == "double_integrator":
        cfg = _build_dataclass(DoubleIntegratorConfig, env_fields, "env")
        mdp = make_double_integrator(cfg)
        default_x0 = np.zeros(4)
    elif env_type == "tracked_vehicle":
        if "hazard" in doc:
            hazard = HazardGrid.from_json_dict(doc["hazard"])
        cfg = _build_dataclass(TrackedVehicleConfig, env_fields, "env")
        mdp = make_tracked_vehicle(cfg, hazard)
        default_x0 = np.zeros(5)
    elif env_type == "spacecraft_net":
        if "net" in env_fields:
            env_fields["net"] = _build_dataclass(NetParams, env_fields["net"], "net")
        cfg = _build_dataclass(SpacecraftNetConfig, env_fields, "env")
        mdp = make_spacecraft_net(cfg)
        default_x0 = default_initial_state(cfg)
    else:
        cfg = _build_dataclass(GliderConfig, env_fields, "env")
        mdp = make_glider(cfg)
        default_x0 = trimmed_initial_state(cfg)

    x0 = np.asarray(doc.get("x0", default_x0), dtype=float)
    if x0.shape != (mdp.state_dim,):
        raise ConfigError(f"x0 must have {mdp.state_dim} entries")
    return EnvBundle(name=env_type, mdp=mdp, x0=x0, planner=planner,
                     hazard=hazard, raw=doc)


def load_env_file(path: str | Path) -> EnvBundle:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    try:
        return load_env(doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc))
