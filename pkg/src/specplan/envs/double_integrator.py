"""Planar double integrator with goal-distance shaping and disc obstacles."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..mdp import IntervalBox, MdpDefinition


def arctan_shaping(d: float, a: float) -> float:
    """Distance normalizer s(d, a) = 1 - (2/pi) atan(d/a), mapping [0,inf) to (0,1]."""
    return 1.0 - (2.0 / np.pi) * np.arctan(d / a)


@dataclass(frozen=True)
class DoubleIntegratorConfig:
    dt: float = 0.1
    horizon: int = 100
    discount: float = 1.0
    goal: Sequence[float] = (2.0, 0.0)
    obstacles: Sequence[Sequence[float]] = ()  # (cx, cy, radius) per obstacle
    reward_scale: float = 0.5  # meters; distance at which reward halves
    pos_bound: float = 3.0
    vel_bound: float = 1.0
    acc_bound: float = 1.0


def make_double_integrator(cfg: DoubleIntegratorConfig = DoubleIntegratorConfig()) -> MdpDefinition:
    """State (x, y, vx, vy); action = acceleration; reward shaped by goal distance."""
    dt = cfg.dt
    goal = np.asarray(cfg.goal, dtype=float)
    obstacles = [(float(cx), float(cy), float(r)) for cx, cy, r in cfg.obstacles]
    a = cfg.reward_scale
    two_over_pi = 2.0 / np.pi

    def dynamics(x, u):
        out = np.empty(4)
        out[0] = x[0] + dt * x[2]
        out[1] = x[1] + dt * x[3]
        out[2] = x[2] + dt * u[0]
        out[3] = x[3] + dt * u[1]
        return out

    def stage_reward(x):
        dx = x[0] - goal[0]
        dy = x[1] - goal[1]
        d = (dx * dx + dy * dy) ** 0.5
        return 1.0 - two_over_pi * np.arctan(d / a)

    def stage_reward_batch(xs):
        d = np.hypot(xs[:, 0] - goal[0], xs[:, 1] - goal[1])
        return 1.0 - two_over_pi * np.arctan(d / a)

    def unsafe(x):
        for cx, cy, r in obstacles:
            if (x[0] - cx) ** 2 + (x[1] - cy) ** 2 <= r * r:
                return True
        return False

    def unsafe_batch(xs):
        hit = np.zeros(len(xs), dtype=bool)
        for cx, cy, r in obstacles:
            hit |= (xs[:, 0] - cx) ** 2 + (xs[:, 1] - cy) ** 2 <= r * r
        return hit

    p, v = cfg.pos_bound, cfg.vel_bound
    state_box = IntervalBox(lower=[-p, -p, -v, -v], upper=[p, p, v, v])
    action_box = IntervalBox(lower=[-cfg.acc_bound] * 2, upper=[cfg.acc_bound] * 2)
    return MdpDefinition(
        state_dim=4, action_dim=2, dynamics=dynamics, stage_reward=stage_reward,
        terminal_reward=lambda x: 0.0, unsafe=unsafe, state_box=state_box,
        action_box=action_box, horizon=cfg.horizon, discount=cfg.discount,
        dt=dt, name="double_integrator",
        stage_reward_batch=stage_reward_batch, unsafe_batch=unsafe_batch,
    )
