"""Skid-steer ground vehicle: first-order velocity filters driven by commanded
speeds, with an actuator-degradation mixing matrix and a hazard-grid unsafe set.

The driver's intended velocities enter the reward, not the dynamics: the
planner's actions are the adjusted commands.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..mdp import IntervalBox, MdpDefinition
from .hazard import HazardGrid, footprint_offsets


@dataclass(frozen=True)
class TrackedVehicleConfig:
    dt: float = 0.1
    horizon: int = 16
    discount: float = 1.0
    tau_v: float = 0.2
    tau_omega: float = 0.15
    command: Sequence[float] = (0.0, 0.0)       # driver (v_d, omega_d), reward parameter
    degradation: Sequence[float] = (0.0, 0.0, 0.0, 0.0)  # a1..a4 command mixing
    footprint_radius: float = 0.3
    v_bound: float = 1.8
    omega_bound: float = 1.5
    pos_bound: float = 100.0


def make_tracked_vehicle(cfg: TrackedVehicleConfig,
                         hazard: Optional[HazardGrid] = None) -> MdpDefinition:
    """5-state (x, y, theta, v, omega) model; action = commanded (v, omega)."""
    dt = cfg.dt
    tau_v, tau_w = cfg.tau_v, cfg.tau_omega
    v_ref, w_ref = float(cfg.command[0]), float(cfg.command[1])
    a1, a2, a3, a4 = (float(a) for a in cfg.degradation)

    def dynamics(x, u):
        v_d = (1.0 + a1) * u[0] + a2 * u[1]
        w_d = a3 * u[0] + (1.0 + a4) * u[1]
        out = np.empty(5)
        theta, v, w = x[2], x[3], x[4]
        out[0] = x[0] + dt * v * np.cos(theta)
        out[1] = x[1] + dt * v * np.sin(theta)
        out[2] = theta + dt * w
        out[3] = v + dt * (v_d - v) / tau_v
        out[4] = w + dt * (w_d - w) / tau_w
        return out

    def stage_reward(x):
        ev = x[3] - v_ref
        ew = x[4] - w_ref
        return max(1.0 - 0.8 * ev * ev - 0.6 * ew * ew, 0.0)

    def stage_reward_batch(xs):
        ev = xs[:, 3] - v_ref
        ew = xs[:, 4] - w_ref
        return np.maximum(1.0 - 0.8 * ev * ev - 0.6 * ew * ew, 0.0)

    if hazard is not None:
        offsets = footprint_offsets(cfg.footprint_radius, hazard.resolution)
        grid = hazard.cells
        res = hazard.resolution
        ox, oy = hazard.origin

        def unsafe(x):
            cx, cy = x[0], x[1]
            for dx, dy in offsets:
                if hazard.blocked_at(cx + dx, cy + dy):
                    return True
            return False

        def unsafe_batch(xs):
            px = xs[:, 0, None] + offsets[None, :, 0]
            py = xs[:, 1, None] + offsets[None, :, 1]
            j = np.floor((px - ox) / res).astype(int)
            i = np.floor((py - oy) / res).astype(int)
            off = (i < 0) | (j < 0) | (i >= grid.shape[0]) | (j >= grid.shape[1])
            blocked = off.copy()
            ok = ~off
            blocked[ok] = grid[i[ok], j[ok]]
            return blocked.any(axis=1)
    else:
        def unsafe(x):
            return False

        def unsafe_batch(xs):
            return np.zeros(len(xs), dtype=bool)

    p = cfg.pos_bound
    state_box = IntervalBox(
        lower=[-p, -p, -10 * np.pi, -cfg.v_bound, -cfg.omega_bound],
        upper=[p, p, 10 * np.pi, cfg.v_bound, cfg.omega_bound],
    )
    action_box = IntervalBox(lower=[-1.0, -1.0], upper=[1.0, 1.0])
    return MdpDefinition(
        state_dim=5, action_dim=2, dynamics=dynamics, stage_reward=stage_reward,
        terminal_reward=lambda x: 0.0, unsafe=unsafe, state_box=state_box,
        action_box=action_box, horizon=cfg.horizon, discount=cfg.discount,
        dt=dt, name="tracked_vehicle",
        stage_reward_batch=stage_reward_batch, unsafe_batch=unsafe_batch,
    )
