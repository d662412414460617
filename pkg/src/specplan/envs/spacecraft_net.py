"""Planar multi-particle capture problem: two thruster-controlled spacecraft
joined by a tether chain shepherd a passive target.

All bodies are planar double integrators. Chain segments are tension-only
spring-dampers; chain-to-target collisions are stiff spring-dampers. Only the
two chain-end spacecraft are actuated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..mdp import IntervalBox, MdpDefinition
from .double_integrator import arctan_shaping


@dataclass(frozen=True)
class NetParams:
    segment_count: int
    nominal_len: float        # meters, rest length per segment
    stiffness: float          # N/m tension spring
    damping: float            # N s/m tension damper
    contact_stiffness: float
    contact_damping: float
    target_radius: float

    def __post_init__(self):
        for name in ("segment_count", "nominal_len", "stiffness",
                     "contact_stiffness", "target_radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.damping < 0 or self.contact_damping < 0:
            raise ValueError("damping coefficients must be nonnegative")


def net_segment_force(p_i: np.ndarray, p_j: np.ndarray, v_i: np.ndarray,
                      v_j: np.ndarray, params: NetParams):
    """Tension-only spring-damper along the segment.

    Returns (force_on_i, force_on_j, coincident_flag); zero force when slack
    or when the nodes coincide (flagged).
    """
    dp = p_j - p_i
    length = float(np.linalg.norm(dp))
    if length == 0.0:
        return np.zeros(2), np.zeros(2), True
    if length <= params.nominal_len:
        return np.zeros(2), np.zeros(2), False
    unit = dp / length
    rate = float(np.dot(dp, v_j - v_i)) / length
    tension = params.stiffness * (length - params.nominal_len) - params.damping * rate
    f_i = tension * unit
    return f_i, -f_i, False


def contact_force(p_node: np.ndarray, v_node: np.ndarray, p_target: np.ndarray,
                  v_target: np.ndarray, params: NetParams):
    """Stiff spring-damper, active only inside the target radius.

    Returns (force_on_node, force_on_target); the pair sums to zero.
    """
    dp = p_node - p_target
    d = float(np.linalg.norm(dp))
    if d == 0.0 or d >= params.target_radius:
        return np.zeros(2), np.zeros(2)
    unit = dp / d
    rate = float(np.dot(dp, v_node - v_target)) / d
    scalar = params.contact_stiffness * (d - params.target_radius) - params.contact_damping * rate
    f_node = -scalar * unit
    return f_node, -f_node


@dataclass(frozen=True)
class SpacecraftNetConfig:
    dt: float = 0.1
    horizon: int = 40
    discount: float = 1.0
    node_count: int = 4            # chain particles; the two ends are actuated
    net: NetParams = NetParams(segment_count=3, nominal_len=0.5, stiffness=1.0,
                               damping=0.2, contact_stiffness=5.0,
                               contact_damping=0.5, target_radius=0.3)
    masses: Sequence[float] = ()   # per chain particle; default 1.0 each
    target_mass: float = 1.0
    thrust_max: float = 0.2
    desired_velocity: Sequence[float] = (0.0, -0.1)
    reward_weights: Sequence[float] = (0.4, 0.3, 0.3)   # c1, c2, c3
    reward_scales: Sequence[float] = (1.0, 1.0, 1.0)    # a1, a2, a3
    pos_bounds: Sequence[float] = (-3.0, 5.0)
    vel_bound: float = 0.25


def make_spacecraft_net(cfg: SpacecraftNetConfig = SpacecraftNetConfig()) -> MdpDefinition:
    """State: chain+target positions then velocities, 2 coords per particle.

    Layout: [p_0 .. p_{N-1}, p_T, v_0 .. v_{N-1}, v_T] with N = node_count.
    Action: thrust forces on chain particles 0 and N-1, shape (4,).
    """
    N = cfg.node_count
    if N < 2:
        raise ValueError("need at least the two spacecraft chain ends")
    c1, c2, c3 = (float(c) for c in cfg.reward_weights)
    if c1 < 0 or c2 < 0 or c3 < 0 or c1 + c2 + c3 > 1.0 + 1e-12:
        raise ValueError("reward weights must be nonnegative with sum <= 1")
    a1, a2, a3 = (float(a) for a in cfg.reward_scales)
    masses = np.asarray(cfg.masses if cfg.masses else [1.0] * N, dtype=float)
    if masses.size != N:
        raise ValueError("one mass per chain particle required")
    params = cfg.net
    P = N + 1  # particles including target
    dt = cfg.dt
    v_des = np.asarray(cfg.desired_velocity, dtype=float)

    def split(x):
        pos = x[: 2 * P].reshape(P, 2)
        vel = x[2 * P:].reshape(P, 2)
        return pos, vel

    def dynamics(x, u):
        pos, vel = split(x)
        forces = np.zeros((P, 2))
        forces[0] += u[0:2]
        forces[N - 1] += u[2:4]
        for i in range(1, N):
            f_a, f_b, _ = net_segment_force(pos[i - 1], pos[i], vel[i - 1], vel[i], params)
            forces[i - 1] += f_a
            forces[i] += f_b
        for i in range(N):
            f_node, f_target = contact_force(pos[i], vel[i], pos[N], vel[N], params)
            forces[i] += f_node
            forces[N] += f_target
        acc = np.empty((P, 2))
        acc[:N] = forces[:N] / masses[:, None]
        acc[N] = forces[N] / cfg.target_mass
        out = np.empty_like(x)
        out[: 2 * P] = (pos + dt * vel).reshape(-1)
        out[2 * P:] = (vel + dt * acc).reshape(-1)
        return out

    def stage_reward(x):
        pos, vel = split(x)
        centroid_p = pos[:N].mean(axis=0)
        centroid_v = vel[:N].mean(axis=0)
        r = c1 * arctan_shaping(float(np.linalg.norm(centroid_p - pos[N])), a1)
        r += c2 * arctan_shaping(float(np.linalg.norm(centroid_v - v_des)), a2)
        r += c3 * arctan_shaping(float(np.linalg.norm(vel[N] - v_des)), a3)
        return r

    lo_p, hi_p = cfg.pos_bounds
    state_lo = np.concatenate([np.full(2 * P, lo_p), np.full(2 * P, -cfg.vel_bound)])
    state_hi = np.concatenate([np.full(2 * P, hi_p), np.full(2 * P, cfg.vel_bound)])
    action_box = IntervalBox(lower=[-cfg.thrust_max] * 4, upper=[cfg.thrust_max] * 4)
    return MdpDefinition(
        state_dim=4 * P, action_dim=4, dynamics=dynamics, stage_reward=stage_reward,
        terminal_reward=lambda x: 0.0, unsafe=lambda x: False,
        state_box=IntervalBox(lower=state_lo, upper=state_hi),
        action_box=action_box, horizon=cfg.horizon, discount=cfg.discount,
        dt=dt, name="spacecraft_net",
    )


def default_initial_state(cfg: SpacecraftNetConfig = SpacecraftNetConfig()) -> np.ndarray:
    """Chain stretched horizontally at rest, target ahead of the chain center."""
    N = cfg.node_count
    P = N + 1
    pos = np.zeros((P, 2))
    span = cfg.net.nominal_len * (N - 1)
    xs = np.linspace(-0.5 * span, 0.5 * span, N)
    pos[:N, 0] = xs
    pos[N] = (0.0, 1.5)
    vel = np.zeros((P, 2))
    return np.concatenate([pos.reshape(-1), vel.reshape(-1)])


def target_coordinate_indices(cfg: SpacecraftNetConfig) -> np.ndarray:
    """State indices of the target particle (positions and velocities)."""
    N = cfg.node_count
    P = N + 1
    return np.array([2 * N, 2 * N + 1, 2 * P + 2 * N, 2 * P + 2 * N + 1])
