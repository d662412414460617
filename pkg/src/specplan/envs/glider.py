"""Six-degree-of-freedom glider with a linear aerodynamic model, a thermal
updraft region, and a persistent-observation objective.

State (13): [pn, pe, pd, u, v, w, phi, theta, psi, p, q, r, xi] in NED
convention (pd is down, altitude = -pd). xi counts timesteps since the
target was last inside the body-axis observation cone; the physical states
integrate with explicit Euler and xi transitions separately.

Aerodynamic coefficient tables come from configuration. The defaults below
are representative small-UAV values, not authoritative for any particular
airframe; tasks built on this model should rely on qualitative properties.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..mdp import IntervalBox, MdpDefinition
from .double_integrator import arctan_shaping


class ConfigError(ValueError):
    """Malformed or incomplete environment configuration."""


REQUIRED_COEFFS = {
    "CL": ("zero", "alpha", "q", "delta_e"),
    "CD": ("zero", "alpha", "q", "delta_e"),
    "Cm": ("zero", "alpha", "q", "delta_e"),
    "CY": ("zero", "beta", "p", "r", "delta_a", "delta_r"),
    "Cl": ("zero", "beta", "p", "r", "delta_a", "delta_r"),
    "Cn": ("zero", "beta", "p", "r", "delta_a", "delta_r"),
}

DEFAULT_GLIDER_COEFFS: Mapping[str, Mapping[str, float]] = {
    "CL": {"zero": 0.23, "alpha": 5.61, "q": 7.95, "delta_e": 0.13},
    "CD": {"zero": 0.043, "alpha": 0.30, "q": 0.0, "delta_e": 0.0135},
    "Cm": {"zero": 0.0135, "alpha": -2.74, "q": -38.21, "delta_e": -0.99},
    "CY": {"zero": 0.0, "beta": -0.98, "p": 0.0, "r": 0.0,
           "delta_a": 0.075, "delta_r": 0.19},
    "Cl": {"zero": 0.0, "beta": -0.13, "p": -0.51, "r": 0.25,
           "delta_a": 0.17, "delta_r": 0.0024},
    "Cn": {"zero": 0.0, "beta": 0.073, "p": -0.069, "r": -0.095,
           "delta_a": -0.011, "delta_r": -0.069},
}


def inertia_couplings(Jx: float, Jy: float, Jz: float, Jxz: float) -> tuple:
    """Standard gamma coupling constants from the inertia tensor."""
    G = Jx * Jz - Jxz * Jxz
    return (
        Jxz * (Jx - Jy + Jz) / G,
        (Jz * (Jz - Jy) + Jxz * Jxz) / G,
        Jz / G,
        Jxz / G,
        (Jz - Jx) / Jy,
        Jxz / Jy,
        ((Jx - Jy) * Jx + Jxz * Jxz) / G,
        Jx / G,
    )


@dataclass(frozen=True)
class GliderConfig:
    dt: float = 0.05
    horizon: int = 200
    discount: float = 1.0
    mass: float = 13.5
    gammas: Sequence[float] = inertia_couplings(0.8244, 1.135, 1.759, 0.1204)
    J_y: float = 1.135
    wing_area: float = 0.55       # S, m^2
    chord: float = 0.18994        # c, m
    span: float = 2.8956          # b, m
    air_density: float = 1.2682
    coeffs: Mapping[str, Mapping[str, float]] = field(
        default_factory=lambda: DEFAULT_GLIDER_COEFFS)
    thermal_center: Sequence[float] = (400.0, 0.0)
    thermal_radius: float = 150.0
    thermal_force: float = 200.0  # N, upward inside the thermal
    cone_half_angle_deg: float = 30.0
    cone_length: float = 100.0
    target: Sequence[float] = (-300.0, 0.0, -300.0)
    observe_timeout: int = 100    # T, steps before the observation bonus lapses
    stay_alive_reward: float = 1.0  # r0
    reward_scale: float = 200.0   # a, meters for the distance shaping
    gravity: float = 9.81


def _check_coeffs(coeffs: Mapping[str, Mapping[str, float]]):
    missing = []
    for table, keys in REQUIRED_COEFFS.items():
        if table not in coeffs:
            missing.append(table)
            continue
        for key in keys:
            if key not in coeffs[table]:
                missing.append(f"{table}.{key}")
    if missing:
        raise ConfigError("missing aerodynamic coefficients: " + ", ".join(missing))


def body_to_world(phi: float, theta: float, psi: float) -> np.ndarray:
    sp, cp = np.sin(phi), np.cos(phi)
    st, ct = np.sin(theta), np.cos(theta)
    ss, cs = np.sin(psi), np.cos(psi)
    return np.array([
        [ct * cs, sp * st * cs - cp * ss, cp * st * cs + sp * ss],
        [ct * ss, sp * st * ss + cp * cs, cp * st * ss - sp * cs],
        [-st, sp * ct, cp * ct],
    ])


def target_in_cone(x: np.ndarray, target: np.ndarray, half_angle: float,
                   length: float) -> bool:
    """Is the target inside the body-x-axis cone from the vehicle position?"""
    R = body_to_world(x[6], x[7], x[8])
    d_world = target - x[0:3]
    dist = float(np.linalg.norm(d_world))
    if dist > length or dist == 0.0:
        return False
    d_body = R.T @ d_world
    return d_body[0] >= dist * np.cos(half_angle)


def make_glider(cfg: GliderConfig = GliderConfig()) -> MdpDefinition:
    _check_coeffs(cfg.coeffs)
    dt = cfg.dt
    g1, g2, g3, g4, g5, g6, g7, g8 = (float(v) for v in cfg.gammas)
    mass, Jy = cfg.mass, cfg.J_y
    S, c_bar, b = cfg.wing_area, cfg.chord, cfg.span
    rho = cfg.air_density
    CL = cfg.coeffs["CL"]
    CD = cfg.coeffs["CD"]
    Cm = cfg.coeffs["Cm"]
    CY = cfg.coeffs["CY"]
    Cl = cfg.coeffs["Cl"]
    Cn = cfg.coeffs["Cn"]
    thermal_c = np.asarray(cfg.thermal_center, dtype=float)
    target = np.asarray(cfg.target, dtype=float)
    half_angle = np.deg2rad(cfg.cone_half_angle_deg)
    if not (0.0 < cfg.cone_half_angle_deg < 90.0):
        raise ConfigError("cone half-angle must lie in (0, 90) degrees")
    if mass <= 0:
        raise ConfigError("mass must be positive")
    grav = cfg.gravity

    def dynamics(x, act):
        # extreme in-box states can overflow the aero terms; callers detect
        # non-finite outputs, so compute quietly
        with np.errstate(over="ignore", invalid="ignore"):
            return _step(x, act)

    def _step(x, act):
        pn, pe, pd = x[0:3]
        u, v, w = x[3:6]
        phi, theta, psi = x[6:9]
        p, q, r = x[9:12]
        de, da, dr = act

        R = body_to_world(phi, theta, psi)
        Va = float(np.sqrt(u * u + v * v + w * w))
        if Va > 1e-6:
            alpha = np.arctan2(w, u)
            beta = np.arcsin(np.clip(v / Va, -1.0, 1.0))
            qbar = 0.5 * rho * Va * Va * S
            cq = c_bar / (2.0 * Va)
            bq = b / (2.0 * Va)
            c_lift = CL["zero"] + CL["alpha"] * alpha + CL["q"] * cq * q + CL["delta_e"] * de
            c_drag = CD["zero"] + CD["alpha"] * alpha + CD["q"] * cq * q + CD["delta_e"] * de
            c_pitch = Cm["zero"] + Cm["alpha"] * alpha + Cm["q"] * cq * q + Cm["delta_e"] * de
            c_side = (CY["zero"] + CY["beta"] * beta + CY["p"] * bq * p
                      + CY["r"] * bq * r + CY["delta_a"] * da + CY["delta_r"] * dr)
            c_roll = (Cl["zero"] + Cl["beta"] * beta + Cl["p"] * bq * p
                      + Cl["r"] * bq * r + Cl["delta_a"] * da + Cl["delta_r"] * dr)
            c_yaw = (Cn["zero"] + Cn["beta"] * beta + Cn["p"] * bq * p
                     + Cn["r"] * bq * r + Cn["delta_a"] * da + Cn["delta_r"] * dr)
            f_lift = qbar * c_lift
            f_drag = qbar * c_drag
            ca, sa = np.cos(alpha), np.sin(alpha)
            fx = -ca * f_drag + sa * f_lift
            fz = -sa * f_drag - ca * f_lift
            fy = qbar * c_side
            tl = qbar * b * c_roll
            tm = qbar * c_bar * c_pitch
            tn = qbar * b * c_yaw
        else:
            fx = fy = fz = tl = tm = tn = 0.0

        f_body = np.array([fx, fy, fz])
        st, ct = np.sin(theta), np.cos(theta)
        sp, cp = np.sin(phi), np.cos(phi)
        f_body += mass * grav * np.array([-st, sp * ct, cp * ct])
        if (pn - thermal_c[0]) ** 2 + (pe - thermal_c[1]) ** 2 <= cfg.thermal_radius**2:
            f_body += R.T @ np.array([0.0, 0.0, -cfg.thermal_force])

        pos_dot = R @ np.array([u, v, w])
        uvw_dot = np.array([r * v - q * w, p * w - r * u, q * u - p * v]) + f_body / mass
        # attitude kinematics; keep the matrix finite near theta = +-pi/2
        ct_safe = ct if abs(ct) > 1e-6 else np.copysign(1e-6, ct if ct != 0 else 1.0)
        tt = st / ct_safe
        euler_dot = np.array([
            p + sp * tt * q + cp * tt * r,
            cp * q - sp * r,
            (sp / ct_safe) * q + (cp / ct_safe) * r,
        ])
        pqr_dot = np.array([
            g1 * p * q - g2 * q * r + g3 * tl + g4 * tn,
            g5 * p * r - g6 * (p * p - r * r) + tm / Jy,
            g7 * p * q - g1 * q * r + g4 * tl + g8 * tn,
        ])

        out = np.empty(13)
        out[0:3] = x[0:3] + dt * pos_dot
        out[3:6] = x[3:6] + dt * uvw_dot
        out[6:9] = x[6:9] + dt * euler_dot
        out[9:12] = x[9:12] + dt * pqr_dot
        # augmented observation counter transitions on the pre-step state
        out[12] = 0.0 if target_in_cone(x, target, half_angle, cfg.cone_length) else x[12] + 1.0
        return out

    r0 = cfg.stay_alive_reward
    T_obs = float(cfg.observe_timeout)

    def stage_reward(x):
        seen = 1.0 if x[12] < T_obs else 0.0
        shaped = arctan_shaping(float(np.linalg.norm(x[0:3] - target)), cfg.reward_scale)
        return 0.1 * r0 + 0.9 * (seen + 0.5 * (1.0 - seen) * shaped)

    state_box = IntervalBox(
        lower=[-1000, -1000, -750, -600, -600, -600, -2, -2, -100, -50, -50, -50, 0],
        upper=[1000, 1000, -0.2, 600, 600, 600, 2, 2, 100, 50, 50, 50, 1e9],
    )
    action_box = IntervalBox(lower=[-0.5] * 3, upper=[0.5] * 3)
    return MdpDefinition(
        state_dim=13, action_dim=3, dynamics=dynamics, stage_reward=stage_reward,
        terminal_reward=lambda x: 0.0, unsafe=lambda x: False, state_box=state_box,
        action_box=action_box, horizon=cfg.horizon, discount=cfg.discount,
        dt=dt, name="glider",
    )


def trimmed_initial_state(cfg: GliderConfig = GliderConfig(),
                          altitude: float = 300.0, speed: float = 30.0) -> np.ndarray:
    """Level flight heading north at the given altitude and airspeed."""
    x = np.zeros(13)
    x[2] = -altitude
    x[3] = speed
    x[12] = cfg.observe_timeout  # target not yet observed
    return x
