"""Benchmark environments and configuration loading."""

from .double_integrator import DoubleIntegratorConfig, arctan_shaping, make_double_integrator
from .glider import ConfigError, DEFAULT_GLIDER_COEFFS, GliderConfig, make_glider, trimmed_initial_state
from .hazard import HazardGrid, footprint_offsets
from .loader import EnvBundle, PlannerSettings, load_env, load_env_file
from .spacecraft_net import (NetParams, SpacecraftNetConfig, contact_force,
                             default_initial_state, make_spacecraft_net,
                             net_segment_force, target_coordinate_indices)
from .tracked_vehicle import TrackedVehicleConfig, make_tracked_vehicle

__all__ = [
    "ConfigError", "DEFAULT_GLIDER_COEFFS", "DoubleIntegratorConfig", "EnvBundle",
    "GliderConfig", "HazardGrid", "NetParams", "PlannerSettings",
    "SpacecraftNetConfig", "TrackedVehicleConfig", "arctan_shaping",
    "contact_force", "default_initial_state", "footprint_offsets", "load_env",
    "load_env_file", "make_double_integrator", "make_glider",
    "make_spacecraft_net", "make_tracked_vehicle", "net_segment_force",
    "target_coordinate_indices", "trimmed_initial_state",
]
