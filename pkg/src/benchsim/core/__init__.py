"""Deterministic 2D simulation kernel."""

from .geometry import (
    Segment,
    Vec2,
    closest_point_on_segment,
    point_segment_distance,
    ray_circle_intersection,
    ray_segment_intersection,
    unit,
    wrap_angle,
)
from .grid import (
    GridMap,
    component_cells,
    egocentric_patch,
    free_components,
    inflate,
    rasterize,
)
from .rng import make_rng, rng_state, set_rng_state
from .sensors import SensorFrame, cast_rays
from .world import (
    EPS_PEN,
    Body,
    Command,
    ContactEvent,
    EntityClass,
    Pose,
    WorldState,
    clamp_speed,
    resolve_collisions,
    step_kinematics,
)

__all__ = [
    "Body", "Command", "ContactEvent", "EntityClass", "EPS_PEN", "GridMap",
    "Pose", "SensorFrame", "Segment", "Vec2", "WorldState", "cast_rays",
    "clamp_speed", "closest_point_on_segment", "component_cells",
    "egocentric_patch", "free_components", "inflate", "make_rng",
    "point_segment_distance", "rasterize", "ray_circle_intersection",
    "ray_segment_intersection", "resolve_collisions", "rng_state",
    "set_rng_state", "step_kinematics", "unit", "wrap_angle",
]
