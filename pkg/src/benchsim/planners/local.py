"""Local reactive controllers over lidar costmaps: DWA and MPPI.

Both consume a global A* path, a lidar frame, and the robot's kinematic
state, and emit one (v, omega) unicycle command per control step. Obstacles
are the lidar hit endpoints inflated by the robot radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core.geometry import Vec2, wrap_angle
from ..core.world import Pose
from ..core.sensors import SensorFrame
from .astar import Path

COLLISION_MARGIN = 0.05  # m beyond the robot radius


@dataclass(frozen=True)
class RobotState:
    pose: Pose
    v: float      # m/s, current forward speed
    omega: float  # rad/s, current turn rate


@dataclass
class DwaParams:
    v_max: float = 2.0        # m/s
    omega_max: float = 2.0    # rad/s
    accel: float = 2.0        # m/s^2, window growth per second
    alpha: float = 4.0        # rad/s^2, angular window growth
    v_resolution: float = 0.1       # m/s, window sampling step
    omega_resolution: float = 0.1   # rad/s
    horizon: float = 2.0      # s, scoring rollout length
    dt: float = 0.1           # s
    w_heading: float = 0.8
    w_clearance: float = 0.2
    w_velocity: float = 0.2
    brake_decel: float = 2.0  # m/s^2, admissibility stopping rate
    robot_radius: float = 0.3  # m
    lookahead: float = 5.0    # m, path target distance (> v_max * horizon,
    #                              so fast candidates never overrun the carrot)

    def __post_init__(self):
        if min(self.w_heading, self.w_clearance, self.w_velocity) < 0:
            raise ValueError("weights must be non-negative")
        if self.w_heading + self.w_clearance + self.w_velocity == 0:
            raise ValueError("at least one weight must be positive")


@dataclass
class MppiParams:
    K: int = 512              # sampled control sequences
    H: int = 20               # horizon steps
    lambda_: float = 0.3      # softmin temperature
    sigma_v: float = 0.5      # m/s, control noise std
    sigma_omega: float = 0.5  # rad/s
    w_goal: float = 1.0
    w_collision: float = 200.0
    w_effort: float = 0.005
    v_max: float = 2.0        # m/s
    omega_max: float = 2.0    # rad/s
    dt: float = 0.1           # s
    robot_radius: float = 0.6  # m, cost-model clearance: padded beyond the
    #                            physical radius because rollouts hold lidar
    #                            points static while pedestrians keep moving
    lookahead: float = 4.0    # m, path target distance

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.H < 1:
            raise ValueError("H must be >= 1")
        if self.lambda_ <= 0:
            raise ValueError("lambda_ must be positive")


def obstacle_points(lidar: SensorFrame) -> np.ndarray:
    """World-frame lidar hit endpoints, (M, 2); misses excluded."""
    pts = lidar.endpoints()
    return pts[lidar.hit_mask()]


def select_target(path: Path, position: Vec2, lookahead: float) -> Vec2:
    """Carrot point: walk the path from its nearest waypoint until lookahead
    distance accumulates; falls back to the final waypoint."""
    wps = path.waypoints
    if not wps:
        raise ValueError("path is empty")
    arr = np.array([[w.x, w.y] for w in wps])
    here = np.array([position.x, position.y])
    i = int(np.argmin(((arr - here) ** 2).sum(axis=1)))
    travelled = 0.0
    while i + 1 < len(wps) and travelled < lookahead:
        travelled += (wps[i + 1] - wps[i]).norm()
        i += 1
    return wps[i]


def _min_obstacle_distance(points: np.ndarray, obstacles: np.ndarray
                           ) -> np.ndarray:
    """Min distance from each rollout point to any obstacle point.

    points: (..., 2); obstacles: (M, 2); returns (...) of distances
    (inf when there are no obstacles).
    """
    if len(obstacles) == 0:
        return np.full(points.shape[:-1], np.inf)
    d2 = ((points[..., None, :] - obstacles) ** 2).sum(axis=-1)
    return np.sqrt(d2.min(axis=-1))


def braking_rollout(state_pose: Pose, v: float, omega: float,
                    brake_decel: float, dt: float) -> np.ndarray:
    """Positions along [one step at (v, omega), then decelerate to rest].

    Deceleration scales omega with v so the path curvature is held.
    """
    pts = []
    x, y, th = state_pose.position.x, state_pose.position.y, state_pose.heading
    v_k, om_k = v, omega
    ratio = omega / v if v > 1e-9 else 0.0
    while True:
        th = th + om_k * dt
        x += v_k * math.cos(th) * dt
        y += v_k * math.sin(th) * dt
        pts.append((x, y))
        if v_k <= 1e-9:
            break
        v_k = max(0.0, v_k - brake_decel * dt)
        om_k = v_k * ratio if v > 1e-9 else om_k
        if v_k <= 1e-9 and len(pts) > 1:
            break
    return np.array(pts)


def _braking_clearances(pose: Pose, vs: np.ndarray, oms: np.ndarray,
                        brake_decel: float, dt: float,
                        obstacles: np.ndarray) -> np.ndarray:
    """Min obstacle distance along each candidate's braking path, (C,).

    The braking path takes one step at (v, omega), then decelerates to rest
    with omega scaled down with v so the curvature is held.
    """
    n_steps = int(math.ceil(max(vs.max(), 1e-9) / (brake_decel * dt))) + 1
    tgrid = np.arange(n_steps)                                # (T,)
    speeds = np.clip(vs[:, None] - brake_decel * dt * tgrid, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        omegas = np.where(vs[:, None] > 1e-9,
                          oms[:, None] * speeds / vs[:, None], 0.0)
    headings = pose.heading + np.cumsum(omegas * dt, axis=1)
    xs = pose.position.x + np.cumsum(speeds * np.cos(headings) * dt, axis=1)
    ys = pose.position.y + np.cumsum(speeds * np.sin(headings) * dt, axis=1)
    pts = np.stack([xs, ys], axis=-1)                         # (C, T, 2)
    return _min_obstacle_distance(pts, obstacles).min(axis=1)


def dwa_control(state: RobotState, path: Path, lidar: SensorFrame,
                params: DwaParams) -> tuple[float, float]:
    """Best admissible (v, omega) from the dynamic window.

    A candidate is admissible when braking from it (one step at the command,
    then decelerating along the same curvature) stays collision-free. With no
    admissible candidate the controller returns a recovery spin toward the
    path target.
    """
    p = params
    pose = state.pose
    target = select_target(path, pose.position, p.lookahead)
    obstacles = obstacle_points(lidar)

    v_lo = max(0.0, state.v - p.accel * p.dt)
    v_hi = min(p.v_max, state.v + p.accel * p.dt)
    om_lo = max(-p.omega_max, state.omega - p.alpha * p.dt)
    om_hi = min(p.omega_max, state.omega + p.alpha * p.dt)
    n_v = max(2, int(round((v_hi - v_lo) / p.v_resolution)) + 1)
    n_om = max(3, int(round((om_hi - om_lo) / p.omega_resolution)) + 1)
    vs, oms = np.meshgrid(np.linspace(v_lo, v_hi, n_v),
                          np.linspace(om_lo, om_hi, n_om), indexing="ij")
    vs, oms = vs.ravel(), oms.ravel()  # (C,)

    steps = max(1, int(round(p.horizon / p.dt)))
    t = np.arange(1, steps + 1) * p.dt                      # (H,)
    headings = pose.heading + oms[:, None] * t[None, :]     # (C, H)
    dx = vs[:, None] * np.cos(headings) * p.dt
    dy = vs[:, None] * np.sin(headings) * p.dt
    xs = pose.position.x + np.cumsum(dx, axis=1)
    ys = pose.position.y + np.cumsum(dy, axis=1)
    rollout = np.stack([xs, ys], axis=-1)                   # (C, H, 2)

    min_dist = _min_obstacle_distance(rollout, obstacles)   # (C, H)
    brake_clear = _braking_clearances(pose, vs, oms, p.brake_decel, p.dt,
                                      obstacles)
    admissible = brake_clear >= p.robot_radius + COLLISION_MARGIN

    bearing = math.atan2(target.y - pose.position.y,
                         target.x - pose.position.x)
    if not admissible.any():
        sign = 1.0 if wrap_angle(bearing - pose.heading) >= 0 else -1.0
        return (0.0, sign * p.omega_max)

    raw = (np.arctan2(target.y - ys[:, -1], target.x - xs[:, -1])
           - headings[:, -1])
    err = np.abs((raw + math.pi) % (2.0 * math.pi) - math.pi)
    heading_score = (math.pi - err) / math.pi
    clearance = np.clip(min_dist.min(axis=1) - p.robot_radius, 0.0, 1.0)
    velocity_score = vs / p.v_max

    score = (p.w_heading * heading_score + p.w_clearance * clearance
             + p.w_velocity * velocity_score)
    score[~admissible] = -np.inf
    best = int(np.argmax(score))
    return (float(vs[best]), float(oms[best]))


def softmin_weights(costs: np.ndarray, lambda_: float) -> np.ndarray:
    """exp(-(c - min c)/lambda), normalized to sum to one."""
    costs = np.asarray(costs, dtype=float)
    w = np.exp(-(costs - costs.min()) / lambda_)
    return w / w.sum()


def mppi_control(state: RobotState, path: Path, lidar: SensorFrame,
                 params: MppiParams, rng: np.random.Generator,
                 nominal: np.ndarray | None = None,
                 diagnostics: dict | None = None
                 ) -> tuple[tuple[float, float], np.ndarray]:
    """One MPPI step: returns ((v, omega), nominal sequence for next call).

    K control sequences are sampled around the nominal, rolled out with
    unicycle dynamics, scored, and softmin-averaged. The returned nominal is
    the averaged sequence shifted one step (warm start).
    """
    p = params
    if nominal is None:
        nominal = np.zeros((p.H, 2))
    if nominal.shape != (p.H, 2):
        raise ValueError(f"nominal must have shape ({p.H}, 2)")
    pose = state.pose
    target = select_target(path, pose.position, p.lookahead)
    obstacles = obstacle_points(lidar)

    noise = rng.normal(0.0, 1.0, size=(p.K, p.H, 2)) \
        * np.array([p.sigma_v, p.sigma_omega])
    controls = nominal[None, :, :] + noise
    controls[..., 0] = np.clip(controls[..., 0], 0.0, p.v_max)
    controls[..., 1] = np.clip(controls[..., 1], -p.omega_max, p.omega_max)

    headings = pose.heading + np.cumsum(controls[..., 1] * p.dt, axis=1)
    dx = controls[..., 0] * np.cos(headings) * p.dt
    dy = controls[..., 0] * np.sin(headings) * p.dt
    xs = pose.position.x + np.cumsum(dx, axis=1)
    ys = pose.position.y + np.cumsum(dy, axis=1)
    rollout = np.stack([xs, ys], axis=-1)                    # (K, H, 2)

    min_dist = _min_obstacle_distance(rollout, obstacles)    # (K, H)
    collisions = (min_dist < p.robot_radius + COLLISION_MARGIN).sum(axis=1)
    goal_dist = np.hypot(xs[:, -1] - target.x, ys[:, -1] - target.y)
    effort = (controls ** 2).sum(axis=(1, 2))
    costs = (p.w_goal * goal_dist + p.w_collision * collisions
             + p.w_effort * effort)

    weights = softmin_weights(costs, p.lambda_)
    averaged = np.einsum("k,khc->hc", weights, controls)
    command = (float(averaged[0, 0]), float(averaged[0, 1]))
    next_nominal = np.vstack([averaged[1:], averaged[-1:]])
    if diagnostics is not None:
        diagnostics["weights"] = weights
        diagnostics["costs"] = costs
        diagnostics["expected_cost"] = float(weights @ costs)
    return command, next_nominal
