"""Social-force pedestrian crowd with A*-sampled waypoint goals.

Force model: goal attraction relaxes velocity toward desired_speed along the
goal bearing; neighbors and obstacle segments repel with isotropic exponential
terms  A * exp((r - d)/B) * n_hat. Waypoints are drawn uniformly from the free
region reachable from the pedestrian and chained with A* paths; an exhausted
queue is resampled, so pedestrians wander indefinitely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core.geometry import Segment, Vec2, closest_point_on_segment, unit
from .core.grid import GridMap, component_cells
from .core.world import Body, Command, ContactEvent, EntityClass, Pose, WorldState, step_kinematics, resolve_collisions
from .planners.astar import astar

DESIRED_SPEED = 1.34  # m/s, comfortable walking speed
TAU = 0.5             # s, velocity relaxation time
PED_A = 5.0           # m/s^2, pedestrian repulsion strength
PED_B = 0.3           # m, pedestrian repulsion range
OBS_A = 10.0          # m/s^2, obstacle repulsion strength
OBS_B = 0.2           # m, obstacle repulsion range
NOISE_STD = 0.1       # m/s^2, per-component Gaussian force noise
WAYPOINT_RADIUS = 0.3  # m, distance at which a waypoint counts as reached
PED_RADIUS = 0.2      # m
PED_MAX_SPEED = 2.0   # m/s


@dataclass
class SfmParams:
    desired_speed: float = DESIRED_SPEED
    tau: float = TAU
    ped_a: float = PED_A
    ped_b: float = PED_B
    obs_a: float = OBS_A
    obs_b: float = OBS_B
    noise_std: float = NOISE_STD
    waypoint_radius: float = WAYPOINT_RADIUS

    def __post_init__(self):
        if min(self.ped_a, self.ped_b, self.obs_a, self.obs_b, self.tau) <= 0:
            raise ValueError("SFM coefficients and tau must be positive")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")


@dataclass
class Pedestrian:
    body: Body
    body_index: int  # index into the owning WorldState's body list
    desired_speed: float = DESIRED_SPEED
    tau: float = TAU
    waypoints: list[Vec2] = field(default_factory=list)

    @property
    def goal(self) -> Vec2 | None:
        return self.waypoints[0] if self.waypoints else None


def sfm_force(ped: Pedestrian, neighbors: list[Body], obstacles: list[Segment],
              params: SfmParams, rng: np.random.Generator | None = None) -> Vec2:
    """Total social force on one pedestrian (reference scalar implementation).

    Coincident positions (zero distance) get a repulsion direction drawn
    uniformly from the unit circle when an rng is supplied, +x otherwise.
    """
    body = ped.body
    p = body.pose.position
    v = body.velocity

    goal = ped.goal
    if goal is not None and (goal - p).norm() > 1e-9:
        v_des = (goal - p).normalized() * ped.desired_speed
    else:
        v_des = Vec2(0.0, 0.0)
    force = (v_des - v) * (1.0 / ped.tau)

    for other in neighbors:
        if other is body:
            continue
        delta = p - other.pose.position
        d = delta.norm()
        r = body.radius + other.radius
        if d == 0.0:
            n_hat = unit(rng.uniform(0.0, 2.0 * math.pi)) if rng is not None else Vec2(1.0, 0.0)
        else:
            n_hat = delta * (1.0 / d)
        force = force + n_hat * (params.ped_a * math.exp((r - d) / params.ped_b))

    for seg in obstacles:
        cp = closest_point_on_segment(p, seg)
        delta = p - cp
        d = delta.norm()
        if d == 0.0:
            tang = seg.b - seg.a
            n_hat = (Vec2(-tang.y, tang.x).normalized()
                     if tang.norm() > 0 else Vec2(1.0, 0.0))
        else:
            n_hat = delta * (1.0 / d)
        force = force + n_hat * (params.obs_a * math.exp((body.radius - d) / params.obs_b))

    if params.noise_std > 0 and rng is not None:
        nx, ny = rng.normal(0.0, params.noise_std, size=2)
        force = force + Vec2(float(nx), float(ny))
    return force


def _crowd_forces(peds: list[Pedestrian], world: WorldState, params: SfmParams,
                  rng: np.random.Generator | None) -> np.ndarray:
    """Vectorized SFM forces for all pedestrians, (n, 2). Matches sfm_force."""
    n = len(peds)
    pos = np.array([[p.body.pose.position.x, p.body.pose.position.y] for p in peds])
    vel = np.array([[p.body.velocity.x, p.body.velocity.y] for p in peds])
    rad = np.array([p.body.radius for p in peds])

    # Goal attraction.
    force = np.zeros((n, 2))
    for i, ped in enumerate(peds):
        goal = ped.goal
        if goal is not None:
            dg = np.array([goal.x, goal.y]) - pos[i]
            dist = float(np.hypot(*dg))
            if dist > 1e-9:
                force[i] = dg / dist * ped.desired_speed
    taus = np.array([p.tau for p in peds])
    force = (force - vel) / taus[:, None]

    # Neighbor repulsion from every other body in the world.
    all_pos = world.positions()
    all_rad = world.radii()
    ped_idx = np.array([p.body_index for p in peds])
    delta = pos[:, None, :] - all_pos[None, :, :]          # (n, m, 2)
    d = np.sqrt((delta ** 2).sum(axis=2))                  # (n, m)
    self_mask = ped_idx[:, None] == np.arange(len(world.bodies))[None, :]
    rsum = rad[:, None] + all_rad[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        n_hat = delta / d[:, :, None]
    zero = (d == 0.0) & ~self_mask
    if zero.any():
        zi, zj = np.nonzero(zero)
        for a, b in zip(zi, zj):
            ang = rng.uniform(0.0, 2.0 * math.pi) if rng is not None else 0.0
            n_hat[a, b] = (math.cos(ang), math.sin(ang))
    n_hat = np.nan_to_num(n_hat, nan=0.0, posinf=0.0, neginf=0.0)
    mag = params.ped_a * np.exp((rsum - d) / params.ped_b)
    mag[self_mask] = 0.0
    force += (mag[:, :, None] * n_hat).sum(axis=1)

    # Obstacle repulsion (point-segment distances).
    if world.obstacles:
        a = np.array([[s.a.x, s.a.y] for s in world.obstacles])
        b = np.array([[s.b.x, s.b.y] for s in world.obstacles])
        ab = b - a
        ab_len2 = (ab ** 2).sum(axis=1)
        ab_len2[ab_len2 == 0.0] = 1.0
        w = pos[:, None, :] - a[None, :, :]
        t = np.clip((w * ab[None, :, :]).sum(axis=2) / ab_len2[None, :], 0.0, 1.0)
        cp = a[None, :, :] + t[:, :, None] * ab[None, :, :]
        delta = pos[:, None, :] - cp
        d = np.sqrt((delta ** 2).sum(axis=2))
        with np.errstate(divide="ignore", invalid="ignore"):
            n_hat = delta / d[:, :, None]
        if (d == 0.0).any():
            zi, zj = np.nonzero(d == 0.0)
            for i, k in zip(zi, zj):
                seg = world.obstacles[k]
                tang = seg.b - seg.a
                nv = (Vec2(-tang.y, tang.x).normalized()
                      if tang.norm() > 0 else Vec2(1.0, 0.0))
                n_hat[i, k] = (nv.x, nv.y)
        n_hat = np.nan_to_num(n_hat, nan=0.0, posinf=0.0, neginf=0.0)
        mag = params.obs_a * np.exp((rad[:, None] - d) / params.obs_b)
        force += (mag[:, :, None] * n_hat).sum(axis=1)

    if params.noise_std > 0 and rng is not None:
        force += rng.normal(0.0, params.noise_std, size=(n, 2))
    return force


def nearest_free_cell(grid: GridMap, cell: tuple[int, int],
                      max_radius: int = 12) -> tuple[int, int] | None:
    """Deterministic outward scan for the closest free cell."""
    if grid.is_free(*cell):
        return cell
    cx, cy = cell
    for r in range(1, max_radius + 1):
        best = None
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                if max(abs(dx), abs(dy)) != r:
                    continue
                if grid.is_free(cx + dx, cy + dy):
                    d2 = dx * dx + dy * dy
                    if best is None or d2 < best[0]:
                        best = (d2, (cx + dx, cy + dy))
        if best is not None:
            return best[1]
    return None


def sample_waypoints(grid: GridMap, start: Vec2, rng: np.random.Generator,
                     n_goals: int = 3, spacing: int = 4) -> list[Vec2]:
    """Waypoint chain through free space reachable from start.

    Goal cells are drawn uniformly from start's free component; consecutive
    goals are joined with A* paths whose cells (every `spacing`-th, endpoints
    kept) become the waypoints.
    """
    start_cell = grid.world_to_cell(start)
    if not grid.in_bounds(*start_cell) or not grid.is_free(*start_cell):
        raise ValueError(f"waypoint sampling start {start} is not in free space")
    cells = component_cells(grid, start_cell)
    picks = []
    for _ in range(n_goals):
        ix, iy = cells[rng.integers(len(cells))]
        picks.append((int(ix), int(iy)))

    waypoints: list[Vec2] = []
    cur = start_cell
    for goal_cell in picks:
        path = astar(grid, cur, goal_cell)
        chain = path.cells[1:] if len(path.cells) > 1 else []
        for j, cell in enumerate(chain):
            if j % spacing == spacing - 1 or j == len(chain) - 1:
                waypoints.append(grid.cell_center(*cell))
        cur = goal_cell
    if not waypoints:
        waypoints.append(grid.cell_center(*start_cell))
    return waypoints


def spawn_crowd(world: WorldState, grid: GridMap, n: int,
                rng: np.random.Generator, params: SfmParams | None = None,
                radius: float = PED_RADIUS, max_speed: float = PED_MAX_SPEED,
                desired_speed: float = DESIRED_SPEED, tau: float = TAU,
                keep_clear: list[tuple[Vec2, float]] = ()) -> list[Pedestrian]:
    """Append n pedestrians to the world at distinct free cells with waypoints.

    keep_clear: (point, radius) exclusion zones, e.g. around a robot spawn.
    """
    free = np.argwhere(~grid.occupancy)  # rows of (iy, ix)
    if len(free) < n:
        raise ValueError(f"free space has {len(free)} cells, need {n}")
    order = rng.permutation(len(free))
    peds: list[Pedestrian] = []
    taken: list[Vec2] = []
    for k in order:
        if len(peds) == n:
            break
        iy, ix = map(int, free[k])
        p = grid.cell_center(ix, iy)
        if any((p - q).norm() < 2.2 * radius for q in taken):
            continue
        if any((p - q).norm() < rr for q, rr in keep_clear):
            continue
        body = Body(pose=Pose(p, float(rng.uniform(-math.pi, math.pi))),
                    velocity=Vec2(0.0, 0.0), radius=radius, max_speed=max_speed,
                    entity_class=EntityClass.PEDESTRIAN)
        idx = len(world.bodies)
        world.bodies.append(body)
        peds.append(Pedestrian(body=body, body_index=idx, desired_speed=desired_speed,
                               tau=tau, waypoints=sample_waypoints(grid, p, rng)))
        taken.append(p)
    if len(peds) < n:
        raise ValueError(f"could only place {len(peds)} of {n} pedestrians")
    return peds


def crowd_commands(peds: list[Pedestrian], world: WorldState, params: SfmParams,
                   rng: np.random.Generator | None) -> dict[int, Command]:
    """SFM accelerations as kinematics commands, keyed by body index."""
    forces = _crowd_forces(peds, world, params, rng)
    return {p.body_index: Command(accel=Vec2(float(fx), float(fy)))
            for p, (fx, fy) in zip(peds, forces)}


def update_waypoints(peds: list[Pedestrian], grid: GridMap | None,
                     rng: np.random.Generator | None, params: SfmParams) -> None:
    """Pop reached waypoints, resample exhausted queues, face the motion."""
    for ped in peds:
        p = ped.body.pose.position
        while ped.waypoints and (ped.waypoints[0] - p).norm() <= params.waypoint_radius:
            ped.waypoints.pop(0)
        if not ped.waypoints and grid is not None and rng is not None:
            cell = nearest_free_cell(grid, grid.world_to_cell(p))
            if cell is not None:
                ped.waypoints = sample_waypoints(grid, grid.cell_center(*cell), rng)
        v = ped.body.velocity
        if v.norm() > 1e-6:
            ped.body.pose = Pose(p, math.atan2(v.y, v.x))


def step_crowd(peds: list[Pedestrian], world: WorldState, params: SfmParams,
               rng: np.random.Generator | None = None,
               grid: GridMap | None = None) -> list[ContactEvent]:
    """One standalone crowd tick: forces, integration, projection, waypoints.

    Forces are computed from the pre-step snapshot for every pedestrian, then
    applied together (Jacobi update); speeds are clamped by the kinematics
    kernel and overlaps removed by positional projection.
    """
    cmds = crowd_commands(peds, world, params, rng)
    step_kinematics(world, cmds)
    events = resolve_collisions(world)
    update_waypoints(peds, grid, rng, params)
    return events
