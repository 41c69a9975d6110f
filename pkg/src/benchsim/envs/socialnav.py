"""Robot-in-crowd point-goal navigation with proxemic intrusion sampling.

A differential-drive robot crosses a circular arena populated by SFM
pedestrians. Start and goal sit on the arena circle with a configured
minimum separation (diametric at the default 40 m = 2r). An evaluation
sampler runs every ceil(0.5/dt) steps (2 Hz) and logs Type1/Type2 intrusion
events by surface clearance; collisions are logged on contact entry.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..core.geometry import Segment, Vec2, unit
from ..core.grid import GridMap, inflate, rasterize
from ..core.rng import make_rng
from ..core.sensors import SensorFrame, cast_rays
from ..core.world import (
    Body,
    Command,
    EntityClass,
    Pose,
    WorldState,
    resolve_collisions,
    step_kinematics,
)
from ..crowd import (
    PED_RADIUS,
    Pedestrian,
    SfmParams,
    crowd_commands,
    spawn_crowd,
    update_waypoints,
)

DT = 0.1                  # s
WALL_OFFSET = 1.0         # m, boundary polygon inradius beyond the arena circle
WALL_VERTICES = 48        # boundary polygon vertex count
CROWD_CELL_SIZE = 0.25    # m, waypoint-sampling grid resolution
TYPE1_CLEARANCE = 0.45    # m, personal-space violation threshold
TYPE2_CLEARANCE = 1.2     # m, social-zone violation threshold
PROXEMICS_PERIOD_S = 0.5  # s, evaluation sampling period (2 Hz)


class IntrusionType(enum.Enum):
    TYPE1 = "type1"
    TYPE2 = "type2"


@dataclass(frozen=True)
class IntrusionEvent:
    t: float
    type: IntrusionType
    pedestrian_index: int


@dataclass(frozen=True)
class CollisionEvent:
    t: float
    pedestrian_index: int | None  # None = boundary wall


@dataclass(frozen=True)
class GoalReached:
    t: float


@dataclass(frozen=True)
class Timeout:
    t: float


@dataclass
class SocialNavScenario:
    arena_radius: float = 20.0        # m
    n_pedestrians: int = 30
    min_start_goal_dist: float = 40.0  # m
    t_max_wall: float = 120.0          # s, sim-time budget at fixed dt
    v_max: float = 2.0                 # m/s
    omega_max: float = 2.0             # rad/s
    robot_radius: float = 0.3          # m
    goal_radius: float = 0.5           # m, completion distance
    lidar_rays: int = 72
    lidar_range: float = 10.0          # m
    seed: int = 0
    sfm: SfmParams = field(default_factory=SfmParams)

    def __post_init__(self):
        if self.min_start_goal_dist > 2 * self.arena_radius:
            raise ValueError(
                f"min_start_goal_dist {self.min_start_goal_dist} exceeds the "
                f"arena diameter {2 * self.arena_radius}")
        if self.arena_radius <= 0 or self.v_max <= 0 or self.omega_max <= 0:
            raise ValueError("arena_radius, v_max, omega_max must be positive")
        if self.n_pedestrians < 0:
            raise ValueError("n_pedestrians must be >= 0")


@dataclass(frozen=True)
class RobotObs:
    lidar: SensorFrame
    goal_relative: Vec2   # robot frame
    pose: Pose
    velocity: tuple[float, float]  # applied (v, omega)


@dataclass(frozen=True)
class SocialNavSummary:
    success: bool
    t_actual: float        # s
    collisions: int        # contact-entry count
    f1: float              # fraction of samples with a Type1 intrusion
    f2: float              # fraction of samples with a Type2 (and no Type1)
    t_min: float           # s, straight-line time at v_max
    t_max: float           # s, scenario budget


def classify_clearance(d: float) -> IntrusionType | None:
    """Intrusion band for a surface clearance d (m)."""
    if d < TYPE1_CLEARANCE:
        return IntrusionType.TYPE1
    if d <= TYPE2_CLEARANCE:
        return IntrusionType.TYPE2
    return None


def sample_proxemics(robot: Body, pedestrians: list[Body],
                     t: float) -> list[IntrusionEvent]:
    """One event per pedestrian currently inside an intrusion band.

    Clearance is surface distance: center distance minus both radii.
    """
    events = []
    for k, ped in enumerate(pedestrians):
        d = (ped.pose.position - robot.pose.position).norm() \
            - robot.radius - ped.radius
        band = classify_clearance(d)
        if band is not None:
            events.append(IntrusionEvent(t=t, type=band, pedestrian_index=k))
    return events


def _boundary_polygon(inradius: float, n: int) -> list[Vec2]:
    rv = inradius / math.cos(math.pi / n)
    return [Vec2(rv * math.cos(2 * math.pi * k / n),
                 rv * math.sin(2 * math.pi * k / n)) for k in range(n)]


class SocialNavEnv:
    def __init__(self, scenario: SocialNavScenario | None = None):
        self.scenario = scenario or SocialNavScenario()
        self.world: WorldState | None = None
        self.peds: list[Pedestrian] = []
        self.grid: GridMap | None = None
        self.goal: Vec2 | None = None
        self.start: Vec2 | None = None
        self.steps_used = 0
        self._rng: np.random.Generator | None = None
        self._terminated = False
        self._success = False
        self._collisions = 0
        self._contacts_prev: set = set()
        self._samples = 0
        self._samples_type1 = 0
        self._samples_type2 = 0
        self._last_cmd = (0.0, 0.0)

    @property
    def robot(self) -> Body:
        return self.world.bodies[0]

    def reset(self, seed: int | None = None) -> RobotObs:
        sc = self.scenario
        base = sc.seed if seed is None else seed
        rng = make_rng(base)
        self._rng = make_rng(base, 1)

        verts = _boundary_polygon(sc.arena_radius + WALL_OFFSET, WALL_VERTICES)
        walls = [Segment(verts[k], verts[(k + 1) % len(verts)])
                 for k in range(len(verts))]
        world = WorldState(bodies=[], obstacles=walls, dt=DT,
                           rng=make_rng(base, 2))

        theta = float(rng.uniform(-math.pi, math.pi))
        r = sc.arena_radius
        # Angular separation that guarantees the chord >= min start-goal dist.
        dphi_min = 2.0 * math.asin(min(1.0, sc.min_start_goal_dist / (2 * r)))
        phi = float(rng.uniform(dphi_min, 2 * math.pi - dphi_min))
        start = unit(theta) * r
        goal = unit(theta + phi) * r
        heading = math.atan2(goal.y - start.y, goal.x - start.x)

        robot = Body(pose=Pose(start, heading), velocity=Vec2(0.0, 0.0),
                     radius=sc.robot_radius, max_speed=sc.v_max,
                     entity_class=EntityClass.ROBOT)
        world.bodies.append(robot)

        outer = sc.arena_radius + WALL_OFFSET
        grid = rasterize(world, CROWD_CELL_SIZE,
                         (-outer - 1.0, -outer - 1.0, outer + 1.0, outer + 1.0))
        self._mask_outside_circle(grid, outer)
        grid = inflate(grid, PED_RADIUS)
        self.peds = spawn_crowd(world, grid, sc.n_pedestrians, rng,
                                keep_clear=[(start, 1.0)]) \
            if sc.n_pedestrians else []

        self.world = world
        self.grid = grid
        self.goal = goal
        self.start = start
        self.steps_used = 0
        self._terminated = False
        self._success = False
        self._collisions = 0
        self._contacts_prev = set()
        self._samples = 0
        self._samples_type1 = 0
        self._samples_type2 = 0
        self._last_cmd = (0.0, 0.0)
        return self._observe()

    def step(self, cmd: tuple[float, float]) -> tuple[RobotObs, list[object]]:
        sc = self.scenario
        if self.world is None:
            raise RuntimeError("reset() must be called before step()")
        if self._terminated:
            raise RuntimeError("episode terminated; call reset()")

        v = min(max(float(cmd[0]), 0.0), sc.v_max)
        omega = min(max(float(cmd[1]), -sc.omega_max), sc.omega_max)
        self._last_cmd = (v, omega)

        robot = self.robot
        new_heading = robot.pose.heading + omega * self.world.dt
        robot.velocity = unit(new_heading) * v
        commands = crowd_commands(self.peds, self.world, sc.sfm, self._rng) \
            if self.peds else {}
        commands[0] = Command(omega=omega)
        step_kinematics(self.world, commands)
        contacts = resolve_collisions(self.world)
        update_waypoints(self.peds, self.grid, self._rng, sc.sfm)
        self.steps_used += 1
        t = self.world.clock

        events: list[object] = []
        current: set = set()
        for ev in contacts:
            if ev.body_a != 0 and ev.body_b != 0:
                continue
            if ev.segment is not None:
                key = ("wall", ev.segment)
                ped_index = None
            else:
                other = ev.body_b if ev.body_a == 0 else ev.body_a
                key = ("body", other)
                ped_index = other - 1  # pedestrians follow the robot
            current.add(key)
            if key not in self._contacts_prev:
                self._collisions += 1
                events.append(CollisionEvent(t=t, pedestrian_index=ped_index))
        self._contacts_prev = current

        period_steps = max(1, math.ceil(PROXEMICS_PERIOD_S / self.world.dt))
        if self.steps_used % period_steps == 0:
            intrusions = sample_proxemics(
                robot, [p.body for p in self.peds], t)
            events.extend(intrusions)
            self._samples += 1
            kinds = {e.type for e in intrusions}
            if IntrusionType.TYPE1 in kinds:
                self._samples_type1 += 1
            elif IntrusionType.TYPE2 in kinds:
                self._samples_type2 += 1

        if (robot.pose.position - self.goal).norm() <= sc.goal_radius:
            self._terminated, self._success = True, True
            events.append(GoalReached(t=t))
        elif t >= sc.t_max_wall:
            self._terminated, self._success = True, False
            events.append(Timeout(t=t))
        return self._observe(), events

    def abort(self) -> None:
        """End the episode unsuccessfully (operator stop)."""
        if self.world is None or self._terminated:
            return
        self._terminated = True
        self._success = False

    def episode_summary(self) -> SocialNavSummary:
        if self.world is None or not self._terminated:
            raise RuntimeError("episode_summary() requires a finished episode")
        sc = self.scenario
        n = max(1, self._samples)
        return SocialNavSummary(
            success=self._success,
            t_actual=self.world.clock,
            collisions=self._collisions,
            f1=self._samples_type1 / n,
            f2=self._samples_type2 / n,
            t_min=(self.goal - self.start).norm() / sc.v_max,
            t_max=sc.t_max_wall)

    # -- helpers -------------------------------------------------------------

    @staticmethod
    def _mask_outside_circle(grid: GridMap, radius: float) -> None:
        xs = grid.origin.x + (np.arange(grid.width) + 0.5) * grid.cell_size
        ys = grid.origin.y + (np.arange(grid.height) + 0.5) * grid.cell_size
        dist2 = xs[None, :] ** 2 + ys[:, None] ** 2
        grid.occupancy |= dist2 > radius * radius

    def _observe(self) -> RobotObs:
        sc = self.scenario
        robot = self.robot
        lidar = cast_rays(self.world, 0, sc.lidar_rays, sc.lidar_range)
        rel = (self.goal - robot.pose.position).rotated(-robot.pose.heading)
        return RobotObs(lidar=lidar, goal_relative=rel, pose=robot.pose,
                        velocity=self._last_cmd)

    @property
    def terminated(self) -> bool:
        return self._terminated

    @property
    def success(self) -> bool:
        return self._success
