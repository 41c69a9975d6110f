"""Paper-ball cleanup: explore a multi-room map, collect all papers in time.

Navigation-level actions: MoveTo(target) advances one fixed-length increment
(default 0.25 m) along an A* path on the agent-inflated grid; RotateTo turns
by at most omega_max*dt. Papers within pickup_radius of the agent center are
collected automatically. An episode succeeds when no papers remain within
T_max steps (success at exactly T_max counts).

Papers are plain points, not collision bodies: collection happens by
proximity overlap, which a contact resolver would otherwise forbid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..core.geometry import Vec2, ray_segment_intersection, wrap_angle
from ..core.grid import (
    GridMap,
    component_cells,
    egocentric_patch,
    inflate,
    rasterize,
)
from ..core.rng import make_rng
from ..core.world import (
    Body,
    Command,
    ContactEvent,
    EntityClass,
    Pose,
    WorldState,
    resolve_collisions,
    step_kinematics,
)
from ..crowd import nearest_free_cell
from ..planners.astar import PlannerError, astar
from .mapgen import FloorPlan, fill_rect, generate_floor_plan

PATCH_CELLS = 19        # egocentric occupancy patch is 19x19
PATCH_EXTENT_M = 2.08   # m, side length the patch covers
NAV_CELL_SIZE = 0.05    # m, planning/observation grid resolution
AGENT_RADIUS = 0.2      # m (config default; not a reported value)
PICKUP_RADIUS = 0.3     # m, center distance at which a paper is collected
STEP_LENGTH = 0.25      # m advanced per MoveTo step
OMEGA_MAX = math.pi     # rad/s, RotateTo turn rate limit
SENSOR_RANGE = 3.0      # m, papers_in_view cutoff
T_MAX_DEFAULT = 500     # steps
DT = 0.1                # s


@dataclass(frozen=True)
class MoveTo:
    target: Vec2


@dataclass(frozen=True)
class RotateTo:
    heading: float


ExplorationAction = MoveTo | RotateTo


@dataclass(frozen=True)
class Collected:
    paper_index: int
    position: Vec2
    step: int


@dataclass(frozen=True)
class Collision:
    body_index: int
    step: int


@dataclass(frozen=True)
class Terminated:
    success: bool
    steps: int


@dataclass(frozen=True)
class EpisodeOutcome:
    success: bool
    steps: int


@dataclass
class ExplorationConfig:
    width: float = 8.0
    height: float = 8.0
    rooms_min: int = 3
    rooms_max: int = 5
    furniture_max: int = 2
    n_papers: int = 5
    t_max: int = T_MAX_DEFAULT
    agent_radius: float = AGENT_RADIUS
    pickup_radius: float = PICKUP_RADIUS
    step_length: float = STEP_LENGTH
    omega_max: float = OMEGA_MAX
    sensor_range: float = SENSOR_RANGE
    seed: int = 0
    floor_plan: FloorPlan | None = None  # fixed map override (skips generation)

    def __post_init__(self):
        if self.n_papers < 1:
            raise ValueError("n_papers must be >= 1")
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")
        if self.agent_radius <= 0 or self.step_length <= 0:
            raise ValueError("agent_radius and step_length must be positive")


@dataclass(frozen=True)
class ExplorationObs:
    patch: np.ndarray          # (19, 19) bool, row 0 = far forward
    pose: Pose
    papers_in_view: list[Vec2]  # agent-frame offsets, range + line-of-sight
    steps_used: int


def place_papers(grid: GridMap, spawn_cell: tuple[int, int], n: int,
                 rng: np.random.Generator) -> list[Vec2]:
    """Uniform paper positions over spawn's free component (spawn excluded).

    grid must already be inflated by the agent radius, so every returned
    center keeps at least that clearance from obstacles.
    """
    cells = component_cells(grid, spawn_cell)
    mask = ~((cells[:, 0] == spawn_cell[0]) & (cells[:, 1] == spawn_cell[1]))
    cells = cells[mask]
    if len(cells) < n:
        raise ValueError(
            f"free component has {len(cells)} cells besides spawn, need {n}")
    picks = rng.choice(len(cells), size=n, replace=False)
    return [grid.cell_center(int(cells[k][0]), int(cells[k][1])) for k in picks]


class ExplorationEnv:
    def __init__(self, config: ExplorationConfig | None = None):
        self.config = config or ExplorationConfig()
        self.world: WorldState | None = None
        self.plan: FloorPlan | None = None
        self.grid: GridMap | None = None          # raw occupancy
        self.nav_grid: GridMap | None = None      # inflated by agent_radius
        self.papers: list[Vec2] = []
        self.steps_used = 0
        self._terminated = False
        self._success = False
        self._cached_target: Vec2 | None = None
        self._cached_path: list[Vec2] = []
        self._component_cache: dict[tuple[int, int], set[tuple[int, int]]] = {}

    @property
    def agent(self) -> Body:
        return self.world.bodies[0]

    def reset(self, seed: int | None = None) -> ExplorationObs:
        cfg = self.config
        rng = make_rng(cfg.seed if seed is None else seed)
        plan = cfg.floor_plan or generate_floor_plan(
            rng, cfg.width, cfg.height, cfg.rooms_min, cfg.rooms_max,
            cfg.furniture_max)

        world = WorldState(bodies=[], obstacles=plan.segments(), dt=DT,
                           rng=make_rng(cfg.seed if seed is None else seed, 1))
        bounds = (plan.bounds.xmin, plan.bounds.ymin,
                  plan.bounds.xmax, plan.bounds.ymax)
        grid = rasterize(world, NAV_CELL_SIZE, bounds)
        for rect in plan.furniture:
            fill_rect(grid, rect)
        nav = inflate(grid, cfg.agent_radius)

        # Spawn in the largest free component so papers get room to scatter.
        labels, count = ndimage.label(~nav.occupancy,
                                      structure=[[0, 1, 0], [1, 1, 1], [0, 1, 0]])
        if count == 0:
            raise ValueError("map has no free space after inflation")
        sizes = np.bincount(labels.ravel())[1:]
        main = int(np.argmax(sizes)) + 1
        cells = np.argwhere(labels == main)  # rows (iy, ix)
        if len(cells) < cfg.n_papers + 1:
            raise ValueError(
                f"largest free component has {len(cells)} cells, need "
                f"{cfg.n_papers + 1} for agent and papers")
        iy, ix = map(int, cells[rng.integers(len(cells))])
        spawn = nav.cell_center(ix, iy)
        heading = float(rng.uniform(-math.pi, math.pi))

        agent = Body(pose=Pose(spawn, heading), velocity=Vec2(0.0, 0.0),
                     radius=cfg.agent_radius,
                     max_speed=cfg.step_length / DT,
                     entity_class=EntityClass.AGENT)
        world.bodies.append(agent)

        self.world = world
        self.plan = plan
        self.grid = grid
        self.nav_grid = nav
        self.papers = place_papers(nav, (ix, iy), cfg.n_papers, rng)
        self.steps_used = 0
        self._terminated = False
        self._success = False
        self._cached_target = None
        self._cached_path = []
        self._component_cache = {}
        return self._observe()

    def step(self, action: ExplorationAction
             ) -> tuple[ExplorationObs, list[object]]:
        if self.world is None:
            raise RuntimeError("reset() must be called before step()")
        if self._terminated:
            raise RuntimeError("episode terminated; call reset()")

        if isinstance(action, MoveTo):
            contacts = self._move_step(action.target)
        elif isinstance(action, RotateTo):
            contacts = self._rotate_step(action.heading)
        else:
            raise TypeError(f"unknown action {action!r}")

        self.steps_used += 1
        events: list[object] = [
            Collision(body_index=e.body_a, step=self.steps_used)
            for e in contacts]

        pos = self.agent.pose.position
        kept: list[Vec2] = []
        for i, paper in enumerate(self.papers):
            if (paper - pos).norm() <= self.config.pickup_radius:
                events.append(Collected(paper_index=i, position=paper,
                                        step=self.steps_used))
            else:
                kept.append(paper)
        self.papers = kept

        if not self.papers:
            self._terminated, self._success = True, True
        elif self.steps_used >= self.config.t_max:
            self._terminated, self._success = True, False
        if self._terminated:
            events.append(Terminated(success=self._success,
                                     steps=self.steps_used))
        return self._observe(), events

    def episode_outcome(self) -> EpisodeOutcome:
        if self.world is None or not self._terminated:
            raise RuntimeError("episode_outcome() requires a terminated episode")
        return EpisodeOutcome(success=self._success, steps=self.steps_used)

    # -- internals ---------------------------------------------------------

    def _move_step(self, target: Vec2) -> list[ContactEvent]:
        agent = self.agent
        start = agent.pose.position
        if (self._cached_target is None
                or (self._cached_target - target).norm() > 1e-9):
            self._cached_target = target
            self._cached_path = self._plan_path(start, target)
        path = self._prune_path(start, self._cached_path)

        remaining = self.config.step_length
        pos = start
        for i, wp in enumerate(path):
            leg = wp - pos
            d = leg.norm()
            if d > remaining:
                pos = pos + leg * (remaining / d)
                self._cached_path = path[i:]
                remaining = 0.0
                break
            pos = pos + leg
            remaining -= d
        else:
            self._cached_path = []

        delta = pos - start
        if delta.norm() > 1e-12:
            agent.pose = Pose(start, math.atan2(delta.y, delta.x))
            agent.velocity = delta * (1.0 / self.world.dt)
        else:
            agent.velocity = Vec2(0.0, 0.0)
        step_kinematics(self.world, {})
        contacts = resolve_collisions(self.world)
        agent.velocity = Vec2(0.0, 0.0)
        return contacts

    def _rotate_step(self, heading: float) -> list[ContactEvent]:
        agent = self.agent
        delta = wrap_angle(heading - agent.pose.heading)
        limit = self.config.omega_max * self.world.dt
        turn = max(-limit, min(limit, delta))
        step_kinematics(self.world, {0: Command(omega=turn / self.world.dt)})
        return resolve_collisions(self.world)

    def _plan_path(self, start: Vec2, target: Vec2) -> list[Vec2]:
        nav = self.nav_grid
        start_cell = self._free_cell_near(start)
        if start_cell is None:
            return []
        goal_cell = self._clip_goal(start, target, start_cell)
        if goal_cell is None or goal_cell == start_cell:
            return []
        try:
            path = astar(nav, start_cell, goal_cell)
        except PlannerError:
            return []
        return path.waypoints

    def _clip_goal(self, start: Vec2, target: Vec2,
                   start_cell: tuple[int, int]) -> tuple[int, int] | None:
        """Last free, reachable cell along the straight start->target line."""
        nav = self.nav_grid
        reach = self._component_set(start_cell)
        span = (target - start).norm()
        n = max(1, int(math.ceil(span / nav.cell_size)))
        best = None
        for k in range(n + 1):
            p = start + (target - start) * (k / n)
            cell = nav.world_to_cell(p)
            if nav.is_free(*cell) and cell in reach:
                best = cell
            elif best is not None and not nav.is_free(*cell):
                break  # hit the wall; stop at the last free cell before it
        return best

    def _component_set(self, cell: tuple[int, int]) -> set[tuple[int, int]]:
        if cell not in self._component_cache:
            cells = component_cells(self.nav_grid, cell)
            comp = {(int(ix), int(iy)) for ix, iy in cells}
            for c in comp:
                self._component_cache[c] = comp
        return self._component_cache[cell]

    @staticmethod
    def _prune_path(pos: Vec2, path: list[Vec2]) -> list[Vec2]:
        """Drop leading waypoints already reached (within half a cell)."""
        i = 0
        while i < len(path) and (path[i] - pos).norm() < NAV_CELL_SIZE / 2:
            i += 1
        return path[i:]

    def _free_cell_near(self, p: Vec2) -> tuple[int, int] | None:
        nav = self.nav_grid
        cell = nav.world_to_cell(p)
        return cell if nav.is_free(*cell) else nearest_free_cell(nav, cell)

    def _observe(self) -> ExplorationObs:
        agent = self.agent
        pose = agent.pose
        patch = egocentric_patch(self.grid, pose.position, pose.heading,
                                 PATCH_CELLS, PATCH_EXTENT_M)
        visible: list[Vec2] = []
        for paper in self.papers:
            delta = paper - pose.position
            d = delta.norm()
            if d > self.config.sensor_range:
                continue
            if d > 1e-9 and not self._line_of_sight(pose.position, paper, d):
                continue
            visible.append(delta.rotated(-pose.heading))
        return ExplorationObs(patch=patch, pose=pose,
                              papers_in_view=visible,
                              steps_used=self.steps_used)

    def _line_of_sight(self, a: Vec2, b: Vec2, dist: float) -> bool:
        direction = (b - a) * (1.0 / dist)
        for seg in self.world.obstacles:
            t = ray_segment_intersection(a, direction, seg)
            if t is not None and t < dist - 1e-9:
                return False
        return True
