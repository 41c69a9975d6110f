"""Baseline policies and the name -> factory registry.

MACS policies map a list of per-agent observations to an (n_agents, 2) thrust
array. Navigation policies map a robot observation to a (v, omega) command.
Factories are registered by name so runners can select policies from config.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Callable

import numpy as np

from ..core.geometry import Vec2
from ..core.world import EntityClass, Pose
from .astar import Path
from .local import (DwaParams, MppiParams, RobotState, dwa_control,
                    mppi_control)

if TYPE_CHECKING:
    from ..envs.macs import MacsEnv, MacsObs
    from ..envs.socialnav import RobotObs, SocialNavEnv

HAZARD_AVOID_RANGE = 1.5   # m, hazard rays closer than this repel
WALK_RESAMPLE_PERIOD = 20  # calls between random-walk direction changes
WALK_SPEED = 0.5           # thrust magnitude while random-walking


def random_policy(obs, rng: np.random.Generator) -> np.ndarray:
    """Uniform thrust on [-1, 1]^2; the observation is ignored."""
    return rng.uniform(-1.0, 1.0, size=2)


def _nearest_hit(obs: "MacsObs", entity_class: EntityClass,
                 max_range: float = np.inf) -> int | None:
    """Index of the closest ray hitting the given class, or None."""
    frame = obs.sensors
    best, best_d = None, max_range
    for k, cls in enumerate(frame.hit_classes):
        if cls is entity_class and frame.distances[k] < best_d:
            best, best_d = k, frame.distances[k]
    return best


class GreedyCoopPolicy:
    """Index-order groups of n_coop agents chase the group leader's nearest
    sensed supply; hazard rays within HAZARD_AVOID_RANGE repel; groups with
    no supply in view random-walk."""

    def __init__(self, n_agents: int, n_coop: int = 2,
                 rng: np.random.Generator | None = None):
        if n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        size = max(1, n_coop)
        self.groups = [tuple(range(i, min(i + size, n_agents)))
                       for i in range(0, n_agents, size)]
        self.rng = rng if rng is not None else np.random.default_rng()
        self._walk_dir = {g: self._draw_dir() for g in range(len(self.groups))}
        self._calls = 0

    def _draw_dir(self) -> np.ndarray:
        a = self.rng.uniform(-math.pi, math.pi)
        return np.array([math.cos(a), math.sin(a)]) * WALK_SPEED

    def __call__(self, observations: list["MacsObs"]) -> np.ndarray:
        n = sum(len(g) for g in self.groups)
        if len(observations) != n:
            raise ValueError(f"expected {n} observations, "
                             f"got {len(observations)}")
        if self._calls and self._calls % WALK_RESAMPLE_PERIOD == 0:
            self._walk_dir = {g: self._draw_dir()
                              for g in range(len(self.groups))}
        self._calls += 1

        thrust = np.zeros((n, 2))
        for gi, group in enumerate(self.groups):
            leader_obs = observations[group[0]]
            ray = _nearest_hit(leader_obs, EntityClass.SUPPLY)
            if ray is not None:
                ang = leader_obs.sensors.ray_angles()[ray]
                attract = np.array([math.cos(ang), math.sin(ang)])
            else:
                attract = self._walk_dir[gi]
            for agent in group:
                thrust[agent] = attract
        for agent, obs in enumerate(observations):
            frame = obs.sensors
            for k, cls in enumerate(frame.hit_classes):
                d = frame.distances[k]
                if cls is EntityClass.HAZARD and d < HAZARD_AVOID_RANGE:
                    ang = frame.ray_angles()[k]
                    push = (HAZARD_AVOID_RANGE - d) / HAZARD_AVOID_RANGE
                    thrust[agent] -= push * np.array([math.cos(ang),
                                                      math.sin(ang)])
        return np.clip(thrust, -1.0, 1.0)


def _line_path(a: Vec2, b: Vec2, spacing: float = 0.5) -> Path:
    length = (b - a).norm()
    n = max(2, int(length / spacing) + 1)
    ts = np.linspace(0.0, 1.0, n)
    wps = [Vec2(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)) for t in ts]
    return Path(waypoints=wps, cells=[], total_length=length)


class DwaNavigator:
    """Lidar-only waypoint follower built on dwa_control."""

    def __init__(self, start: Vec2, goal: Vec2,
                 params: DwaParams | None = None):
        self.params = params if params is not None else DwaParams()
        self.path = _line_path(start, goal)

    def __call__(self, obs: "RobotObs") -> tuple[float, float]:
        state = RobotState(pose=obs.pose, v=obs.velocity[0],
                           omega=obs.velocity[1])
        return dwa_control(state, self.path, obs.lidar, self.params)


class MppiNavigator:
    """Lidar-only waypoint follower built on mppi_control."""

    def __init__(self, start: Vec2, goal: Vec2, rng: np.random.Generator,
                 params: MppiParams | None = None):
        self.params = params if params is not None else MppiParams()
        self.path = _line_path(start, goal)
        self.rng = rng
        self.nominal: np.ndarray | None = None

    def __call__(self, obs: "RobotObs") -> tuple[float, float]:
        state = RobotState(pose=obs.pose, v=obs.velocity[0],
                           omega=obs.velocity[1])
        cmd, self.nominal = mppi_control(state, self.path, obs.lidar,
                                         self.params, self.rng,
                                         nominal=self.nominal)
        return cmd


class OracleNavigator:
    """Privileged controller: reads true pedestrian states from the
    environment and picks commands by short-horizon prediction.

    Scores a (v, omega) grid against constant-velocity pedestrian forecasts,
    penalizing proxemic intrusion and wall proximity while rewarding goal
    progress; an upper-bound reference, not a fair sensor-driven baseline.
    """

    V_CANDIDATES = np.linspace(0.0, 1.4, 8)      # m/s
    OMEGA_CANDIDATES = np.linspace(-2.0, 2.0, 17)  # rad/s
    HORIZON_STEPS = 15

    def __init__(self, env: "SocialNavEnv"):
        self.env = env
        self.goal = env.goal

    def __call__(self, obs: "RobotObs") -> tuple[float, float]:
        env = self.env
        sc = env.scenario
        dt = env.world.dt
        pose = obs.pose
        robot = env.robot

        vs, oms = np.meshgrid(self.V_CANDIDATES, self.OMEGA_CANDIDATES,
                              indexing="ij")
        vs, oms = vs.ravel(), oms.ravel()                    # (C,)
        t = np.arange(1, self.HORIZON_STEPS + 1) * dt        # (H,)
        headings = pose.heading + oms[:, None] * t[None, :]
        xs = pose.position.x + np.cumsum(vs[:, None] * np.cos(headings) * dt,
                                         axis=1)
        ys = pose.position.y + np.cumsum(vs[:, None] * np.sin(headings) * dt,
                                         axis=1)

        cost = np.zeros(len(vs))
        peds = env.world.bodies[1:]
        if peds:
            ppos = np.array([[b.pose.position.x, b.pose.position.y]
                             for b in peds])                  # (P, 2)
            pvel = np.array([[b.velocity.x, b.velocity.y] for b in peds])
            pred = ppos[None, :, :] + pvel[None, :, :] * t[:, None, None]
            dx = xs[:, :, None] - pred[None, :, :, 0]         # (C, H, P)
            dy = ys[:, :, None] - pred[None, :, :, 1]
            clear = np.hypot(dx, dy) - (robot.radius +
                                        np.array([b.radius for b in peds]))
            contact = (clear < 0.1).sum(axis=(1, 2))
            intimate = np.clip(0.45 - clear, 0.0, None).sum(axis=(1, 2))
            personal = np.clip(1.2 - clear, 0.0, None)
            cost += 500.0 * contact + 25.0 * intimate \
                + 0.6 * (personal ** 2).sum(axis=(1, 2))

        wall_limit = sc.arena_radius + 1.0 - robot.radius - 0.2
        overrun = np.clip(np.hypot(xs, ys) - wall_limit, 0.0, None)
        cost += 200.0 * overrun.sum(axis=1)

        goal = np.array([self.goal.x, self.goal.y])
        cost += 2.0 * np.hypot(xs[:, -1] - goal[0], ys[:, -1] - goal[1])
        cost += 0.02 * np.abs(oms)
        best = int(np.argmin(cost))
        return (float(vs[best]), float(oms[best]))


SCAN_STEPS = 21      # calls per in-place sweep (~one full turn at omega_max)
RELOCATE_STEPS = 14  # calls spent walking toward each sampled waypoint
RELOCATE_MIN = 1.0   # m, sampled relocation distance bounds
RELOCATE_MAX = 2.5


class ExplorationScanPolicy:
    """Chase the nearest visible paper; otherwise alternate in-place sweeps
    with short random relocations so coverage keeps growing."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self._phase = "scan"
        self._left = SCAN_STEPS
        self._target: Vec2 | None = None

    def __call__(self, obs):
        from ..envs.exploration import MoveTo, RotateTo

        pose = obs.pose
        if obs.papers_in_view:
            ego = min(obs.papers_in_view, key=lambda p: p.norm())
            c, s = math.cos(pose.heading), math.sin(pose.heading)
            world = Vec2(pose.position.x + c * ego.x - s * ego.y,
                         pose.position.y + s * ego.x + c * ego.y)
            self._phase, self._left = "scan", SCAN_STEPS
            return MoveTo(world)

        if self._left <= 0:
            if self._phase == "scan":
                self._phase, self._left = "move", RELOCATE_STEPS
                ang = self.rng.uniform(0.0, 2.0 * math.pi)
                d = self.rng.uniform(RELOCATE_MIN, RELOCATE_MAX)
                self._target = Vec2(pose.position.x + d * math.cos(ang),
                                    pose.position.y + d * math.sin(ang))
            else:
                self._phase, self._left = "scan", SCAN_STEPS
        self._left -= 1
        if self._phase == "scan":
            return RotateTo(pose.heading + 0.9)
        return MoveTo(self._target)


PolicyFactory = Callable[[object, np.random.Generator], object]

_REGISTRY: dict[str, PolicyFactory] = {}


def register_policy(name: str, factory: PolicyFactory, *,
                    overwrite: bool = False) -> None:
    if not overwrite and name in _REGISTRY:
        raise ValueError(f"policy {name!r} is already registered")
    _REGISTRY[name] = factory


def make_policy(name: str, env, rng: np.random.Generator):
    """Instantiate a registered policy for a freshly reset environment."""
    if name not in _REGISTRY:
        known = ", ".join(sorted(_REGISTRY))
        raise KeyError(f"unknown policy {name!r}; registered: {known}")
    return _REGISTRY[name](env, rng)


def available_policies() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def _make_random(env: "MacsEnv", rng: np.random.Generator):
    n = env.config.n_agents
    return lambda obs: np.array([random_policy(o, rng) for o in obs])


def _make_greedy_coop(env: "MacsEnv", rng: np.random.Generator):
    return GreedyCoopPolicy(env.config.n_agents, env.config.n_coop, rng)


def _make_dwa(env: "SocialNavEnv", rng: np.random.Generator):
    return DwaNavigator(env.robot.pose.position, env.goal)


def _make_mppi(env: "SocialNavEnv", rng: np.random.Generator):
    return MppiNavigator(env.robot.pose.position, env.goal, rng)


def _make_oracle(env: "SocialNavEnv", rng: np.random.Generator):
    return OracleNavigator(env)


def _make_explore_scan(env, rng: np.random.Generator):
    return ExplorationScanPolicy(rng)


register_policy("random", _make_random)
register_policy("explore_scan", _make_explore_scan)
register_policy("greedy_coop", _make_greedy_coop)
register_policy("dwa", _make_dwa)
register_policy("mppi", _make_mppi)
register_policy("oracle", _make_oracle)
