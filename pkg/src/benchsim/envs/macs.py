"""Multi-agent cooperative search: collect supplies together, avoid hazards.

Agents steer with 2-D thrust in [-1, 1]^2. A supply touched by at least
n_coop agents in the same step is captured; touching with fewer agents earns
a small encounter reward; hazard contact costs. Every event reward is split:
a local_ratio fraction divided equally among the involved agents, the rest
shared equally by the whole team. Touch = contact reported by the collision
resolver this step, so agents must actively press against an entity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..core.geometry import Vec2, point_segment_distance
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
from .mapgen import Rect

DT = 0.1                 # s
AGENT_RADIUS = 0.25      # m
AGENT_MAX_SPEED = 1.0    # m/s
THRUST_GAIN = 2.0        # m/s^2 acceleration at |thrust| = 1
SUPPLY_RADIUS = 0.35     # m
HAZARD_RADIUS = 0.3      # m
HAZARD_SPEED_FRACTION = 0.5   # of agent max speed
HAZARD_REDRAW_PERIOD = 10     # steps between drift-velocity resamples
ARENA_HALF = 10.0        # m, square arena spans [-10, 10]^2
N_ARENA_OBSTACLES = 4
PLACEMENT_GAP = 0.05     # m, clearance between spawned entities

ONE_HOT_CLASSES = (EntityClass.AGENT, EntityClass.SUPPLY,
                   EntityClass.HAZARD, EntityClass.OBSTACLE)


@dataclass
class MacsConfig:
    n_agents: int = 5
    n_supplies: int = 10
    n_hazards: int = 10
    n_coop: int = 2
    n_sensors: int = 30
    sensor_range: float = 5.0    # m
    max_cycles: int = 500
    supply_reward: float = 10.0
    hazard_reward: float = -1.0
    encounter_reward: float = 0.01
    thrust_penalty: float = -0.01
    local_ratio: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        if self.max_cycles < 1:
            raise ValueError("max_cycles must be >= 1")
        if not 0.0 <= self.local_ratio <= 1.0:
            raise ValueError("local_ratio must be in [0, 1]")
        if self.n_coop < 1:
            raise ValueError("n_coop must be >= 1")
        if self.n_coop > self.n_agents:
            warnings.warn(
                f"n_coop={self.n_coop} exceeds n_agents={self.n_agents}: "
                "no capture is possible", stacklevel=2)


@dataclass(frozen=True)
class MacsObs:
    sensors: SensorFrame
    own_velocity: Vec2
    touching_supply: bool
    touching_hazard: bool

    def class_one_hot(self) -> np.ndarray:
        """Per-ray hit class as (n_rays, 4) one-hot over
        {agent, supply, hazard, obstacle}; misses are all-zero rows."""
        out = np.zeros((self.sensors.n_rays, len(ONE_HOT_CLASSES)))
        for i, cls in enumerate(self.sensors.hit_classes):
            if cls in ONE_HOT_CLASSES:
                out[i, ONE_HOT_CLASSES.index(cls)] = 1.0
        return out


@dataclass(frozen=True)
class AgentReward:
    local: float
    global_share: float
    thrust: float

    @property
    def total(self) -> float:
        return self.local + self.global_share + self.thrust


@dataclass(frozen=True)
class RewardBreakdown:
    per_agent: list[AgentReward]

    def totals(self) -> list[float]:
        return [r.total for r in self.per_agent]


@dataclass(frozen=True)
class CaptureEvent:
    supply_id: int
    agents: tuple[int, ...]
    value: float
    step: int


@dataclass(frozen=True)
class EncounterEvent:
    supply_id: int
    agent: int
    value: float
    step: int


@dataclass(frozen=True)
class HazardContactEvent:
    hazard_id: int
    agent: int
    value: float
    step: int


def split_event_reward(value: float, involved: tuple[int, ...], n_agents: int,
                       local_ratio: float) -> tuple[np.ndarray, np.ndarray]:
    """(local, global) per-agent credit arrays for one event.

    local_ratio of the value splits equally among involved agents; the rest
    is shared equally by everyone, so the credits sum back to value.
    """
    local = np.zeros(n_agents)
    if involved:
        local[list(involved)] = local_ratio * value / len(involved)
    glob = np.full(n_agents, (1.0 - local_ratio) * value / n_agents)
    return local, glob


def mean_episodic_return(records: list, n_agents: int
                         ) -> tuple[float, float]:
    """(mean episodic return, mean per-step reward) over episode records.

    Return of one episode = sum over steps and agents of reward / n_agents
    (team total normalized by population). Records must carry per-step
    per-agent rewards in record.steps[i].rewards.
    """
    if not records:
        raise ValueError("mean_episodic_return needs at least one record")
    if n_agents < 1:
        raise ValueError("n_agents must be >= 1")
    returns, lengths = [], []
    for rec in records:
        rows = [row.rewards for row in rec.steps if row.rewards is not None]
        returns.append(sum(sum(r) for r in rows) / n_agents)
        lengths.append(len(rows))
    mean_return = float(np.mean(returns))
    mean_len = float(np.mean(lengths))
    mean_step = mean_return / mean_len if mean_len > 0 else 0.0
    return mean_return, mean_step


def _arena_obstacles(rng: np.random.Generator) -> list[Rect]:
    rects: list[Rect] = []
    for _ in range(N_ARENA_OBSTACLES):
        for _ in range(20):
            w, h = rng.uniform(1.0, 3.0, size=2)
            cx, cy = rng.uniform(-ARENA_HALF + 3.0, ARENA_HALF - 3.0, size=2)
            rect = Rect(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)
            pad = 1.0  # keep channels between obstacles passable
            if all(rect.xmax + pad < o.xmin or o.xmax + pad < rect.xmin
                   or rect.ymax + pad < o.ymin or o.ymax + pad < rect.ymin
                   for o in rects):
                rects.append(rect)
                break
    return rects


class MacsEnv:
    def __init__(self, config: MacsConfig | None = None):
        self.config = config or MacsConfig()
        self.world: WorldState | None = None
        self.obstacle_rects: list[Rect] = []
        self.supplies: list[tuple[int, Body]] = []  # (supply_id, body)
        self.hazards: list[tuple[int, Body]] = []
        self.steps_used = 0
        self.last_events: list[object] = []
        self._rng: np.random.Generator | None = None
        self._done = False
        self._touching: tuple[set[int], set[int]] = (set(), set())

    # -- setup ---------------------------------------------------------------

    def reset(self, seed: int | None = None) -> list[MacsObs]:
        cfg = self.config
        base = cfg.seed if seed is None else seed
        rng = make_rng(base)
        self._rng = make_rng(base, 1)

        self.obstacle_rects = _arena_obstacles(rng)
        walls = Rect(-ARENA_HALF, -ARENA_HALF, ARENA_HALF, ARENA_HALF).edges()
        obstacles = list(walls)
        for rect in self.obstacle_rects:
            obstacles.extend(rect.edges())

        world = WorldState(bodies=[], obstacles=obstacles, dt=DT,
                           rng=make_rng(base, 2))
        placed: list[tuple[Vec2, float]] = []

        def place(radius: float, entity_class: EntityClass,
                  max_speed: float) -> Body:
            for _ in range(2000):
                x, y = rng.uniform(-ARENA_HALF + radius + PLACEMENT_GAP,
                                   ARENA_HALF - radius - PLACEMENT_GAP, size=2)
                p = Vec2(float(x), float(y))
                if any(r.contains(p, margin=-(radius + PLACEMENT_GAP))
                       for r in self.obstacle_rects):
                    continue
                if any(point_segment_distance(p, s) < radius + PLACEMENT_GAP
                       for s in obstacles):
                    continue
                if any((p - q).norm() < radius + r0 + PLACEMENT_GAP
                       for q, r0 in placed):
                    continue
                placed.append((p, radius))
                return Body(pose=Pose(p, 0.0), velocity=Vec2(0.0, 0.0),
                            radius=radius, max_speed=max_speed,
                            entity_class=entity_class)
            raise ValueError("arena too small for the configured entity count")

        agents = [place(AGENT_RADIUS, EntityClass.AGENT, AGENT_MAX_SPEED)
                  for _ in range(cfg.n_agents)]
        self.supplies = [(k, place(SUPPLY_RADIUS, EntityClass.SUPPLY, 1.0))
                         for k in range(cfg.n_supplies)]
        self.hazards = [(k, place(HAZARD_RADIUS, EntityClass.HAZARD,
                                  HAZARD_SPEED_FRACTION * AGENT_MAX_SPEED))
                        for k in range(cfg.n_hazards)]
        world.bodies = agents + [b for _, b in self.supplies] \
            + [b for _, b in self.hazards]
        self.world = world
        self.steps_used = 0
        self.last_events = []
        self._done = False
        self._touching = (set(), set())
        self._drift_hazards()
        return [self._observe(i) for i in range(cfg.n_agents)]

    # -- stepping ------------------------------------------------------------

    def step(self, actions: list) -> tuple[list[MacsObs], RewardBreakdown,
                                           list[bool]]:
        cfg = self.config
        if self.world is None:
            raise RuntimeError("reset() must be called before step()")
        if self._done:
            raise RuntimeError("episode done; call reset()")
        if len(actions) != cfg.n_agents:
            raise ValueError(
                f"expected {cfg.n_agents} actions, got {len(actions)}")

        rows = [(a.x, a.y) if isinstance(a, Vec2) else a for a in actions]
        thrusts = np.clip(np.asarray(rows, dtype=float).reshape(-1, 2),
                          -1.0, 1.0)
        if self.steps_used and self.steps_used % HAZARD_REDRAW_PERIOD == 0:
            self._drift_hazards()

        commands = {i: Command(accel=Vec2(t[0] * THRUST_GAIN,
                                          t[1] * THRUST_GAIN))
                    for i, t in enumerate(thrusts)}
        step_kinematics(self.world, commands)
        contacts = resolve_collisions(self.world)
        self.steps_used += 1

        # Classify contacts by pre-removal index ranges.
        n_a = cfg.n_agents
        n_s = len(self.supplies)
        supply_touchers: dict[int, set[int]] = {}
        hazard_touches: list[tuple[int, int]] = []  # (agent, hazard slot)
        for ev in contacts:
            if ev.body_b is None:
                continue
            pair = sorted((ev.body_a, ev.body_b))
            agents_in = [i for i in pair if i < n_a]
            for i in agents_in:
                other = pair[1] if pair[0] == i else pair[0]
                if n_a <= other < n_a + n_s:
                    supply_touchers.setdefault(other - n_a, set()).add(i)
                elif other >= n_a + n_s:
                    hazard_touches.append((i, other - n_a - n_s))

        events: list[object] = []
        local = np.zeros(n_a)
        glob = np.zeros(n_a)
        captured_slots: list[int] = []
        for slot, touchers in sorted(supply_touchers.items()):
            supply_id = self.supplies[slot][0]
            if len(touchers) >= cfg.n_coop:
                involved = tuple(sorted(touchers))
                lo, gl = split_event_reward(cfg.supply_reward, involved,
                                            n_a, cfg.local_ratio)
                local += lo
                glob += gl
                events.append(CaptureEvent(supply_id=supply_id,
                                           agents=involved,
                                           value=cfg.supply_reward,
                                           step=self.steps_used))
                captured_slots.append(slot)
            else:
                for agent in sorted(touchers):
                    lo, gl = split_event_reward(cfg.encounter_reward,
                                                (agent,), n_a,
                                                cfg.local_ratio)
                    local += lo
                    glob += gl
                    events.append(EncounterEvent(supply_id=supply_id,
                                                 agent=agent,
                                                 value=cfg.encounter_reward,
                                                 step=self.steps_used))
        for agent, slot in sorted(hazard_touches):
            lo, gl = split_event_reward(cfg.hazard_reward, (agent,), n_a,
                                        cfg.local_ratio)
            local += lo
            glob += gl
            events.append(HazardContactEvent(hazard_id=self.hazards[slot][0],
                                             agent=agent,
                                             value=cfg.hazard_reward,
                                             step=self.steps_used))

        self._touching = (
            {a for touchers in supply_touchers.values() for a in touchers},
            {a for a, _ in hazard_touches})

        if captured_slots:
            self.supplies = [s for k, s in enumerate(self.supplies)
                             if k not in captured_slots]
            self.world.bodies = self.world.bodies[:n_a] \
                + [b for _, b in self.supplies] + [b for _, b in self.hazards]

        thrust_terms = cfg.thrust_penalty * (thrusts ** 2).sum(axis=1)
        breakdown = RewardBreakdown(per_agent=[
            AgentReward(local=float(local[i]), global_share=float(glob[i]),
                        thrust=float(thrust_terms[i]))
            for i in range(n_a)])

        self.last_events = events
        if not self.supplies or self.steps_used >= cfg.max_cycles:
            self._done = True
        dones = [self._done] * n_a
        obs = [self._observe(i) for i in range(n_a)]
        return obs, breakdown, dones

    # -- helpers -------------------------------------------------------------

    def _drift_hazards(self) -> None:
        for _, body in self.hazards:
            angle = float(self._rng.uniform(-math.pi, math.pi))
            speed = float(self._rng.uniform(0.0, body.max_speed))
            body.velocity = Vec2(speed * math.cos(angle),
                                 speed * math.sin(angle))

    def _observe(self, agent_index: int) -> MacsObs:
        cfg = self.config
        body = self.world.bodies[agent_index]
        frame = cast_rays(self.world, agent_index, cfg.n_sensors,
                          cfg.sensor_range)
        return MacsObs(sensors=frame, own_velocity=body.velocity,
                       touching_supply=agent_index in self._touching[0],
                       touching_hazard=agent_index in self._touching[1])
