"""World state and the deterministic simulation kernel.

Fixed-timestep semi-implicit Euler integration, positional collision
resolution, and the body/obstacle containers every task environment builds on.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Segment, Vec2, closest_point_on_segment, wrap_angle

EPS_PEN = 1e-6  # m, tolerated interpenetration after resolution


class EntityClass(enum.Enum):
    AGENT = "agent"
    SUPPLY = "supply"
    HAZARD = "hazard"
    PEDESTRIAN = "pedestrian"
    ROBOT = "robot"
    TARGET = "target"
    OBSTACLE = "obstacle"


# Classes that collision resolution never displaces.
STATIC_CLASSES = frozenset({EntityClass.SUPPLY, EntityClass.TARGET, EntityClass.OBSTACLE})


@dataclass(frozen=True)
class Pose:
    position: Vec2
    heading: float  # radians, normalized to [-pi, pi)

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_angle(self.heading))


@dataclass
class Body:
    pose: Pose
    velocity: Vec2
    radius: float
    max_speed: float
    entity_class: EntityClass

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.max_speed <= 0:
            raise ValueError(f"max_speed must be positive, got {self.max_speed}")

    @property
    def is_static(self) -> bool:
        return self.entity_class in STATIC_CLASSES


@dataclass(frozen=True)
class Command:
    """Per-body control for one kinematics step."""

    accel: Vec2 = Vec2(0.0, 0.0)  # m/s^2
    omega: float = 0.0  # rad/s


@dataclass(frozen=True)
class ContactEvent:
    """One resolved contact; body_b xor segment is set."""

    body_a: int
    body_b: int | None
    segment: int | None
    clock: float


@dataclass
class WorldState:
    """Bodies plus static segment obstacles on a fixed clock.

    Body list order is stable within an episode: indices are identities.
    The clock is kept as an integer tick count so it is always an exact
    multiple of dt.
    """

    bodies: list[Body] = field(default_factory=list)
    obstacles: list[Segment] = field(default_factory=list)
    dt: float = 0.1  # s
    rng: np.random.Generator | None = None
    ticks: int = 0

    @property
    def clock(self) -> float:
        return self.ticks * self.dt

    def positions(self) -> np.ndarray:
        return np.array([[b.pose.position.x, b.pose.position.y]
                         for b in self.bodies], dtype=float).reshape(len(self.bodies), 2)

    def velocities(self) -> np.ndarray:
        return np.array([[b.velocity.x, b.velocity.y]
                         for b in self.bodies], dtype=float).reshape(len(self.bodies), 2)

    def radii(self) -> np.ndarray:
        return np.array([b.radius for b in self.bodies], dtype=float)


def clamp_speed(v: Vec2, max_speed: float) -> Vec2:
    speed = v.norm()
    if speed > max_speed:
        return v * (max_speed / speed)
    return v


def step_kinematics(world: WorldState, commands: dict[int, Command] | None = None) -> WorldState:
    """Advance every body one tick: v += a*dt, clamp, x += v*dt, turn by omega.

    commands maps body index -> Command; bodies without an entry coast.
    """
    n = len(world.bodies)
    commands = commands or {}
    for idx in commands:
        if not 0 <= idx < n:
            raise IndexError(f"command for nonexistent body index {idx}")
    dt = world.dt
    for i, body in enumerate(world.bodies):
        cmd = commands.get(i)
        v = body.velocity
        heading = body.pose.heading
        if cmd is not None:
            v = v + cmd.accel * dt
            heading = wrap_angle(heading + cmd.omega * dt)
        v = clamp_speed(v, body.max_speed)
        body.velocity = v
        body.pose = Pose(body.pose.position + v * dt, heading)
    world.ticks += 1
    return world


def _segment_arrays(obstacles: list[Segment]):
    if not obstacles:
        return None
    a = np.array([[s.a.x, s.a.y] for s in obstacles], dtype=float)
    b = np.array([[s.b.x, s.b.y] for s in obstacles], dtype=float)
    return a, b


def resolve_collisions(world: WorldState, max_passes: int = 64) -> list[ContactEvent]:
    """Project interpenetrating bodies apart; emit one event per contact pair.

    Pure positional correction (no restitution): overlapping dynamic pairs are
    pushed apart symmetrically along the center line, a dynamic body against a
    static body or segment takes the full correction. Deterministic
    Gauss-Seidel sweep in index order.
    """
    bodies = world.bodies
    n = len(bodies)
    events: list[ContactEvent] = []
    if n == 0:
        return events
    pos = world.positions()
    rad = world.radii()
    movable = np.array([not b.is_static for b in bodies])
    segs = _segment_arrays(world.obstacles)
    seen_pairs: set[tuple[int, int]] = set()
    seen_segs: set[tuple[int, int]] = set()

    for _ in range(max_passes):
        dirty = False

        # Circle-circle: find overlap candidates vectorized, fix sequentially.
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((delta ** 2).sum(axis=2))
        rsum = rad[:, None] + rad[None, :]
        over = np.triu(dist < rsum - EPS_PEN, k=1)
        for i, j in np.argwhere(over):
            i, j = int(i), int(j)
            if not (movable[i] or movable[j]):
                continue
            d = math.dist(pos[i], pos[j])
            gap = rad[i] + rad[j] - d
            if gap <= EPS_PEN:
                continue  # an earlier correction already separated them
            if d == 0.0:
                theta = (world.rng.uniform(0.0, 2.0 * math.pi)
                         if world.rng is not None else 0.0)
                nx, ny = math.cos(theta), math.sin(theta)
            else:
                nx = (pos[i, 0] - pos[j, 0]) / d
                ny = (pos[i, 1] - pos[j, 1]) / d
            if movable[i] and movable[j]:
                pos[i, 0] += nx * gap / 2.0
                pos[i, 1] += ny * gap / 2.0
                pos[j, 0] -= nx * gap / 2.0
                pos[j, 1] -= ny * gap / 2.0
            elif movable[i]:
                pos[i, 0] += nx * gap
                pos[i, 1] += ny * gap
            else:
                pos[j, 0] -= nx * gap
                pos[j, 1] -= ny * gap
            dirty = True
            if (i, j) not in seen_pairs:
                seen_pairs.add((i, j))
                events.append(ContactEvent(i, j, None, world.clock))

        # Circle-segment.
        if segs is not None:
            a, b = segs
            ab = b - a  # (m, 2)
            ab_len2 = (ab ** 2).sum(axis=1)
            ab_len2[ab_len2 == 0.0] = 1.0
            w = pos[:, None, :] - a[None, :, :]  # (n, m, 2)
            t = (w * ab[None, :, :]).sum(axis=2) / ab_len2[None, :]
            t = np.clip(t, 0.0, 1.0)
            closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
            dseg = np.sqrt(((pos[:, None, :] - closest) ** 2).sum(axis=2))
            hit = dseg < rad[:, None] - EPS_PEN
            for i in range(n):
                if not movable[i]:
                    continue
                for k in np.nonzero(hit[i])[0]:
                    k = int(k)
                    p = Vec2(pos[i, 0], pos[i, 1])
                    cp = closest_point_on_segment(p, world.obstacles[k])
                    d = (p - cp).norm()
                    if d >= rad[i] - EPS_PEN:
                        continue
                    if d == 0.0:
                        seg = world.obstacles[k]
                        tang = seg.b - seg.a
                        nrm = Vec2(-tang.y, tang.x)
                        nrm = nrm.normalized() if nrm.norm() > 0 else Vec2(1.0, 0.0)
                    else:
                        nrm = (p - cp) * (1.0 / d)
                    pos[i, 0] = cp.x + nrm.x * rad[i]
                    pos[i, 1] = cp.y + nrm.y * rad[i]
                    dirty = True
                    if (i, k) not in seen_segs:
                        seen_segs.add((i, k))
                        events.append(ContactEvent(i, None, k, world.clock))

        if not dirty:
            break

    for i, body in enumerate(bodies):
        if movable[i]:
            body.pose = Pose(Vec2(pos[i, 0], pos[i, 1]), body.pose.heading)
    return events
