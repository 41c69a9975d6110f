"""Radial ray-cast sensing over world bodies and obstacle segments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import TWO_PI, Vec2
from .world import EntityClass, WorldState


@dataclass
class SensorFrame:
    """One observer's radial scan.

    Ray k points at heading + 2*pi*k/n_rays, captured at `origin`/`heading`.
    distance = range exactly on a miss (hit_class None). relative_speed is the
    component of (v_hit - v_observer) along the ray; segment hits and misses
    report 0.
    """

    n_rays: int
    range: float  # m
    origin: Vec2
    heading: float
    distances: np.ndarray          # (n_rays,)
    hit_classes: list[EntityClass | None]
    relative_speeds: np.ndarray    # (n_rays,) m/s

    def ray_angles(self) -> np.ndarray:
        return self.heading + TWO_PI * np.arange(self.n_rays) / self.n_rays

    def endpoints(self) -> np.ndarray:
        """World-frame (n_rays, 2) points where each ray terminated."""
        ang = self.ray_angles()
        return np.stack([self.origin.x + self.distances * np.cos(ang),
                         self.origin.y + self.distances * np.sin(ang)], axis=1)

    def hit_mask(self) -> np.ndarray:
        return np.array([c is not None for c in self.hit_classes])


def cast_rays(world: WorldState, observer: int, n_rays: int, max_range: float) -> SensorFrame:
    """Nearest intersection per ray among bodies (observer excluded) and segments."""
    if n_rays < 1:
        raise ValueError("n_rays must be >= 1")
    if max_range <= 0:
        raise ValueError("range must be positive")
    body = world.bodies[observer]
    origin = body.pose.position
    heading = body.pose.heading
    angles = heading + TWO_PI * np.arange(n_rays) / n_rays
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)  # (K, 2)

    best_t = np.full(n_rays, np.inf)
    best_kind = np.full(n_rays, -1, dtype=int)  # index into others / segments
    best_is_body = np.zeros(n_rays, dtype=bool)

    others = [i for i in range(len(world.bodies)) if i != observer]
    if others:
        centers = np.array([[world.bodies[i].pose.position.x,
                             world.bodies[i].pose.position.y] for i in others])
        radii = np.array([world.bodies[i].radius for i in others])
        rel = centers[None, :, :] - np.array([[origin.x, origin.y]])[:, None, :]  # (1,M,2)
        b = (dirs[:, None, :] * rel).sum(axis=2)          # (K, M)
        c = (rel ** 2).sum(axis=2) - radii[None, :] ** 2  # (1, M) broadcast
        disc = b * b - c
        valid = disc >= 0.0
        sq = np.sqrt(np.where(valid, disc, 0.0))
        t_near = b - sq
        t_far = b + sq
        t = np.where(t_near >= 0.0, t_near, t_far)
        t = np.where(valid & (t >= 0.0), t, np.inf)
        idx = np.argmin(t, axis=1)
        tmin = t[np.arange(n_rays), idx]
        better = tmin < best_t
        best_t = np.where(better, tmin, best_t)
        best_kind = np.where(better, idx, best_kind)
        best_is_body = np.where(better, True, best_is_body)

    if world.obstacles:
        a = np.array([[s.a.x, s.a.y] for s in world.obstacles])
        v = np.array([[s.b.x - s.a.x, s.b.y - s.a.y] for s in world.obstacles])
        w = a - np.array([origin.x, origin.y])            # (S, 2)
        denom = dirs[:, 0:1] * v[None, :, 1] - dirs[:, 1:2] * v[None, :, 0]  # (K, S)
        w_cross_v = w[:, 0] * v[:, 1] - w[:, 1] * v[:, 0]                    # (S,)
        w_cross_d = w[None, :, 0] * dirs[:, 1:2] - w[None, :, 1] * dirs[:, 0:1]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = w_cross_v[None, :] / denom
            u = w_cross_d / denom
        ok = (denom != 0.0) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
        t = np.where(ok, t, np.inf)
        idx = np.argmin(t, axis=1)
        tmin = t[np.arange(n_rays), idx]
        better = tmin < best_t
        best_t = np.where(better, tmin, best_t)
        best_kind = np.where(better, idx, best_kind)
        best_is_body = np.where(better, False, best_is_body)

    hit = best_t <= max_range
    distances = np.where(hit, best_t, max_range)

    hit_classes: list[EntityClass | None] = [None] * n_rays
    rel_speeds = np.zeros(n_rays)
    v_obs = np.array([body.velocity.x, body.velocity.y])
    for k in range(n_rays):
        if not hit[k]:
            continue
        if best_is_body[k]:
            other = world.bodies[others[best_kind[k]]]
            hit_classes[k] = other.entity_class
            v_hit = np.array([other.velocity.x, other.velocity.y])
            rel_speeds[k] = float((v_hit - v_obs) @ dirs[k])
        else:
            hit_classes[k] = EntityClass.OBSTACLE
    return SensorFrame(n_rays=n_rays, range=max_range, origin=origin,
                       heading=heading, distances=distances,
                       hit_classes=hit_classes, relative_speeds=rel_speeds)
