"""Ray-cast sensor tests, including a brute-force soundness oracle."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from benchsim.core import (
    EntityClass,
    Segment,
    Vec2,
    cast_rays,
    ray_circle_intersection,
    ray_segment_intersection,
    unit,
    WorldState,
)
from tests.test_world import make_body


def brute_force_ray(world, observer, angle, max_range):
    """Independent per-entity nearest-hit scan for the soundness check."""
    body = world.bodies[observer]
    o = body.pose.position
    d = unit(angle)
    best = math.inf
    for i, other in enumerate(world.bodies):
        if i == observer:
            continue
        t = ray_circle_intersection(o, d, other.pose.position, other.radius)
        if t is not None and t < best:
            best = t
    for seg in world.obstacles:
        t = ray_segment_intersection(o, d, seg)
        if t is not None and t < best:
            best = t
    return min(best, max_range)


class TestCastRays:
    def test_empty_world_all_misses(self):
        w = WorldState(bodies=[make_body()], dt=0.1)
        frame = cast_rays(w, 0, 4, 5.0)
        assert np.all(frame.distances == 5.0)
        assert all(c is None for c in frame.hit_classes)
        assert np.all(frame.relative_speeds == 0.0)

    def test_static_obstacle_dead_ahead(self):
        # obstacle body surface 2 m ahead (center 2.5, radius 0.5), range 5
        w = WorldState(bodies=[make_body(),
                               make_body(x=2.5, radius=0.5, cls=EntityClass.OBSTACLE)],
                       dt=0.1)
        frame = cast_rays(w, 0, 8, 5.0)
        assert frame.distances[0] == pytest.approx(2.0)
        assert frame.hit_classes[0] is EntityClass.OBSTACLE
        assert frame.relative_speeds[0] == pytest.approx(0.0)

    def test_approaching_hazard_negative_relative_speed(self):
        w = WorldState(bodies=[make_body(),
                               make_body(x=3.0, vx=-1.0, radius=0.3,
                                         cls=EntityClass.HAZARD)], dt=0.1)
        frame = cast_rays(w, 0, 8, 10.0)
        assert frame.hit_classes[0] is EntityClass.HAZARD
        assert frame.relative_speeds[0] == pytest.approx(-1.0)

    def test_segment_hits_report_obstacle_class_and_zero_speed(self):
        wall = Segment(Vec2(2.0, -5.0), Vec2(2.0, 5.0))
        w = WorldState(bodies=[make_body(vx=1.0)], obstacles=[wall], dt=0.1)
        frame = cast_rays(w, 0, 4, 10.0)
        assert frame.distances[0] == pytest.approx(2.0)
        assert frame.hit_classes[0] is EntityClass.OBSTACLE
        assert frame.relative_speeds[0] == 0.0

    def test_ray_directions_follow_heading(self):
        # observer facing +y: ray 0 should hit the body straight above
        w = WorldState(bodies=[make_body(heading=math.pi / 2),
                               make_body(y=3.0, radius=0.5)], dt=0.1)
        frame = cast_rays(w, 0, 4, 10.0)
        assert frame.distances[0] == pytest.approx(2.5)
        assert frame.hit_classes[0] is EntityClass.AGENT

    def test_distance_equals_range_iff_no_hit(self):
        w = WorldState(bodies=[make_body(), make_body(x=3.0, radius=0.5)],
                       obstacles=[Segment(Vec2(-2, -4), Vec2(-2, 4))], dt=0.1)
        frame = cast_rays(w, 0, 16, 6.0)
        for dist, cls in zip(frame.distances, frame.hit_classes):
            if cls is None:
                assert dist == 6.0
            else:
                assert dist < 6.0

    def test_observer_excluded(self):
        w = WorldState(bodies=[make_body(radius=1.0)], dt=0.1)
        frame = cast_rays(w, 0, 4, 5.0)
        assert all(c is None for c in frame.hit_classes)

    def test_endpoints_geometry(self):
        w = WorldState(bodies=[make_body(x=1.0, y=2.0)], dt=0.1)
        frame = cast_rays(w, 0, 4, 3.0)
        pts = frame.endpoints()
        assert pts[0] == pytest.approx([4.0, 2.0])
        assert pts[1] == pytest.approx([1.0, 5.0])

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=60, deadline=None)
    def test_soundness_against_brute_force(self, seed):
        from benchsim.core import make_rng

        rng = make_rng(seed)
        bodies = [make_body(x=float(rng.uniform(-5, 5)), y=float(rng.uniform(-5, 5)),
                            vx=float(rng.uniform(-1, 1)), vy=float(rng.uniform(-1, 1)),
                            heading=float(rng.uniform(-3, 3)),
                            radius=float(rng.uniform(0.1, 0.8)))
                  for _ in range(int(rng.integers(1, 8)))]
        obstacles = [Segment(Vec2(float(rng.uniform(-6, 6)), float(rng.uniform(-6, 6))),
                             Vec2(float(rng.uniform(-6, 6)), float(rng.uniform(-6, 6))))
                     for _ in range(int(rng.integers(0, 5)))]
        w = WorldState(bodies=bodies, obstacles=obstacles, dt=0.1)
        n_rays = 12
        frame = cast_rays(w, 0, n_rays, 8.0)
        for k in range(n_rays):
            angle = bodies[0].pose.heading + 2 * math.pi * k / n_rays
            expected = brute_force_ray(w, 0, angle, 8.0)
            assert frame.distances[k] == pytest.approx(expected, abs=1e-6), (
                f"ray {k}: reported {frame.distances[k]}, brute force {expected}")
