"""Social navigation: spawn geometry, unicycle motion, proxemics, events."""

import math

import numpy as np
import pytest

from benchsim.core.geometry import Vec2
from benchsim.core.world import Body, EntityClass, Pose
from benchsim.crowd import SfmParams
from benchsim.envs.socialnav import (
    CollisionEvent,
    GoalReached,
    IntrusionEvent,
    IntrusionType,
    SocialNavEnv,
    SocialNavScenario,
    Timeout,
    classify_clearance,
    sample_proxemics,
)

QUIET_SFM = SfmParams(noise_std=0.0)


def empty_arena(**kw):
    kw.setdefault("n_pedestrians", 0)
    kw.setdefault("sfm", QUIET_SFM)
    return SocialNavScenario(**kw)


def make_ped_body(x, y, radius=0.2):
    return Body(pose=Pose(Vec2(x, y), 0.0), velocity=Vec2(0.0, 0.0),
                radius=radius, max_speed=2.0,
                entity_class=EntityClass.PEDESTRIAN)


class TestScenario:
    def test_defaults_match_reported_setup(self):
        sc = SocialNavScenario()
        assert sc.arena_radius == 20.0
        assert sc.n_pedestrians == 30
        assert sc.min_start_goal_dist == 40.0

    def test_impossible_separation_rejected(self):
        with pytest.raises(ValueError, match="exceeds the arena diameter"):
            SocialNavScenario(arena_radius=5.0, min_start_goal_dist=40.0)

    def test_negative_pedestrians_rejected(self):
        with pytest.raises(ValueError):
            SocialNavScenario(n_pedestrians=-1)


class TestReset:
    def test_default_start_goal_diametric(self):
        env = SocialNavEnv(SocialNavScenario(sfm=QUIET_SFM))
        env.reset(seed=3)
        assert env.start.norm() == pytest.approx(20.0, abs=1e-9)
        assert env.goal.norm() == pytest.approx(20.0, abs=1e-9)
        assert (env.start + env.goal).norm() == pytest.approx(0.0, abs=1e-6)
        assert (env.goal - env.start).norm() == pytest.approx(40.0, abs=1e-6)

    def test_shorter_separation_respected(self):
        sc = SocialNavScenario(min_start_goal_dist=10.0, n_pedestrians=0,
                               sfm=QUIET_SFM)
        env = SocialNavEnv(sc)
        for seed in range(10):
            env.reset(seed=seed)
            assert (env.goal - env.start).norm() >= 10.0 - 1e-9

    def test_seed_repeat_identical_crowd(self):
        a = SocialNavEnv(SocialNavScenario(sfm=QUIET_SFM))
        b = SocialNavEnv(SocialNavScenario(sfm=QUIET_SFM))
        a.reset(seed=9)
        b.reset(seed=9)
        assert np.array_equal(a.world.positions(), b.world.positions())
        assert len(a.peds) == 30

    def test_pedestrians_spawn_inside_arena_clear_of_robot(self):
        env = SocialNavEnv(SocialNavScenario(sfm=QUIET_SFM))
        env.reset(seed=5)
        for ped in env.peds:
            p = ped.body.pose.position
            assert p.norm() <= 21.0
            assert (p - env.start).norm() >= 1.0

    def test_robot_faces_goal(self):
        env = SocialNavEnv(empty_arena())
        obs = env.reset(seed=2)
        rel = obs.goal_relative
        assert rel.x == pytest.approx(40.0, abs=1e-6)
        assert rel.y == pytest.approx(0.0, abs=1e-6)


class TestStep:
    def test_straight_run_completes_in_expected_time(self):
        env = SocialNavEnv(empty_arena())
        env.reset(seed=1)
        events = []
        for _ in range(300):
            _, evs = env.step((2.0, 0.0))
            events.extend(evs)
            if env.terminated:
                break
        assert env.success
        summary = env.episode_summary()
        # 40 m at 2 m/s with a 0.5 m goal radius: just under 20 s.
        assert summary.t_actual == pytest.approx(20.0, abs=0.5)
        assert summary.t_min == pytest.approx(20.0, abs=1e-6)
        assert any(isinstance(e, GoalReached) for e in events)

    def test_zero_command_times_out(self):
        env = SocialNavEnv(empty_arena(t_max_wall=2.0))
        env.reset(seed=1)
        events = []
        while not env.terminated:
            _, evs = env.step((0.0, 0.0))
            events.extend(evs)
        assert not env.success
        assert any(isinstance(e, Timeout) for e in events)
        assert env.episode_summary().t_actual == pytest.approx(2.0, abs=1e-9)

    def test_step_after_termination_rejected(self):
        env = SocialNavEnv(empty_arena(t_max_wall=0.1))
        env.reset(seed=0)
        env.step((0.0, 0.0))
        with pytest.raises(RuntimeError):
            env.step((0.0, 0.0))

    def test_command_clamped(self):
        env = SocialNavEnv(empty_arena())
        env.reset(seed=4)
        obs, _ = env.step((99.0, -99.0))
        assert obs.velocity == (2.0, -2.0)
        speed = env.robot.velocity.norm()
        assert speed == pytest.approx(2.0, abs=1e-9)

    def test_no_reverse(self):
        env = SocialNavEnv(empty_arena())
        env.reset(seed=4)
        obs, _ = env.step((-1.0, 0.0))
        assert obs.velocity[0] == 0.0

    def test_driving_through_pedestrian_logs_collision_once(self):
        sc = SocialNavScenario(n_pedestrians=1, sfm=QUIET_SFM)
        env = SocialNavEnv(sc)
        env.reset(seed=7)
        ped = env.peds[0]
        ped.body.max_speed = 0.01  # effectively pinned
        ped.waypoints.clear()
        heading = env.robot.pose.heading
        ped.body.pose = Pose(env.start + Vec2(math.cos(heading),
                                              math.sin(heading)) * 1.5,
                             0.0)
        collisions = []
        for _ in range(30):
            _, evs = env.step((2.0, 0.0))
            collisions.extend(e for e in evs if isinstance(e, CollisionEvent))
            if env.terminated:
                break
        assert len(collisions) >= 1
        assert collisions[0].pedestrian_index == 0
        # Sustained pushing is a single entry event, not one per step.
        assert env.episode_summary() if env.terminated else True
        assert env._collisions == len(collisions)
        assert len(collisions) <= 3

    def test_abort_ends_episode(self):
        env = SocialNavEnv(empty_arena())
        env.reset(seed=0)
        env.step((1.0, 0.0))
        env.abort()
        assert env.terminated and not env.success
        summary = env.episode_summary()
        assert summary.t_actual == pytest.approx(0.1, abs=1e-9)


class TestProxemics:
    def test_band_classification(self):
        assert classify_clearance(0.30) is IntrusionType.TYPE1
        assert classify_clearance(0.449) is IntrusionType.TYPE1
        assert classify_clearance(0.45) is IntrusionType.TYPE2
        assert classify_clearance(0.80) is IntrusionType.TYPE2
        assert classify_clearance(1.2) is IntrusionType.TYPE2
        assert classify_clearance(1.21) is None
        assert classify_clearance(1.5) is None
        assert classify_clearance(-0.05) is IntrusionType.TYPE1  # in contact

    def test_one_event_per_pedestrian_in_band(self):
        robot = Body(pose=Pose(Vec2(0.0, 0.0), 0.0), velocity=Vec2(0, 0),
                     radius=0.3, max_speed=2.0,
                     entity_class=EntityClass.ROBOT)
        peds = [make_ped_body(0.8, 0.0),    # clearance 0.30 -> Type1
                make_ped_body(0.0, 1.3),    # clearance 0.80 -> Type2
                make_ped_body(2.0, 2.0)]    # clearance ~2.3 -> none
        events = sample_proxemics(robot, peds, t=1.0)
        assert len(events) == 2
        by_ped = {e.pedestrian_index: e.type for e in events}
        assert by_ped == {0: IntrusionType.TYPE1, 1: IntrusionType.TYPE2}

    def test_sampling_cadence(self):
        env = SocialNavEnv(empty_arena(t_max_wall=3.0))
        env.reset(seed=0)
        while not env.terminated:
            env.step((0.0, 0.0))
        # 3.0 s of sim at 2 Hz sampling -> 6 samples.
        assert env._samples == 6

    def test_intrusion_fractions_accumulate(self):
        sc = SocialNavScenario(n_pedestrians=1, t_max_wall=2.0, sfm=QUIET_SFM)
        env = SocialNavEnv(sc)
        env.reset(seed=3)
        ped = env.peds[0]
        ped.body.max_speed = 1e-9
        ped.waypoints.clear()
        # Park the pedestrian inside the Type1 band next to the robot and
        # keep the robot still: every sample should record Type1.
        ped.body.pose = Pose(env.start + Vec2(0.0, 0.7), 0.0)
        while not env.terminated:
            env.step((0.0, 0.0))
        summary = env.episode_summary()
        assert summary.f1 == pytest.approx(1.0, abs=1e-9)
        assert summary.f2 == 0.0

    def test_goal_reach_precedes_timeout(self):
        env = SocialNavEnv(empty_arena(t_max_wall=0.1))
        env.reset(seed=0)
        robot = env.robot
        env.world.bodies[0].pose = Pose(
            env.goal - Vec2(0.55, 0.0), 0.0)
        _, events = env.step((2.0, 0.0))  # crosses into goal radius this step
        assert env.terminated and env.success
        assert any(isinstance(e, GoalReached) for e in events)
        assert not any(isinstance(e, Timeout) for e in events)


class TestObservation:
    def test_lidar_shape_and_range(self):
        env = SocialNavEnv(SocialNavScenario(sfm=QUIET_SFM))
        obs = env.reset(seed=1)
        assert obs.lidar.n_rays == 72
        assert obs.lidar.distances.shape == (72,)
        assert (obs.lidar.distances <= 10.0 + 1e-12).all()

    def test_goal_relative_rotates_with_heading(self):
        env = SocialNavEnv(empty_arena())
        env.reset(seed=2)
        env.world.bodies[0].pose = Pose(Vec2(0.0, 0.0), math.pi / 2)
        env.goal = Vec2(3.0, 0.0)
        obs = env._observe()
        assert obs.goal_relative.x == pytest.approx(0.0, abs=1e-9)
        assert obs.goal_relative.y == pytest.approx(-3.0, abs=1e-9)

    def test_pedestrians_visible_in_lidar(self):
        sc = SocialNavScenario(n_pedestrians=1, sfm=QUIET_SFM)
        env = SocialNavEnv(sc)
        env.reset(seed=7)
        ped = env.peds[0]
        heading = env.robot.pose.heading
        ped.body.pose = Pose(env.start + Vec2(math.cos(heading),
                                              math.sin(heading)) * 2.0, 0.0)
        obs = env._observe()
        assert EntityClass.PEDESTRIAN in obs.lidar.hit_classes
