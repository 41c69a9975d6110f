"""Episode drivers: run one episode per task, producing an EpisodeRecord.

Also provides uniform (reset/step/done) adapters over the task envs for the
vector executor, and the record -> report-row derivation used by both live
runs and offline scoring, so the two paths cannot disagree.
"""

from __future__ import annotations

import dataclasses
from functools import partial

import numpy as np

from .core.rng import make_rng
from .envs.exploration import ExplorationConfig, ExplorationEnv, Terminated
from .envs.macs import MacsConfig, MacsEnv
from .envs.socialnav import SocialNavEnv, SocialNavScenario
from .planners.policies import make_policy
from .records import EpisodeRecord, EpisodeRecorder

POLICY_STREAM = 1009  # rng stream offset separating policy noise from env


# ------------------------------------------------- uniform episode protocol


class MacsEpisode:
    """reset/step/done protocol over MacsEnv; reward is the team total."""

    def __init__(self, config: MacsConfig | None = None):
        self.env = MacsEnv(config)

    def reset(self, seed=None):
        return self.env.reset(seed=seed)

    def step(self, action):
        obs, breakdown, dones = self.env.step(list(action))
        return obs, float(sum(breakdown.totals())), all(dones)


class ExplorationEpisode:
    """reset/step/done protocol over ExplorationEnv; reward counts pickups."""

    def __init__(self, config: ExplorationConfig | None = None):
        self.env = ExplorationEnv(config)

    def reset(self, seed=None):
        return self.env.reset(seed=seed)

    def step(self, action):
        obs, events = self.env.step(action)
        reward = float(sum(1 for e in events
                           if type(e).__name__ == "Collected"))
        done = any(isinstance(e, Terminated) for e in events)
        return obs, reward, done


class SocialNavEpisode:
    """reset/step/done protocol over SocialNavEnv; rewards scored offline."""

    def __init__(self, scenario: SocialNavScenario | None = None):
        self.env = SocialNavEnv(scenario)

    def reset(self, seed=None):
        return self.env.reset(seed=seed)

    def step(self, action):
        obs, _events = self.env.step(action)
        return obs, 0.0, self.env.terminated


def macs_factory(config: MacsConfig | None = None):
    """Picklable factory for the vector executor."""
    return partial(MacsEpisode, config)


def exploration_factory(config: ExplorationConfig | None = None):
    return partial(ExplorationEpisode, config)


def socialnav_factory(scenario: SocialNavScenario | None = None):
    return partial(SocialNavEpisode, scenario)


# ------------------------------------------------------------ episode runs


def run_macs_episode(config: MacsConfig | None, seed: int,
                     policy_name: str = "random", policy=None,
                     snapshot_every: int = 0) -> EpisodeRecord:
    env = MacsEnv(config)
    cfg = env.config
    obs = env.reset(seed=seed)
    if policy is None:
        policy = make_policy(policy_name, env, make_rng(seed, POLICY_STREAM))
    recorder = EpisodeRecorder("macs", seed, dataclasses.asdict(cfg),
                               n_agents=cfg.n_agents)
    if snapshot_every:
        recorder.on_snapshot(env.world)
    step = 0
    while True:
        actions = np.asarray(policy(obs), dtype=float)
        obs, breakdown, dones = env.step(list(actions))
        recorder.on_step(step, rewards=breakdown.totals(),
                         thrust=[r.thrust for r in breakdown.per_agent],
                         actions=actions.tolist())
        recorder.on_events(step, env.last_events)
        step += 1
        if snapshot_every and step % snapshot_every == 0:
            recorder.on_snapshot(env.world)
        if all(dones):
            break
    captured = cfg.n_supplies - len(env.supplies)
    return recorder.finish(success=not env.supplies, steps=env.steps_used,
                           supplies_captured=captured)


def run_socialnav_episode(scenario: SocialNavScenario | None, seed: int,
                          policy_name: str = "dwa", policy=None,
                          snapshot_every: int = 0) -> EpisodeRecord:
    env = SocialNavEnv(scenario)
    obs = env.reset(seed=seed)
    if policy is None:
        policy = make_policy(policy_name, env, make_rng(seed, POLICY_STREAM))
    recorder = EpisodeRecorder(
        "socialnav", seed, dataclasses.asdict(env.scenario), n_agents=1)
    if snapshot_every:
        recorder.on_snapshot(env.world)
    step = 0
    while not env.terminated:
        cmd = policy(obs)
        obs, events = env.step(cmd)
        recorder.on_step(step, command=[float(cmd[0]), float(cmd[1])])
        recorder.on_events(step, events)
        step += 1
        if snapshot_every and step % snapshot_every == 0:
            status = "running" if not env.terminated else \
                ("succeeded" if env.success else "failed")
            recorder.on_snapshot(env.world, status=status)
    s = env.episode_summary()
    return recorder.finish(success=s.success, steps=step,
                           t_actual=s.t_actual, t_min=s.t_min, t_max=s.t_max,
                           collisions=s.collisions, f1=s.f1, f2=s.f2)


def run_exploration_episode(config: ExplorationConfig | None, seed: int,
                            policy_name: str = "explore_scan", policy=None,
                            snapshot_every: int = 0) -> EpisodeRecord:
    env = ExplorationEnv(config)
    obs = env.reset(seed=seed)
    if policy is None:
        policy = make_policy(policy_name, env, make_rng(seed, POLICY_STREAM))
    recorder = EpisodeRecorder(
        "exploration", seed, dataclasses.asdict(env.config), n_agents=1)
    if snapshot_every:
        recorder.on_snapshot(env.world)
    step = 0
    done = False
    while not done:
        action = policy(obs)
        obs, events = env.step(action)
        recorder.on_events(step, events)
        step += 1
        if snapshot_every and step % snapshot_every == 0:
            recorder.on_snapshot(env.world)
        done = any(isinstance(e, Terminated) for e in events)
    outcome = env.episode_outcome()
    collected = sum(1 for e in recorder.record.events
                    if e.name == "Collected")
    return recorder.finish(success=outcome.success, steps=outcome.steps,
                           papers_collected=collected)


# ------------------------------------------------------------- report rows


def row_from_record(record: EpisodeRecord) -> dict:
    """Per-episode report row recomputed from the record itself where
    possible, so offline scoring matches live aggregation by construction."""
    if record.outcome is None:
        raise ValueError("record has no outcome; episode incomplete")
    out = record.outcome
    if record.task == "macs":
        reward_rows = [s.rewards for s in record.steps
                       if s.rewards is not None]
        total_return = float(sum(sum(r) for r in reward_rows))
        captures = sum(1 for e in record.events if e.name == "CaptureEvent")
        return {"seed": record.seed, "success": out["success"],
                "steps": out["steps"],
                "return_per_agent": total_return / max(1, record.n_agents),
                "supplies_captured": captures}
    if record.task == "socialnav":
        collisions = sum(1 for e in record.events
                         if e.name == "CollisionEvent")
        return {"seed": record.seed, "success": out["success"],
                "steps": out["steps"], "t_actual": out["t_actual"],
                "t_min": out["t_min"], "t_max": out["t_max"],
                "collisions": collisions, "f1": out["f1"], "f2": out["f2"]}
    if record.task == "exploration":
        collected = sum(1 for e in record.events if e.name == "Collected")
        return {"seed": record.seed, "success": out["success"],
                "steps": out["steps"], "papers_collected": collected}
    raise ValueError(f"unknown task {record.task!r}")


RUNNERS = {"macs": run_macs_episode,
           "socialnav": run_socialnav_episode,
           "exploration": run_exploration_episode}
