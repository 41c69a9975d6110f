"""Vectorized execution of independent environment instances.

Each env owns its state exclusively; the executor steps all of them per call
and gathers results in env-index order. Two interchangeable mechanisms sit
behind the same contract: an in-process loop ("sync") and one worker process
per env ("process"). Seeding is split per env as (base_seed, env_index,
episode_index), so trajectories are identical in either mode and auto-resets
stay deterministic under any scheduling.

Env objects must follow the uniform episode protocol: reset(seed) -> obs and
step(action) -> (obs, reward, done).
"""

from __future__ import annotations

import multiprocessing as mp
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MIN_THROUGHPUT_STEPS = 100  # steps_per_run below this gives noise, not data


def env_seed(base_seed: int, env_index: int, episode: int = 0) -> int:
    """Deterministic per-env, per-episode seed from a split stream."""
    seq = np.random.SeedSequence([int(base_seed), int(env_index),
                                  int(episode)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass
class VectorBatch:
    n_envs: int
    observations: list
    rewards: list
    dones: list
    resets: list           # True where this slot's obs comes from a reset
    global_step: int = 0   # total env steps taken so far

    def __post_init__(self):
        for name in ("observations", "rewards", "dones", "resets"):
            if len(getattr(self, name)) != self.n_envs:
                raise ValueError(f"{name} must have length {self.n_envs}")


@dataclass(frozen=True)
class ThroughputSample:
    n_envs: int
    steps_per_second: float  # 1/s
    wall_time: float         # s
    total_env_steps: int


def _worker(conn, env_factory, base_seed: int, env_index: int) -> None:
    try:
        env = env_factory()
    except Exception as exc:  # propagate with context, then stop
        conn.send(("error", f"{type(exc).__name__}: {exc}"))
        conn.close()
        return
    conn.send(("ok", None))
    episode = 0
    while True:
        cmd, payload = conn.recv()
        try:
            if cmd == "reset":
                episode = 0
                obs = env.reset(seed=env_seed(base_seed, env_index, 0))
                conn.send(("ok", obs))
            elif cmd == "step":
                obs, reward, done = env.step(payload)
                was_reset = False
                if done:
                    episode += 1
                    obs = env.reset(seed=env_seed(base_seed, env_index,
                                                  episode))
                    was_reset = True
                conn.send(("ok", (obs, reward, done, was_reset)))
            elif cmd == "close":
                conn.send(("ok", None))
                break
            else:
                conn.send(("error", f"unknown command {cmd!r}"))
        except Exception as exc:
            conn.send(("error", f"{type(exc).__name__}: {exc}"))
    conn.close()


class VectorEnv:
    """N independent envs stepped together, slot i always env i.

    mode: "sync" (in-process), "process" (one worker process per env), or
    "auto" (process when multiple envs and multiple cores are available).
    """

    def __init__(self, env_factory, n_envs: int, base_seed: int = 0,
                 mode: str = "auto"):
        if n_envs < 1:
            raise ValueError("n_envs must be >= 1")
        if mode not in ("auto", "sync", "process"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "auto":
            cores = os.cpu_count() or 1
            mode = "process" if (n_envs > 1 and cores > 1) else "sync"
        self.n_envs = n_envs
        self.base_seed = base_seed
        self.mode = mode
        self.global_step = 0
        self._episode = [0] * n_envs
        self._closed = False
        if mode == "sync":
            self._envs = []
            for i in range(n_envs):
                try:
                    self._envs.append(env_factory())
                except Exception as exc:
                    raise RuntimeError(f"env {i}: factory failed") from exc
        else:
            ctx = mp.get_context("fork")
            self._conns, self._procs = [], []
            for i in range(n_envs):
                parent, child = ctx.Pipe()
                proc = ctx.Process(target=_worker,
                                   args=(child, env_factory, base_seed, i),
                                   daemon=True)
                proc.start()
                child.close()
                self._conns.append(parent)
                self._procs.append(proc)
            for i in range(n_envs):
                self._expect(i)

    def _expect(self, i: int):
        status, payload = self._conns[i].recv()
        if status == "error":
            raise RuntimeError(f"env {i}: {payload}")
        return payload

    def reset(self) -> VectorBatch:
        self.global_step = 0
        self._episode = [0] * self.n_envs
        if self.mode == "sync":
            obs = []
            for i, env in enumerate(self._envs):
                try:
                    obs.append(env.reset(seed=env_seed(self.base_seed, i, 0)))
                except Exception as exc:
                    raise RuntimeError(f"env {i}: reset failed") from exc
        else:
            for conn in self._conns:
                conn.send(("reset", None))
            obs = [self._expect(i) for i in range(self.n_envs)]
        return VectorBatch(n_envs=self.n_envs, observations=obs,
                           rewards=[0.0] * self.n_envs,
                           dones=[False] * self.n_envs,
                           resets=[True] * self.n_envs,
                           global_step=self.global_step)

    def step(self, actions) -> VectorBatch:
        if len(actions) != self.n_envs:
            raise ValueError(f"expected {self.n_envs} actions, "
                             f"got {len(actions)}")
        if self.mode == "sync":
            results = []
            for i, (env, action) in enumerate(zip(self._envs, actions)):
                obs, reward, done = env.step(action)
                was_reset = False
                if done:
                    self._episode[i] += 1
                    obs = env.reset(seed=env_seed(self.base_seed, i,
                                                  self._episode[i]))
                    was_reset = True
                results.append((obs, reward, done, was_reset))
        else:
            for conn, action in zip(self._conns, actions):
                conn.send(("step", action))
            results = [self._expect(i) for i in range(self.n_envs)]
        self.global_step += self.n_envs
        obs, rewards, dones, resets = map(list, zip(*results))
        return VectorBatch(n_envs=self.n_envs, observations=obs,
                           rewards=rewards, dones=dones, resets=resets,
                           global_step=self.global_step)

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        if self.mode == "process":
            for conn in self._conns:
                try:
                    conn.send(("close", None))
                except (BrokenPipeError, OSError):
                    pass
            for proc in self._procs:
                proc.join(timeout=5)
                if proc.is_alive():
                    proc.terminate()
            for conn in self._conns:
                conn.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def vector_reset(env_factory, n_envs: int, base_seed: int = 0,
                 mode: str = "auto") -> tuple[VectorEnv, VectorBatch]:
    """Build the executor and produce the initial batch."""
    venv = VectorEnv(env_factory, n_envs, base_seed, mode)
    return venv, venv.reset()


def measure_throughput(env_factory, env_counts, steps_per_run: int,
                       policy, base_seed: int = 0,
                       mode: str = "auto") -> list[ThroughputSample]:
    """Steps/sec for each env count; policy maps one env's obs to an action.

    Wall time covers stepping only (construction and reset excluded).
    """
    if steps_per_run < MIN_THROUGHPUT_STEPS:
        raise ValueError(f"steps_per_run must be >= {MIN_THROUGHPUT_STEPS}")
    samples = []
    for n in env_counts:
        with VectorEnv(env_factory, n, base_seed, mode) as venv:
            batch = venv.reset()
            start = time.perf_counter()
            for _ in range(steps_per_run):
                actions = [policy(o) for o in batch.observations]
                batch = venv.step(actions)
            wall = time.perf_counter() - start
        total = n * steps_per_run
        samples.append(ThroughputSample(
            n_envs=n, steps_per_second=total / wall if wall > 0 else 0.0,
            wall_time=wall, total_env_steps=total))
    return samples


def write_throughput_csv(samples, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("n_envs,steps_per_second,wall_time_s,total_steps\n")
        for s in samples:
            fh.write(f"{s.n_envs},{s.steps_per_second:.3f},"
                     f"{s.wall_time:.6f},{s.total_env_steps}\n")
