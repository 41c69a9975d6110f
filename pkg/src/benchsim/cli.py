"""Command-line driver: run benchmarks, measure throughput, serve live
sessions, score recorded episodes, replay records as text.

Exit codes: 0 success, 1 runtime failure, 2 invalid config or input schema.
Log level comes from the BENCH_LOG environment variable (default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import (ConfigError, ScenarioConfig, config_to_dict,
                     default_config, load_config)
from .core.rng import make_rng
from .metrics.report import build_report, write_report
from .metrics.seating import (plan_from_dict, problem_from_dict,
                              random_problem, score_seating)
from .parallel import measure_throughput, write_throughput_csv
from .planners.policies import available_policies
from .records import RecordError, read_records, validate_record, write_records
from .runner import (RUNNERS, exploration_factory, macs_factory,
                     row_from_record, socialnav_factory)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

THROUGHPUT_STEPS = 200     # steps per env count in cmd_throughput
RUN_SNAPSHOT_EVERY = 25    # snapshot cadence for records written by cmd_run

# builtin policies only drive the task they were written for
_POLICY_TASKS = {"random": "macs", "greedy_coop": "macs",
                 "dwa": "socialnav", "mppi": "socialnav",
                 "oracle": "socialnav", "explore_scan": "exploration"}

log = logging.getLogger("benchsim")


def _setup_logging() -> None:
    name = os.environ.get("BENCH_LOG", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _check_policy(cfg: ScenarioConfig) -> None:
    if cfg.task == "seating":
        if cfg.policy != "random":
            raise ConfigError(
                f"seating supports only the 'random' plan policy, "
                f"got {cfg.policy!r}")
        return
    known = available_policies()
    if cfg.policy not in known:
        raise ConfigError(f"unknown policy {cfg.policy!r}; "
                          f"known: {', '.join(known)}")
    expected = _POLICY_TASKS.get(cfg.policy)
    if expected is not None and expected != cfg.task:
        raise ConfigError(f"policy {cfg.policy!r} drives the {expected} "
                          f"task, not {cfg.task}")


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
        cfg.seeds = None
    if getattr(args, "episodes", None) is not None:
        if args.episodes < 1:
            raise ConfigError("--episodes must be >= 1")
        cfg.episodes = args.episodes
        cfg.seeds = None
    if getattr(args, "policy", None):
        cfg.policy = args.policy
    if getattr(args, "out", None):
        cfg.output = args.out
    return cfg


def _seating_rows(cfg: ScenarioConfig) -> list[dict]:
    p = cfg.params
    rows = []
    for seed in cfg.resolved_seeds:
        rng = make_rng(seed)
        problem = random_problem(rng, n_seats=p.n_seats,
                                 n_guests=p.n_guests,
                                 n_preferences=p.n_preferences)
        seats = [s.name for s in problem.seats]
        order = rng.permutation(len(seats))
        plan = {guest: seats[order[i]]
                for i, guest in enumerate(problem.guests)}
        score = score_seating(problem, plan)
        rows.append({"seed": seed, "pg": score.pg, "s_high": score.s_high,
                     "s_low": score.s_low,
                     "n_satisfied": int(sum(score.satisfied))})
    return rows


def cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    _check_policy(cfg)
    log.info("running %s: %d episode(s), policy=%s", cfg.task, cfg.episodes,
             cfg.policy)

    records = []
    if cfg.task == "seating":
        rows = _seating_rows(cfg)
    else:
        runner = RUNNERS[cfg.task]
        rows = []
        for seed in cfg.resolved_seeds:
            record = runner(cfg.params, seed, policy_name=cfg.policy,
                            snapshot_every=RUN_SNAPSHOT_EVERY)
            records.append(record)
            rows.append(row_from_record(record))
            log.debug("episode seed=%s -> %s", seed, rows[-1])

    report = build_report(cfg.task, config_to_dict(cfg), rows,
                          policy=cfg.policy, seeds=cfg.resolved_seeds)
    json_path, csv_path = write_report(report, cfg.output)
    written = [str(json_path), str(csv_path)]
    if records:
        rec_path = Path(str(json_path)[:-len(".json")] + ".records.jsonl")
        write_records(rec_path, records)
        written.append(str(rec_path))
    print("\n".join(written))
    return EXIT_OK


def _throughput_setup(cfg: ScenarioConfig):
    if cfg.task == "macs":
        n = cfg.params.n_agents
        return macs_factory(cfg.params), lambda obs: np.zeros((n, 2))
    if cfg.task == "socialnav":
        return socialnav_factory(cfg.params), lambda obs: (1.0, 0.2)
    if cfg.task == "exploration":
        from .envs.exploration import RotateTo
        return (exploration_factory(cfg.params),
                lambda obs: RotateTo(obs.pose.heading + 0.5))
    raise ConfigError("seating has no simulation loop to benchmark")


def cmd_throughput(args) -> int:
    cfg = load_config(args.config) if args.config else default_config("macs")
    factory, policy = _throughput_setup(cfg)
    try:
        counts = [int(c) for c in args.envs.split(",") if c.strip()]
    except ValueError as exc:
        raise ConfigError(f"--envs must be comma-separated integers: "
                          f"{args.envs!r}") from exc
    if not counts or any(c < 1 for c in counts):
        raise ConfigError("--envs needs at least one count >= 1")

    samples = measure_throughput(factory, counts, THROUGHPUT_STEPS, policy,
                                 base_seed=cfg.seed)
    out = Path(args.out or "throughput.csv")
    write_throughput_csv(samples, out)
    written = [str(out)]
    if args.plot:
        with open(args.plot, "w", encoding="utf-8") as fh:
            for s in samples:
                fh.write(f"{s.n_envs} {s.steps_per_second:.3f}\n")
        written.append(str(args.plot))
    for s in samples:
        print(f"n_envs={s.n_envs:<3d} steps/s={s.steps_per_second:10.1f} "
              f"wall={s.wall_time:.3f}s")
    print("\n".join(written))
    return EXIT_OK


def _score_seating_files(args) -> int:
    with open(args.problem, "r", encoding="utf-8") as fh:
        problem_data = json.load(fh)
    with open(args.plan, "r", encoding="utf-8") as fh:
        plan_data = json.load(fh)
    try:
        problem = problem_from_dict(problem_data)
        plan = plan_from_dict(plan_data)
        score = score_seating(problem, plan)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"bad problem/plan file: {exc}") from exc
    payload = {"s_high": score.s_high, "s_low": score.s_low, "pg": score.pg,
               "satisfied": list(score.satisfied)}
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_score(args) -> int:
    if args.problem or args.plan:
        if not (args.problem and args.plan):
            raise ConfigError("seating scoring needs both --problem "
                              "and --plan")
        return _score_seating_files(args)
    if not args.records:
        raise ConfigError("nothing to score: pass record files, or "
                          "--problem/--plan for a seating plan")

    records = []
    for path in args.records:
        records.extend(read_records(path))
    if not records:
        raise ConfigError("record files contain no episodes")

    failures = []
    for i, rec in enumerate(records):
        for problem in validate_record(rec):
            failures.append(f"record {i} (seed={rec.seed}): {problem}")
    if failures:
        for line in failures:
            print(line, file=sys.stderr)
        print(f"{len(failures)} integrity check(s) failed", file=sys.stderr)
        return EXIT_RUNTIME

    tasks = {rec.task for rec in records}
    if len(tasks) > 1:
        raise ConfigError(f"records mix tasks: {', '.join(sorted(tasks))}")
    task = tasks.pop()

    rows = [row_from_record(rec) for rec in records]
    seeds = [rec.seed for rec in records]
    report = build_report(task, {"task": task, task: records[0].config,
                                 "seeds": seeds},
                          rows, policy="", seeds=seeds)
    print(json.dumps(report.aggregates, indent=2, sort_keys=True))
    if args.out:
        write_report(report, args.out)
    return EXIT_OK


def cmd_replay(args) -> int:
    records = read_records(args.record)
    for rec in records:
        print(f"episode task={rec.task} seed={rec.seed} "
              f"agents={rec.n_agents}")
        for snap in rec.snapshots:
            print(f"  tick={snap.tick:<6d} t={snap.sim_time:7.2f}s "
                  f"entities={len(snap.entities):<3d} "
                  f"status={snap.episode_status}")
        for ev in rec.events:
            print(f"  step {ev.step}: {ev.name} {json.dumps(ev.data)}")
        if rec.outcome is not None:
            print(f"  outcome: {json.dumps(rec.outcome, sort_keys=True)}")
        problems = validate_record(rec)
        for problem in problems:
            print(f"  warning: {problem}", file=sys.stderr)
    if args.out:
        write_records(args.out, records)
        print(args.out)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import serve_session  # lazy: pulls in websockets

    cfg = load_config(args.config) if args.config else \
        default_config("socialnav")
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    try:
        serve_session(cfg, port=args.port, record_path=args.out)
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="benchsim",
        description="Desk-scale embodied benchmark: run, score, serve.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run episodes and write a report")
    p_run.add_argument("--config", required=True, help="scenario TOML")
    p_run.add_argument("--seed", type=int, help="override base seed")
    p_run.add_argument("--episodes", type=int, help="override episode count")
    p_run.add_argument("--policy", help="override policy name")
    p_run.add_argument("--out", help="report base path")
    p_run.set_defaults(func=cmd_run)

    p_tp = sub.add_parser("throughput",
                          help="measure vector-execution steps/second")
    p_tp.add_argument("--config", help="scenario TOML (default: macs)")
    p_tp.add_argument("--envs", default="1,2,4",
                      help="comma-separated env counts")
    p_tp.add_argument("--out", help="CSV output path")
    p_tp.add_argument("--plot", help="also write a 2-column plot data file")
    p_tp.set_defaults(func=cmd_throughput)

    p_serve = sub.add_parser("serve",
                             help="serve a live session over WebSocket")
    p_serve.add_argument("--config", help="scenario TOML (default: "
                                          "socialnav)")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--seed", type=int, help="episode seed")
    p_serve.add_argument("--out", help="write the session record here "
                                       "on episode end")
    p_serve.set_defaults(func=cmd_serve)

    p_score = sub.add_parser("score",
                             help="recompute metrics from records alone")
    p_score.add_argument("records", nargs="*", help="EpisodeRecord JSONL "
                                                    "files")
    p_score.add_argument("--problem", help="seating problem JSON")
    p_score.add_argument("--plan", help="seating plan JSON")
    p_score.add_argument("--out", help="report base path")
    p_score.set_defaults(func=cmd_score)

    p_replay = sub.add_parser("replay",
                              help="print a record's timeline as text")
    p_replay.add_argument("record", help="EpisodeRecord JSONL file")
    p_replay.add_argument("--out", help="re-emit a normalized copy here")
    p_replay.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RecordError as exc:
        print(f"record error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failure: report and exit nonzero
        log.debug("unhandled failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
