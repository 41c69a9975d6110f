"""Benchmark reports: versioned JSON plus a per-episode CSV summary.

Aggregates are computed from the per-episode rows by `aggregate_rows`, and
both the live runner and the offline scorer go through it, so a report can
always be re-derived from its own rows.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import platform
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .scores import efficiency, score_socialnav, success_rate

SCHEMA_VERSION = 1


@dataclass
class BenchmarkReport:
    task: str
    config: dict
    policy: str = ""
    seeds: list = field(default_factory=list)
    episodes: list = field(default_factory=list)   # per-episode row dicts
    aggregates: dict = field(default_factory=dict)
    fingerprint: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION


def environment_fingerprint() -> dict:
    try:
        from importlib.metadata import version
        pkg = version("benchsim")
    except Exception:
        pkg = "unknown"
    try:
        commit = subprocess.run(
            ["git", "rev-parse", "HEAD"], capture_output=True, text=True,
            timeout=5).stdout.strip() or "unknown"
    except Exception:
        commit = "unknown"
    return {"python": sys.version.split()[0],
            "platform": platform.platform(),
            "numpy": np.__version__,
            "package_version": pkg,
            "commit": commit}


def aggregate_rows(task: str, rows: list[dict], config: dict) -> dict:
    """Task-appropriate aggregates recomputable from per-episode rows."""
    if not rows:
        raise ValueError("no episode rows to aggregate")
    if task == "exploration":
        t_max = config.get("t_max", 500)
        eff_val = efficiency(rows, t_max)
        return {"success_rate": success_rate(rows),
                "efficiency": eff_val,
                "mean_steps": float(np.mean([r["steps"] for r in rows]))}
    if task == "macs":
        returns = [r["return_per_agent"] for r in rows]
        lengths = [r["steps"] for r in rows]
        mean_return = float(np.mean(returns))
        mean_len = float(np.mean(lengths))
        return {"mean_episodic_return_per_agent": mean_return,
                "mean_step_reward": mean_return / mean_len if mean_len
                else 0.0,
                "mean_steps": mean_len,
                "mean_supplies_captured":
                    float(np.mean([r["supplies_captured"] for r in rows]))}
    if task == "socialnav":
        score = score_socialnav(rows)
        return {"eff": score.eff, "srt": score.srt, "saf": score.saf,
                "snc": score.snc, "total": score.total,
                "n_episodes": score.n_episodes}
    if task == "seating":
        pgs = [r["pg"] for r in rows if r.get("pg") is not None]
        return {"mean_pg": float(np.mean(pgs)) if pgs else None,
                "n_problems": len(rows)}
    raise ValueError(f"unknown task {task!r}")


def build_report(task: str, config: dict, rows: list[dict], *,
                 policy: str = "", seeds: list | None = None
                 ) -> BenchmarkReport:
    return BenchmarkReport(task=task, config=config, policy=policy,
                           seeds=list(seeds or []), episodes=rows,
                           aggregates=aggregate_rows(task, rows, config),
                           fingerprint=environment_fingerprint())


def write_report(report: BenchmarkReport, path) -> tuple[Path, Path]:
    """Write <base>.json and <base>.csv; returns both paths."""
    base = Path(path)
    if base.suffix in (".json", ".csv"):
        base = base.with_suffix("")
    json_path = base.with_suffix(".json")
    csv_path = base.with_suffix(".csv")
    base.parent.mkdir(parents=True, exist_ok=True)
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(dataclasses.asdict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    fieldnames: list[str] = []
    for row in report.episodes:
        for key in row:
            if key not in fieldnames:
                fieldnames.append(key)
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, restval="")
        writer.writeheader()
        writer.writerows(report.episodes)
    return json_path, csv_path


def read_report(path) -> BenchmarkReport:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"report schema_version {version!r} unsupported "
                         f"(expected {SCHEMA_VERSION})")
    return BenchmarkReport(**data)
