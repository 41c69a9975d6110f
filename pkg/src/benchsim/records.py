"""Episode trajectory + event logs, serialized as JSONL.

One episode is a sequence of JSON lines: a `header`, then interleaved
`snapshot` / `step` / `event` lines, closed by an `outcome`. Every metric is
recomputable offline from the record alone, and a record can be replayed for
rendering. Files may hold many episodes back to back; each `header` starts a
new one.
"""

from __future__ import annotations

import dataclasses
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .core.geometry import Vec2
from .core.world import WorldState

SCHEMA_VERSION = 1
CREDIT_TOLERANCE = 1e-6  # reward-vs-event bookkeeping slack per step


class RecordError(ValueError):
    """Raised for malformed or schema-incompatible record files."""


@dataclass
class SnapshotRow:
    tick: int
    sim_time: float  # s
    entities: list[dict]
    episode_status: str = "running"
    events_since_last: list[dict] = field(default_factory=list)


@dataclass
class StepRow:
    index: int
    rewards: list[float] | None = None  # per-agent totals
    thrust: list[float] | None = None   # per-agent thrust penalty share
    actions: list | None = None
    command: list | None = None         # (v, omega) for navigation tasks


@dataclass
class EventRow:
    step: int
    name: str
    data: dict


@dataclass
class EpisodeRecord:
    task: str
    seed: object = None
    config: dict = field(default_factory=dict)
    session_id: str = ""
    n_agents: int = 1
    steps: list[StepRow] = field(default_factory=list)
    events: list[EventRow] = field(default_factory=list)
    snapshots: list[SnapshotRow] = field(default_factory=list)
    outcome: dict | None = None

    @property
    def success(self) -> bool:
        return bool(self.outcome and self.outcome.get("success"))


def _json_safe(value):
    if isinstance(value, Vec2):
        return [value.x, value.y]
    if isinstance(value, enum.Enum):
        return value.value
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {k: _json_safe(v)
                for k, v in dataclasses.asdict(value).items()}
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if hasattr(value, "item") and callable(value.item) \
            and getattr(value, "shape", None) == ():
        return value.item()  # numpy scalar
    return value


def entity_rows(world: WorldState) -> list[dict]:
    """Snapshot row per body: stable id = body index within the episode."""
    rows = []
    for i, b in enumerate(world.bodies):
        rows.append({"id": i, "class": b.entity_class.value,
                     "x": b.pose.position.x, "y": b.pose.position.y,
                     "heading": b.pose.heading, "radius": b.radius,
                     "vx": b.velocity.x, "vy": b.velocity.y})
    return rows


def event_row(step: int, event) -> EventRow:
    """Wrap an environment event dataclass as a record line."""
    data = _json_safe(event)
    if not isinstance(data, dict):
        data = {"value": data}
    return EventRow(step=step, name=type(event).__name__, data=data)


class EpisodeRecorder:
    """Incrementally builds one EpisodeRecord during a run."""

    def __init__(self, task: str, seed=None, config: dict | None = None,
                 n_agents: int = 1, session_id: str = ""):
        self.record = EpisodeRecord(task=task, seed=_json_safe(seed),
                                    config=_json_safe(config or {}),
                                    session_id=session_id, n_agents=n_agents)

    def on_step(self, index: int, rewards=None, thrust=None, actions=None,
                command=None) -> None:
        self.record.steps.append(StepRow(
            index=index,
            rewards=None if rewards is None else [float(r) for r in rewards],
            thrust=None if thrust is None else [float(t) for t in thrust],
            actions=_json_safe(actions) if actions is not None else None,
            command=_json_safe(list(command)) if command is not None else None))

    def on_events(self, step: int, events: Iterable) -> None:
        for ev in events:
            self.record.events.append(event_row(step, ev))

    def on_snapshot(self, world: WorldState, status: str = "running",
                    events_since_last: Iterable = ()) -> None:
        self.record.snapshots.append(SnapshotRow(
            tick=world.ticks, sim_time=world.clock,
            entities=entity_rows(world), episode_status=status,
            events_since_last=[_json_safe(e) for e in events_since_last]))

    def finish(self, success: bool, steps: int, **summary) -> EpisodeRecord:
        self.record.outcome = {"success": bool(success), "steps": int(steps),
                               **_json_safe(summary)}
        return self.record


def _record_lines(record: EpisodeRecord) -> Iterable[dict]:
    yield {"kind": "header", "schema_version": SCHEMA_VERSION,
           "task": record.task, "seed": record.seed, "config": record.config,
           "session_id": record.session_id, "n_agents": record.n_agents}
    # Stable interleave: snapshots/steps/events ordered by their step index.
    rows: list[tuple[float, int, dict]] = []
    for s in record.snapshots:
        rows.append((s.tick, 0, {"kind": "snapshot",
                                 **dataclasses.asdict(s)}))
    for st in record.steps:
        rows.append((st.index, 1, {"kind": "step",
                                   **{k: v for k, v in
                                      dataclasses.asdict(st).items()
                                      if v is not None}}))
    for e in record.events:
        rows.append((e.step, 2, {"kind": "event",
                                 **dataclasses.asdict(e)}))
    rows.sort(key=lambda r: (r[0], r[1]))
    for _, _, row in rows:
        yield row
    if record.outcome is not None:
        yield {"kind": "outcome", **record.outcome}


def write_records(path, records: Iterable[EpisodeRecord]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            for line in _record_lines(record):
                fh.write(json.dumps(line, sort_keys=True) + "\n")


def read_records(path) -> list[EpisodeRecord]:
    records: list[EpisodeRecord] = []
    current: EpisodeRecord | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                row = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise RecordError(f"line {lineno}: invalid JSON: {exc}")
            kind = row.get("kind")
            if kind == "header":
                version = row.get("schema_version")
                if version != SCHEMA_VERSION:
                    raise RecordError(
                        f"line {lineno}: schema_version {version!r} "
                        f"unsupported (expected {SCHEMA_VERSION})")
                current = EpisodeRecord(
                    task=row.get("task", ""), seed=row.get("seed"),
                    config=row.get("config", {}),
                    session_id=row.get("session_id", ""),
                    n_agents=row.get("n_agents", 1))
                records.append(current)
                continue
            if current is None:
                raise RecordError(f"line {lineno}: {kind!r} before header")
            if kind == "snapshot":
                current.snapshots.append(SnapshotRow(
                    tick=row["tick"], sim_time=row["sim_time"],
                    entities=row["entities"],
                    episode_status=row.get("episode_status", "running"),
                    events_since_last=row.get("events_since_last", [])))
            elif kind == "step":
                current.steps.append(StepRow(
                    index=row["index"], rewards=row.get("rewards"),
                    thrust=row.get("thrust"), actions=row.get("actions"),
                    command=row.get("command")))
            elif kind == "event":
                current.events.append(EventRow(
                    step=row["step"], name=row["name"],
                    data=row.get("data", {})))
            elif kind == "outcome":
                current.outcome = {k: v for k, v in row.items()
                                   if k != "kind"}
            else:
                raise RecordError(f"line {lineno}: unknown kind {kind!r}")
    return records


def validate_record(record: EpisodeRecord) -> list[str]:
    """Integrity findings (empty list = clean).

    Checks: outcome present, snapshot ticks strictly increasing, each supply
    captured at most once, and per-step reward totals matching event credit
    (rewards minus thrust shares must equal the step's event values).
    """
    issues: list[str] = []
    if record.outcome is None:
        issues.append("record has no outcome line")

    ticks = [s.tick for s in record.snapshots]
    if any(b <= a for a, b in zip(ticks, ticks[1:])):
        issues.append("snapshot ticks are not strictly increasing")

    captured: set = set()
    for ev in record.events:
        if ev.name == "CaptureEvent":
            sid = ev.data.get("supply_id")
            if sid in captured:
                issues.append(f"supply {sid} captured more than once")
            captured.add(sid)

    credit: dict[int, float] = {}
    for ev in record.events:
        if "value" in ev.data:
            credit[ev.step] = credit.get(ev.step, 0.0) + ev.data["value"]
    for step in record.steps:
        if step.rewards is None or step.thrust is None:
            continue
        paid = sum(step.rewards) - sum(step.thrust)
        owed = credit.get(step.index, 0.0)
        if abs(paid - owed) > CREDIT_TOLERANCE:
            issues.append(
                f"step {step.index}: rewards credit {paid:.9f} does not "
                f"match event value total {owed:.9f}")
    return issues
