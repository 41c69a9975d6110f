"""Scenario files: TOML with one per-task section, strictly validated.

Top-level keys select the task and the run shape (seeds, episodes, policy,
output); the section named after the task carries that task's parameters
under their canonical names. Unknown keys anywhere are rejected so typos
fail loudly instead of silently running defaults. parse -> serialize ->
parse is the identity.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .crowd import SfmParams
from .envs.exploration import ExplorationConfig
from .envs.macs import MacsConfig
from .envs.socialnav import SocialNavScenario

TASKS = ("exploration", "macs", "socialnav", "seating")

DEFAULT_POLICY = {"exploration": "explore_scan", "macs": "random",
                  "socialnav": "dwa", "seating": "random"}

_TOP_LEVEL_KEYS = ("task", "episodes", "seed", "seeds", "policy", "output")


class ConfigError(ValueError):
    """Invalid scenario file: bad syntax, unknown key, or bad value."""


@dataclass
class SeatingConfig:
    n_seats: int = 6
    n_guests: int = 6
    n_preferences: int = 8

    def __post_init__(self):
        if self.n_seats < 2:
            raise ValueError("n_seats must be >= 2")
        if not 1 <= self.n_guests <= self.n_seats:
            raise ValueError("n_guests must be in [1, n_seats]")
        if self.n_preferences < 0:
            raise ValueError("n_preferences must be >= 0")


_PARAM_TYPES = {"exploration": ExplorationConfig, "macs": MacsConfig,
                "socialnav": SocialNavScenario, "seating": SeatingConfig}

# config-file surface excludes programmatic-only fields
_HIDDEN_FIELDS = {"exploration": ("floor_plan",), "socialnav": ("sfm",)}


@dataclass
class ScenarioConfig:
    task: str
    params: object
    episodes: int = 1
    seed: int = 0
    seeds: list[int] | None = None
    policy: str = ""
    output: str = "report"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; "
                              f"expected one of {', '.join(TASKS)}")
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")
        if self.seeds is not None:
            if not self.seeds:
                raise ConfigError("seeds list must not be empty")
            if any(not isinstance(s, int) or isinstance(s, bool)
                   for s in self.seeds):
                raise ConfigError("seeds must be integers")
            if len(self.seeds) != self.episodes:
                raise ConfigError(
                    f"seeds lists {len(self.seeds)} entries but episodes "
                    f"is {self.episodes}; drop one or make them agree")
        if not self.policy:
            self.policy = DEFAULT_POLICY[self.task]

    @property
    def resolved_seeds(self) -> list[int]:
        if self.seeds is not None:
            return list(self.seeds)
        return [self.seed + i for i in range(self.episodes)]


def _find_line(text: str, key: str) -> int | None:
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0]
        if stripped.strip().startswith(key) or f"[{key}" in stripped:
            return i
    return None


def _located(text: str, key: str, message: str) -> ConfigError:
    line = _find_line(text, key)
    where = f" (line {line})" if line else ""
    return ConfigError(f"{message}{where}")


def _field_names(cls, task: str) -> list[str]:
    hidden = _HIDDEN_FIELDS.get(task, ())
    return [f.name for f in dataclasses.fields(cls) if f.name not in hidden]


def _coerce(value, annotation: str, key: str):
    """TOML value -> dataclass field value with int->float widening only."""
    if annotation == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number")
        return float(value)
    if annotation == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer")
        return value
    if annotation == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be true or false")
        return value
    if annotation == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string")
        return value
    raise ConfigError(f"{key} is not settable from a scenario file")


def _build_params(task: str, block: dict, text: str):
    cls = _PARAM_TYPES[task]
    allowed = _field_names(cls, task)
    annotations = {f.name: f.type for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in block.items():
        if key == "sfm" and task == "socialnav":
            continue  # nested table, handled below
        if key not in allowed:
            raise _located(
                text, key,
                f"unknown key {key!r} in [{task}]; "
                f"allowed: {', '.join(allowed)}")
        kwargs[key] = _coerce(value, annotations[key], f"{task}.{key}")

    if task == "socialnav" and "sfm" in block:
        sfm_block = block["sfm"]
        if not isinstance(sfm_block, dict):
            raise _located(text, "sfm", "[socialnav.sfm] must be a table")
        sfm_allowed = [f.name for f in dataclasses.fields(SfmParams)]
        sfm_kwargs = {}
        for key, value in sfm_block.items():
            if key not in sfm_allowed:
                raise _located(
                    text, key,
                    f"unknown key {key!r} in [socialnav.sfm]; "
                    f"allowed: {', '.join(sfm_allowed)}")
            sfm_kwargs[key] = _coerce(value, "float", f"sfm.{key}")
        try:
            kwargs["sfm"] = SfmParams(**sfm_kwargs)
        except ValueError as exc:
            raise ConfigError(f"[socialnav.sfm]: {exc}") from exc

    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{task}]: {exc}") from exc


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"scenario file is not valid TOML: {exc}") from exc

    if "task" not in data:
        raise ConfigError("missing required key 'task'")
    task = data["task"]
    if not isinstance(task, str) or task not in TASKS:
        raise _located(text, "task",
                       f"unknown task {task!r}; expected one of "
                       f"{', '.join(TASKS)}")

    for key, value in data.items():
        if key in _TOP_LEVEL_KEYS:
            continue
        if key == task and isinstance(value, dict):
            continue
        if key in TASKS:
            raise _located(text, key,
                           f"section [{key}] does not match task {task!r}")
        raise _located(text, key, f"unknown top-level key {key!r}")

    params = _build_params(task, data.get(task, {}), text)

    episodes = _coerce(data.get("episodes", 1), "int", "episodes")
    seed = _coerce(data.get("seed", 0), "int", "seed")
    seeds = data.get("seeds")
    if seeds is not None:
        if not isinstance(seeds, list) or not seeds:
            raise _located(text, "seeds",
                           "seeds must be a non-empty list of integers")
        if "episodes" not in data:
            episodes = len(seeds)
    policy = _coerce(data.get("policy", ""), "str", "policy")
    output = _coerce(data.get("output", "report"), "str", "output")
    return ScenarioConfig(task=task, params=params, episodes=episodes,
                          seed=seed, seeds=seeds, policy=policy,
                          output=output)


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


# ------------------------------------------------------------ serialization


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, list):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__} to TOML")


def serialize_config(cfg: ScenarioConfig) -> str:
    lines = [f"task = {_toml_value(cfg.task)}",
             f"episodes = {cfg.episodes}",
             f"seed = {cfg.seed}"]
    if cfg.seeds is not None:
        lines.append(f"seeds = {_toml_value(cfg.seeds)}")
    lines.append(f"policy = {_toml_value(cfg.policy)}")
    lines.append(f"output = {_toml_value(cfg.output)}")
    lines.append("")
    lines.append(f"[{cfg.task}]")
    for name in _field_names(type(cfg.params), cfg.task):
        lines.append(f"{name} = "
                     f"{_toml_value(getattr(cfg.params, name))}")
    if cfg.task == "socialnav":
        lines.append("")
        lines.append("[socialnav.sfm]")
        for f in dataclasses.fields(SfmParams):
            lines.append(f"{f.name} = "
                         f"{_toml_value(getattr(cfg.params.sfm, f.name))}")
    return "\n".join(lines) + "\n"


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Plain-dict form embedded in reports (self-describing results)."""
    return {"task": cfg.task, "episodes": cfg.episodes, "seed": cfg.seed,
            "seeds": cfg.resolved_seeds, "policy": cfg.policy,
            "output": cfg.output, cfg.task: dataclasses.asdict(cfg.params)}


def default_config(task: str, **overrides) -> ScenarioConfig:
    """Programmatic scenario with task defaults (used by CLI fallbacks)."""
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}")
    return ScenarioConfig(task=task, params=_PARAM_TYPES[task](), **overrides)
