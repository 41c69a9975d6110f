"""CLI contract: exit codes, report artifacts, offline-scoring parity."""

import json
import subprocess
import sys

from benchsim.cli import main
from benchsim.core.geometry import Vec2
from benchsim.core.world import Body, EntityClass, Pose, WorldState
from benchsim.envs.macs import CaptureEvent
from benchsim.records import EpisodeRecorder, read_records, write_records

MACS_SCENARIO = """\
task = "macs"
episodes = 2
seed = 3

[macs]
n_agents = 2
n_supplies = 3
n_hazards = 2
n_sensors = 12
max_cycles = 50
"""

EXPLORE_SCENARIO = """\
task = "exploration"
episodes = 1
seed = 5

[exploration]
n_papers = 2
t_max = 150
"""

SEATING_SCENARIO = """\
task = "seating"
episodes = 5

[seating]
n_seats = 5
n_guests = 4
n_preferences = 7
"""


def write_scenario(tmp_path, text, out_name="rep"):
    cfg = tmp_path / "scenario.toml"
    cfg.write_text(f'output = "{tmp_path / out_name}"\n' + text)
    return cfg


def run_cli(*argv):
    return main(list(argv))


class TestRun:
    def test_macs_run_writes_report_with_return_field(self, tmp_path,
                                                      capsys):
        cfg = write_scenario(tmp_path, MACS_SCENARIO)
        assert run_cli("run", "--config", str(cfg)) == 0
        out_lines = capsys.readouterr().out.splitlines()
        assert str(tmp_path / "rep.json") in out_lines
        report = json.loads((tmp_path / "rep.json").read_text())
        assert "mean_episodic_return_per_agent" in report["aggregates"]
        assert report["schema_version"] == 1
        assert report["config"]["macs"]["n_agents"] == 2
        assert len(report["episodes"]) == 2
        assert (tmp_path / "rep.csv").exists()
        assert (tmp_path / "rep.records.jsonl").exists()

    def test_same_config_twice_rows_byte_identical(self, tmp_path):
        cfg = write_scenario(tmp_path, MACS_SCENARIO)
        assert run_cli("run", "--config", str(cfg),
                       "--out", str(tmp_path / "a")) == 0
        assert run_cli("run", "--config", str(cfg),
                       "--out", str(tmp_path / "b")) == 0
        rows_a = json.dumps(json.loads(
            (tmp_path / "a.json").read_text())["episodes"])
        rows_b = json.dumps(json.loads(
            (tmp_path / "b.json").read_text())["episodes"])
        assert rows_a == rows_b
        assert (tmp_path / "a.records.jsonl").read_bytes() == \
            (tmp_path / "b.records.jsonl").read_bytes()

    def test_cli_overrides_change_seeds(self, tmp_path):
        cfg = write_scenario(tmp_path, MACS_SCENARIO)
        assert run_cli("run", "--config", str(cfg), "--seed", "9",
                       "--episodes", "1", "--out",
                       str(tmp_path / "o")) == 0
        report = json.loads((tmp_path / "o.json").read_text())
        assert report["seeds"] == [9]
        assert len(report["episodes"]) == 1

    def test_exploration_run(self, tmp_path):
        cfg = write_scenario(tmp_path, EXPLORE_SCENARIO)
        assert run_cli("run", "--config", str(cfg)) == 0
        report = json.loads((tmp_path / "rep.json").read_text())
        assert "success_rate" in report["aggregates"]
        assert report["episodes"][0]["steps"] <= 150

    def test_seating_run_reports_mean_pg(self, tmp_path):
        cfg = write_scenario(tmp_path, SEATING_SCENARIO)
        assert run_cli("run", "--config", str(cfg)) == 0
        report = json.loads((tmp_path / "rep.json").read_text())
        assert report["aggregates"]["n_problems"] == 5
        assert "mean_pg" in report["aggregates"]
        # no dynamics: no records file for seating
        assert not (tmp_path / "rep.records.jsonl").exists()

    def test_bad_config_exits_2_with_line(self, tmp_path, capsys):
        cfg = tmp_path / "bad.toml"
        cfg.write_text('task = "macs"\n\n[macs]\nn_agent = 5\n')
        assert run_cli("run", "--config", str(cfg)) == 2
        err = capsys.readouterr().err
        assert "config error" in err
        assert "line 4" in err

    def test_missing_config_exits_2(self, tmp_path):
        assert run_cli("run", "--config", str(tmp_path / "nope.toml")) == 2

    def test_unknown_policy_exits_2(self, tmp_path, capsys):
        cfg = write_scenario(tmp_path, MACS_SCENARIO)
        assert run_cli("run", "--config", str(cfg),
                       "--policy", "alphazero") == 2
        assert "unknown policy" in capsys.readouterr().err

    def test_task_mismatched_policy_exits_2(self, tmp_path, capsys):
        cfg = write_scenario(tmp_path, MACS_SCENARIO)
        assert run_cli("run", "--config", str(cfg), "--policy", "dwa") == 2
        assert "socialnav" in capsys.readouterr().err


class TestScore:
    def test_offline_scoring_matches_live_aggregates(self, tmp_path,
                                                     capsys):
        cfg = write_scenario(tmp_path, MACS_SCENARIO)
        assert run_cli("run", "--config", str(cfg)) == 0
        live = json.loads((tmp_path / "rep.json").read_text())["aggregates"]
        capsys.readouterr()
        assert run_cli("score", str(tmp_path / "rep.records.jsonl")) == 0
        offline = json.loads(capsys.readouterr().out)
        assert offline == live

    def test_tampered_record_fails_conservation(self, tmp_path, capsys):
        rec_path = tmp_path / "capture.jsonl"
        write_records(rec_path, [self._capture_record()])
        assert run_cli("score", str(rec_path)) == 0
        capsys.readouterr()

        tampered = read_records(rec_path)
        capture = next(e for e in tampered[0].events
                       if e.name == "CaptureEvent")
        tampered[0].events.append(capture)  # duplicated capture event
        write_records(rec_path, tampered)
        assert run_cli("score", str(rec_path)) == 1
        err = capsys.readouterr().err
        assert "integrity" in err
        assert "CaptureEvent" in err or "conservation" in err or \
            "supply" in err

    @staticmethod
    def _capture_record():
        """Hand-built episode whose rewards exactly pay one capture."""
        rec = EpisodeRecorder(task="macs", seed=0,
                              config={"n_agents": 2, "n_supplies": 1},
                              n_agents=2)
        world = WorldState(bodies=[
            Body(pose=Pose(Vec2(0.0, 0.0), 0.0), velocity=Vec2(0, 0),
                 radius=0.3, max_speed=2.0, entity_class=EntityClass.AGENT),
            Body(pose=Pose(Vec2(1.0, 0.0), 0.0), velocity=Vec2(0, 0),
                 radius=0.3, max_speed=2.0, entity_class=EntityClass.AGENT)])
        rec.on_snapshot(world)
        rec.on_step(0, rewards=[5.0 - 0.01, 5.0 - 0.02],
                    thrust=[-0.01, -0.02],
                    actions=[[1.0, 0.0], [0.0, 1.0]])
        rec.on_events(0, [CaptureEvent(supply_id=0, agents=(0, 1),
                                       value=10.0, step=0)])
        world.ticks = 1
        rec.on_snapshot(world)
        return rec.finish(success=True, steps=1, supplies_captured=1)

    def test_seating_problem_plus_plan_emits_pg(self, tmp_path, capsys):
        problem = {
            "seats": [{"name": "s0", "attributes": ["window"]},
                      {"name": "s1", "attributes": []},
                      {"name": "s2", "attributes": []}],
            "adjacency": [["s0", "s1"], ["s1", "s2"]],
            "guests": ["ann", "bo"],
            "preferences": [
                {"kind": "next_to", "guest": "ann", "other": "bo",
                 "weight": 3},
                {"kind": "attribute", "guest": "ann", "attribute": "window",
                 "weight": 1}],
        }
        plan = {"ann": "s0", "bo": "s1"}
        ppath = tmp_path / "problem.json"
        ppath.write_text(json.dumps(problem))
        lpath = tmp_path / "plan.json"
        lpath.write_text(json.dumps(plan))
        assert run_cli("score", "--problem", str(ppath),
                       "--plan", str(lpath)) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["s_high"] == 1.0
        assert payload["s_low"] == 1.0
        assert payload["pg"] == 0.0
        assert payload["satisfied"] == [True, True]

    def test_seating_plan_without_problem_exits_2(self, tmp_path):
        lpath = tmp_path / "plan.json"
        lpath.write_text("{}")
        assert run_cli("score", "--plan", str(lpath)) == 2

    def test_score_nothing_exits_2(self):
        assert run_cli("score") == 2

    def test_corrupt_record_file_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"kind": "mystery"}\n')
        assert run_cli("score", str(bad)) == 2
        assert "record error" in capsys.readouterr().err


class TestThroughputAndReplay:
    def test_throughput_csv_and_plot(self, tmp_path, capsys):
        cfg = write_scenario(tmp_path, MACS_SCENARIO)
        out = tmp_path / "tp.csv"
        plot = tmp_path / "tp.dat"
        assert run_cli("throughput", "--config", str(cfg), "--envs", "1,2",
                       "--out", str(out), "--plot", str(plot)) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "n_envs,steps_per_second,wall_time_s,total_steps"
        assert len(lines) == 3
        plot_rows = [ln.split() for ln in plot.read_text().splitlines()]
        assert len(plot_rows) == 2
        assert all(len(r) == 2 for r in plot_rows)

    def test_throughput_rejects_bad_counts(self, tmp_path):
        assert run_cli("throughput", "--envs", "one,2") == 2
        assert run_cli("throughput", "--envs", "0") == 2

    def test_replay_prints_timeline(self, tmp_path, capsys):
        cfg = write_scenario(tmp_path, MACS_SCENARIO)
        assert run_cli("run", "--config", str(cfg), "--episodes", "1",
                       "--out", str(tmp_path / "r")) == 0
        capsys.readouterr()
        rec = tmp_path / "r.records.jsonl"
        assert run_cli("replay", str(rec)) == 0
        out = capsys.readouterr().out
        assert "episode task=macs" in out
        assert "tick=" in out
        assert "outcome:" in out

    def test_replay_reemits_identical_records(self, tmp_path, capsys):
        cfg = write_scenario(tmp_path, MACS_SCENARIO)
        assert run_cli("run", "--config", str(cfg), "--episodes", "1",
                       "--out", str(tmp_path / "r")) == 0
        rec = tmp_path / "r.records.jsonl"
        copy = tmp_path / "copy.jsonl"
        assert run_cli("replay", str(rec), "--out", str(copy)) == 0
        assert copy.read_bytes() == rec.read_bytes()


class TestSubprocessHarness:
    """Exit codes observed through a real process boundary."""

    def test_module_entry_ok_and_config_error(self, tmp_path):
        cfg = write_scenario(tmp_path, SEATING_SCENARIO)
        done = subprocess.run(
            [sys.executable, "-m", "benchsim", "run", "--config", str(cfg)],
            capture_output=True, text=True, timeout=120)
        assert done.returncode == 0, done.stderr

        bad = tmp_path / "bad.toml"
        bad.write_text("task = 'nope'\n")
        done = subprocess.run(
            [sys.executable, "-m", "benchsim", "run", "--config", str(bad)],
            capture_output=True, text=True,
            env={"BENCH_LOG": "not-a-level", "PATH": "/usr/bin:/bin"},
            timeout=120)
        assert done.returncode == 2
        assert "config error" in done.stderr
