import json

import pytest

from fluidwoz.cli import main, new_scenario
from fluidwoz.errors import RefusedExisting
from fluidwoz.eventlog import STREAM_ROBOT_STATE, read
from fluidwoz.model import load_scenario
from fluidwoz.replay import verify
from fluidwoz.session import run_headless
from fluidwoz.eventlog import open_session


def make_clean_log(tmp_path, scenario, name="clean"):
    path = tmp_path / f"{name}.woz.jsonl"
    writer = open_session(path, scenario, session_id=name)
    run_headless(scenario, [(50, "click", 5.0, 2.0), (600, "cancel")], writer=writer)
    return path


def test_new_scenario_validates_and_serves(tmp_path):
    path = tmp_path / "scene.json"
    assert main(["new-scenario", str(path)]) == 0
    scenario = load_scenario(path)
    assert scenario.world_width == 10.0
    assert {o.id for o in scenario.objects} == {"table_left", "table_right",
                                                "remote", "crate"}


def test_new_scenario_refuses_existing(tmp_path):
    path = tmp_path / "scene.json"
    new_scenario(path)
    with pytest.raises(RefusedExisting):
        new_scenario(path)
    assert main(["new-scenario", str(path)]) == 1


def test_verify_clean_log_exits_zero(tmp_path, scenario, capsys):
    log = make_clean_log(tmp_path, scenario)
    assert main(["verify", str(log)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["max_position_dev_m"] == 0.0
    assert out["first_divergent_tick"] is None


def test_verify_tampered_log_exits_one(tmp_path, scenario, capsys):
    log = make_clean_log(tmp_path, scenario, "tampered")
    lines = log.read_text().splitlines()
    for i, line in enumerate(lines):
        d = json.loads(line)
        if d["stream"] == STREAM_ROBOT_STATE and d["tick"] > 100:
            d["payload"]["y"] += 0.05
            lines[i] = json.dumps(d)
            break
    log.write_text("\n".join(lines) + "\n")
    assert main(["verify", str(log)]) == 1
    out = json.loads(capsys.readouterr().out)
    assert out["first_divergent_tick"] is not None


def test_report_outputs_stats(tmp_path, scenario, capsys):
    log = make_clean_log(tmp_path, scenario, "report")
    assert main(["report", str(log)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert "l2_ms" in out["components"]
    assert out["telescoping_ok"] is True
    # in-process sessions apply commands at the next boundary: L2 <= 2 ticks
    assert out["components"]["l2_ms"]["max_ms"] <= 2 * scenario.tick_ms


def test_report_pretty_table(tmp_path, scenario, capsys):
    log = make_clean_log(tmp_path, scenario, "pretty")
    assert main(["report", str(log), "--pretty"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("component")


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 2


def test_no_arguments_is_usage_error(capsys):
    assert main([]) == 2


def test_missing_log_is_a_runtime_error(tmp_path, capsys):
    assert main(["verify", str(tmp_path / "nope.jsonl")]) == 1


def test_invalid_scenario_fails_before_binding(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"world_width": -4}')
    assert main(["serve", "--scenario", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_port_env_var_default(monkeypatch):
    from fluidwoz.cli import build_parser
    monkeypatch.setenv("FLUID_WOZ_PORT", "9123")
    args = build_parser().parse_args(["serve", "--scenario", "x"])
    assert args.port == 9123


def test_script_command_end_to_end(tmp_path, capsys):
    scene = tmp_path / "scene.json"
    main(["new-scenario", str(scene)])
    capsys.readouterr()  # drain the new-scenario confirmation
    script = tmp_path / "demo.script"
    script.write_text(
        'at 100ms user says "over there"\n'
        'at 250ms wizard clicks (3.0, 1.5)\n'
    )
    code = main(["script", "--scenario", str(scene), str(script),
                 "--log-dir", str(tmp_path), "--settle-timeout", "30"])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["settled"] is True
    assert summary["latency"]["commands"] >= 1
    events = read(summary["log_path"])
    report = verify(events)
    assert report.max_position_dev_m == 0.0
