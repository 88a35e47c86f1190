"""Operator entry points: serve, replay, verify, report, script, new-scenario.

Exit codes: 0 success, 1 failure (including verification divergence),
2 usage error. Reports go to stdout as JSON unless --pretty.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import eventlog, replay
from .errors import FluidWozError, InvalidScenario, RefusedExisting, ScenarioError
from .latency import render_table, report as latency_report
from .model import load_scenario, validate_scenario
from .script import drive_script, parse_script

DEFAULT_PORT = 8700
PORT_ENV = "FLUID_WOZ_PORT"


def _default_port() -> int:
    try:
        return int(os.environ.get(PORT_ENV, DEFAULT_PORT))
    except ValueError:
        return DEFAULT_PORT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fluidwoz",
                                description="Wizard-of-Oz teleoperation platform")
    sub = p.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="host a live session")
    serve.add_argument("--scenario", required=True, help="scenario JSON file")
    serve.add_argument("--port", type=int, default=_default_port())
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--tick-ms", type=int, default=None, help="override scenario tick")
    serve.add_argument("--snapshot-hz", default="every-tick",
                       help="snapshot cadence in Hz, or 'every-tick'")
    serve.add_argument("--log-dir", default=".", help="directory for the session log")

    rp = sub.add_parser("replay", help="serve a recorded log to observers at pace")
    rp.add_argument("log", help="session log (.woz.jsonl)")
    rp.add_argument("--speed", type=float, default=1.0)
    rp.add_argument("--port", type=int, default=_default_port())
    rp.add_argument("--host", default="127.0.0.1")

    vf = sub.add_parser("verify", help="re-simulate a log and report divergence")
    vf.add_argument("log")
    vf.add_argument("--pos-tol", type=float, default=1e-9, help="meters")
    vf.add_argument("--timing-tol", type=int, default=0, help="ticks")
    vf.add_argument("--pretty", action="store_true")

    rep = sub.add_parser("report", help="latency breakdown statistics for a log")
    rep.add_argument("log")
    rep.add_argument("--pretty", action="store_true", help="aligned table instead of JSON")

    sc = sub.add_parser("script", help="run a timed script over loopback and report")
    sc.add_argument("--scenario", required=True)
    sc.add_argument("script", help="script file of timed user/wizard actions")
    sc.add_argument("--tick-ms", type=int, default=None)
    sc.add_argument("--snapshot-hz", default="every-tick")
    sc.add_argument("--log-dir", default=".")
    sc.add_argument("--settle-timeout", type=float, default=60.0)
    sc.add_argument("--pretty", action="store_true")

    ns = sub.add_parser("new-scenario", help="write a commented starter scenario")
    ns.add_argument("path")
    return p


def _snapshot_arg(raw: str):
    return eventlog.EVERY_TICK if raw in ("every-tick", eventlog.EVERY_TICK) else int(raw)


def _load(scenario_path: str, tick_ms_override):
    """Load and validate before any port binding; bad files never half-start."""
    try:
        scenario = load_scenario(scenario_path)
        if tick_ms_override is not None:
            scenario = validate_scenario(replace(scenario, tick_ms=tick_ms_override))
    except (ScenarioError, OSError, ValueError, KeyError) as exc:
        raise InvalidScenario(f"{scenario_path}: {exc}") from exc
    return scenario


def cmd_serve(args) -> int:
    from .server.run import build_live_session, serve_forever

    scenario = _load(args.scenario, args.tick_ms)
    session = build_live_session(scenario, args.log_dir,
                                 snapshot_hz=_snapshot_arg(args.snapshot_hz))
    print(f"session {session.session_id} on ws://{args.host}:{args.port}/ws "
          f"logging to {session.log_path}", file=sys.stderr)
    serve_forever(session, host=args.host, port=args.port)
    return 0


def cmd_replay(args) -> int:
    from .server.run import make_replay_session, serve_forever

    events = eventlog.read(args.log)
    session = make_replay_session(events, args.speed)
    print(f"replaying {args.log} at {args.speed}x on ws://{args.host}:{args.port}/ws",
          file=sys.stderr)
    serve_forever(session, host=args.host, port=args.port)
    return 0


def cmd_verify(args) -> int:
    events = eventlog.read(args.log)
    rpt = replay.verify(events, pos_tol_m=args.pos_tol, timing_tol_ticks=args.timing_tol)
    print(json.dumps(rpt.to_dict(), indent=2 if args.pretty else None))
    return 1 if rpt.diverged else 0


def cmd_report(args) -> int:
    events = eventlog.read(args.log)
    rpt = latency_report(events)
    if args.pretty:
        print(render_table(rpt))
    else:
        print(json.dumps(rpt.to_dict()))
    return 0


def cmd_script(args) -> int:
    from .server.run import ServerThread, build_live_session

    actions = parse_script(Path(args.script).read_text(encoding="utf-8"))
    scenario = _load(args.scenario, args.tick_ms)
    session = build_live_session(scenario, args.log_dir,
                                 snapshot_hz=_snapshot_arg(args.snapshot_hz))
    server = ServerThread(session).start()
    try:
        outcome = asyncio.run(drive_script(server.ws_url, actions,
                                           settle_timeout_s=args.settle_timeout))
    finally:
        server.stop()

    events = eventlog.read(session.log_path)
    summary = {
        "log_path": str(session.log_path),
        "session_id": session.session_id,
        "actions": len(actions),
        "settled": outcome.settled,
        "last_tick": outcome.last_tick,
        "errors": outcome.errors,
    }
    try:
        rpt = latency_report(events)
        summary["latency"] = rpt.to_dict()
    except FluidWozError:
        summary["latency"] = None
    if args.pretty:
        print(json.dumps(summary, indent=2))
    else:
        print(json.dumps(summary))
    return 0


STARTER_SCENARIO = {
    "notes": [
        "Starter scene: a 10x10 m room with a remote on the floor, two",
        "tables to place it on, and one crate to route around.",
        "Clicks on the remote pick it up; clicks on a table place it there;",
        "clicks on open floor drive the robot.",
    ],
    "world_width": 10.0,
    "world_height": 10.0,
    "cell_size": 0.25,
    "tick_ms": 10,
    "robot": {
        "spawn": {"x": 1.0, "y": 1.0, "theta": 0.0},
        "v_max": 1.0,
        "a_max": 2.0,
        "decel": 2.0,
        "radius": 0.25,
        "reach_radius": 0.7,
        "grasp_duration_ms": 800,
        "release_duration_ms": 800,
    },
    "objects": [
        {"id": "table_left", "kind": "surface", "pose": {"x": 2.5, "y": 7.5, "theta": 0.0},
         "half_extents": [0.6, 0.4], "graspable": False, "resting_on": None},
        {"id": "table_right", "kind": "surface", "pose": {"x": 7.5, "y": 7.5, "theta": 0.0},
         "half_extents": [0.6, 0.4], "graspable": False, "resting_on": None},
        {"id": "remote", "kind": "item", "pose": {"x": 5.0, "y": 2.0, "theta": 0.0},
         "half_extents": [0.15, 0.08], "graspable": True, "resting_on": None},
        {"id": "crate", "kind": "obstacle", "pose": {"x": 5.0, "y": 5.0, "theta": 0.0},
         "half_extents": [0.5, 0.5], "graspable": False, "resting_on": None},
    ],
}


def new_scenario(path) -> None:
    """Write the starter scene; refuses to overwrite."""
    p = Path(path)
    if p.exists():
        raise RefusedExisting(str(p))
    p.write_text(json.dumps(STARTER_SCENARIO, indent=2) + "\n", encoding="utf-8")


def cmd_new_scenario(args) -> int:
    new_scenario(args.path)
    print(f"wrote {args.path}")
    return 0


_HANDLERS = {
    "serve": cmd_serve,
    "replay": cmd_replay,
    "verify": cmd_verify,
    "report": cmd_report,
    "script": cmd_script,
    "new-scenario": cmd_new_scenario,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints the synopsis itself
        return int(exc.code) if exc.code else 0
    try:
        return _HANDLERS[args.command](args)
    except FluidWozError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
