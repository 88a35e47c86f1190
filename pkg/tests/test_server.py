"""Live protocol tests over real loopback sockets."""

import asyncio
import json

import httpx
import pytest
import websockets

from fluidwoz.eventlog import read
from fluidwoz.latency import MarkKind, marks_from_events
from fluidwoz.replay import verify
from fluidwoz.server.run import ServerThread, build_live_session


@pytest.fixture
def server(tmp_path, scenario):
    session = build_live_session(scenario, tmp_path, session_id="testsession")
    handle = ServerThread(session).start()
    yield handle
    handle.stop()


async def connect(url, role):
    ws = await websockets.connect(url)
    await ws.send(json.dumps({"type": "hello", "role": role}))
    reply = json.loads(await ws.recv())
    return ws, reply


async def next_of_type(ws, wanted, timeout=5.0):
    loop = asyncio.get_running_loop()
    deadline = loop.time() + timeout
    while True:
        raw = await asyncio.wait_for(ws.recv(), timeout=deadline - loop.time())
        m = json.loads(raw)
        if m.get("type") in wanted:
            return m


def test_observer_handshake_and_deltas(server):
    async def flow():
        ws, welcome = await connect(server.ws_url, "observer")
        assert welcome["type"] == "welcome"
        assert welcome["session_id"] == "testsession"
        assert welcome["scenario"]["world_width"] == 10.0
        first = await next_of_type(ws, {"state_delta", "keyframe"})
        second = await next_of_type(ws, {"state_delta", "keyframe"})
        assert second["tick"] > first["tick"]
        assert "robot" in first
        await ws.close()
    asyncio.run(flow())


def test_second_wizard_refused(server):
    async def flow():
        w1, welcome = await connect(server.ws_url, "wizard")
        assert welcome["type"] == "welcome"
        w2, refused = await connect(server.ws_url, "wizard")
        assert refused == {"type": "refused", "code": "role_taken"}
        await w1.close()
        await w2.close()
    asyncio.run(flow())


def test_wizard_slot_frees_on_disconnect(server):
    async def flow():
        w1, _ = await connect(server.ws_url, "wizard")
        await w1.close()
        await asyncio.sleep(0.1)
        w2, welcome = await connect(server.ws_url, "wizard")
        assert welcome["type"] == "welcome"
        await w2.close()
    asyncio.run(flow())


def test_single_wizard_under_concurrent_races(server):
    async def flow():
        results = await asyncio.gather(*(connect(server.ws_url, "wizard")
                                         for _ in range(8)))
        welcomes = [r for _, r in results if r["type"] == "welcome"]
        refusals = [r for _, r in results if r["type"] == "refused"]
        assert len(welcomes) == 1
        assert len(refusals) == 7
        for ws, _ in results:
            await ws.close()
    asyncio.run(flow())


def test_click_activates_within_two_ticks(server, scenario):
    async def flow():
        ws, _ = await connect(server.ws_url, "wizard")
        before = await next_of_type(ws, {"state_delta", "keyframe"})
        await ws.send(json.dumps({"type": "click", "x": 5.0, "y": 3.0}))
        status = await next_of_type(ws, {"goal_status"})
        assert status["status"] == "pending"
        status = await next_of_type(ws, {"goal_status"})
        assert status["status"] == "active"
        assert status["variant"]["kind"] == "navigate_to"
        # later deltas show the robot moving
        while True:
            delta = await next_of_type(ws, {"state_delta"})
            if delta["robot"]["linear_velocity"] > 0:
                break
        await ws.close()
    asyncio.run(flow())


def test_illegal_click_errors_only_the_wizard(server):
    async def flow():
        wizard, _ = await connect(server.ws_url, "wizard")
        await wizard.send(json.dumps({"type": "click", "x": 5.0, "y": 5.0}))
        err = await next_of_type(wizard, {"error"})
        assert err["code"] == "illegal_click"
        await wizard.close()
    asyncio.run(flow())


def test_cancel_all_broadcast_and_deceleration(server):
    async def flow():
        ws, _ = await connect(server.ws_url, "wizard")
        await ws.send(json.dumps({"type": "click", "x": 8.0, "y": 2.0}))
        while True:
            delta = await next_of_type(ws, {"state_delta"})
            if delta["robot"]["linear_velocity"] >= 0.5:
                break
        await ws.send(json.dumps({"type": "cancel_all"}))
        status = await next_of_type(ws, {"goal_status"})
        assert status["status"] == "cancelled"
        speeds = []
        while True:
            delta = await next_of_type(ws, {"state_delta"})
            speeds.append(delta["robot"]["linear_velocity"])
            if delta["robot"]["linear_velocity"] == 0.0:
                break
        assert all(a >= b for a, b in zip(speeds, speeds[1:]))
        await ws.close()
    asyncio.run(flow())


def test_utterance_relay_and_latency_pipeline(server):
    async def flow():
        wizard, _ = await connect(server.ws_url, "wizard")
        user, _ = await connect(server.ws_url, "user")

        async def user_acks():
            async for raw in user:
                m = json.loads(raw)
                if m.get("type") in ("state_delta", "keyframe"):
                    await user.send(json.dumps({"type": "ack_delta", "tick": m["tick"]}))

        ack_task = asyncio.create_task(user_acks())
        await user.send(json.dumps({"type": "utterance",
                                    "text": "put the remote on the table"}))
        relayed = await next_of_type(wizard, {"relay_utterance"})
        assert relayed["text"] == "put the remote on the table"
        cid = relayed["command_id"]

        await asyncio.sleep(0.2)
        await wizard.send(json.dumps({"type": "click", "x": 5.0, "y": 2.0}))
        latency_msg = await next_of_type(wizard, {"latency"}, timeout=10.0)
        assert latency_msg["command_id"] == cid
        assert latency_msg["l1_ms"] >= 0
        assert latency_msg["l2_ms"] >= 0
        assert latency_msg["l3_ms"] >= 0
        ack_task.cancel()
        await wizard.close()
        await user.close()
    asyncio.run(flow())


def test_view_pose_and_controller_are_logged(server):
    async def flow():
        user, _ = await connect(server.ws_url, "user")
        await user.send(json.dumps({"type": "view_pose",
                                    "pose": {"x": 1.0, "y": 2.0, "theta": 0.1}}))
        await user.send(json.dumps({"type": "controller",
                                    "action": "trigger", "value": 1.0}))
        await asyncio.sleep(0.2)
        await user.close()
    asyncio.run(flow())
    # events flushed on append; log file is live-readable mid-session
    events = read(server.session.log_path)
    streams = {e.stream for e in events}
    assert "user_view" in streams
    assert "user_controller" in streams


def test_malformed_message_keeps_connection(server):
    async def flow():
        ws, _ = await connect(server.ws_url, "wizard")
        await ws.send("this is not json")
        err = await next_of_type(ws, {"error"})
        assert err["code"] == "malformed_message"
        await ws.send(json.dumps({"type": "click", "x": 5.0, "y": 3.0}))
        status = await next_of_type(ws, {"goal_status"})
        assert status["goal_id"] == 1
        await ws.close()
    asyncio.run(flow())


def test_rest_endpoints(server):
    with httpx.Client(base_url=server.http_url) as client:
        health = client.get("/healthz").json()
        assert health["status"] == "ok"
        assert health["session_id"] == "testsession"
        scenario = client.get("/scenario").json()["scenario"]
        assert scenario["tick_ms"] == 10
        info = client.get("/session").json()
        assert info["log_path"].endswith(".woz.jsonl")
        report = client.get("/latency/report").json()
        assert report["commands"] == 0


def test_broadcast_stream_matches_the_log(tmp_path, scenario):
    # an observer's delta stream must be value-identical to the logged snapshots
    session = build_live_session(scenario, tmp_path, session_id="wirecheck")
    handle = ServerThread(session).start()
    seen = {}

    async def flow():
        wizard, _ = await connect(handle.ws_url, "wizard")
        observer, _ = await connect(handle.ws_url, "observer")
        await wizard.send(json.dumps({"type": "click", "x": 5.0, "y": 2.0}))

        async def collect():
            async for raw in observer:
                m = json.loads(raw)
                if m.get("type") in ("state_delta", "keyframe") and m.get("robot"):
                    seen[m["tick"]] = m["robot"]

        task = asyncio.create_task(collect())
        await asyncio.sleep(2.0)
        task.cancel()
        await wizard.close()
        await observer.close()
    asyncio.run(flow())
    handle.stop()

    logged = {e.tick: e.payload for e in read(session.log_path)
              if e.stream == "robot_state"}
    compared = 0
    for tick, robot in seen.items():
        if tick in logged:
            assert robot["x"] == logged[tick]["x"]
            assert robot["y"] == logged[tick]["y"]
            assert robot["linear_velocity"] == logged[tick]["linear_velocity"]
            compared += 1
    assert compared > 50


def test_replay_serves_translated_stream(tmp_path, scenario):
    from fluidwoz.eventlog import open_session
    from fluidwoz.server.run import make_replay_session
    from fluidwoz.session import run_headless

    log_path = tmp_path / "source.woz.jsonl"
    writer = open_session(log_path, scenario, session_id="source")
    run_headless(scenario, [(20, "click", 3.0, 1.0)], writer=writer)
    events = read(log_path)

    session = make_replay_session(events, speed_factor=50.0)
    handle = ServerThread(session).start()

    async def flow():
        ws, welcome = await connect(handle.ws_url, "observer")
        assert welcome["mode"] == "replay"
        assert welcome["session_id"] == "source"
        kinds = set()
        deltas = 0
        try:
            while deltas < 20:
                m = await next_of_type(ws, {"state_delta", "keyframe", "goal_status",
                                            "progress"}, timeout=15.0)
                kinds.add(m["type"])
                if m["type"] in ("state_delta", "keyframe"):
                    deltas += 1
        finally:
            await ws.close()
        assert "goal_status" in kinds or deltas >= 20
    asyncio.run(flow())
    handle.stop()


def test_live_session_log_verifies_after_interaction(tmp_path, scenario):
    session = build_live_session(scenario, tmp_path, session_id="verifyme")
    handle = ServerThread(session).start()

    async def flow():
        ws, _ = await connect(handle.ws_url, "wizard")
        await ws.send(json.dumps({"type": "click", "x": 5.0, "y": 2.0}))
        await next_of_type(ws, {"goal_status"})
        await asyncio.sleep(1.0)
        await ws.send(json.dumps({"type": "cancel_all"}))
        await asyncio.sleep(0.5)
        await ws.close()
    asyncio.run(flow())
    handle.stop()

    events = read(session.log_path)
    marks = marks_from_events(events)
    assert any(marks.has(cid, MarkKind.WIZARD_INPUT) for cid in marks.command_ids())
    report = verify(events)
    assert report.max_position_dev_m == 0.0
    assert report.max_timing_dev_ticks == 0
