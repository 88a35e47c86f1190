"""Timed interaction scripts: a desk-scale substitute for live participants.

Script files drive both roles through the real protocol over loopback
sockets, so latency marks measure true transport. Grammar, one action per
line (blank lines and #-comments ignored):

    at 1000ms user says "put the remote on the table"
    at 1800ms wizard clicks (2.0, 3.5)
    at 5000ms wizard cancels
"""

from __future__ import annotations

import asyncio
import json
import re
from dataclasses import dataclass, field
from typing import Optional

import websockets

from .errors import ScriptParseError

_LINE_RES = (
    ("says", re.compile(
        r'^at\s+(?P<at>\d+)\s*ms\s+user\s+says\s+"(?P<text>.*)"\s*$')),
    ("clicks", re.compile(
        r'^at\s+(?P<at>\d+)\s*ms\s+wizard\s+clicks\s+\(\s*(?P<x>-?\d+(?:\.\d+)?)\s*,'
        r'\s*(?P<y>-?\d+(?:\.\d+)?)\s*\)\s*$')),
    ("cancels", re.compile(
        r'^at\s+(?P<at>\d+)\s*ms\s+wizard\s+cancels\s*$')),
)


@dataclass(frozen=True)
class ScriptAction:
    at_ms: int
    verb: str  # says / clicks / cancels
    text: Optional[str] = None
    x: Optional[float] = None
    y: Optional[float] = None


def parse_script(text: str) -> list[ScriptAction]:
    """Parse a script; raises ScriptParseError(line) before anything runs."""
    actions: list[ScriptAction] = []
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        for verb, rx in _LINE_RES:
            m = rx.match(line)
            if m is None:
                continue
            at = int(m.group("at"))
            if verb == "says":
                actions.append(ScriptAction(at, verb, text=m.group("text")))
            elif verb == "clicks":
                actions.append(ScriptAction(at, verb, x=float(m.group("x")),
                                            y=float(m.group("y"))))
            else:
                actions.append(ScriptAction(at, verb))
            break
        else:
            raise ScriptParseError(line_no, f"cannot parse {line!r}")
    actions.sort(key=lambda a: a.at_ms)
    return actions


@dataclass
class ScriptOutcome:
    """Everything the two scripted clients observed."""

    latency_messages: list[dict] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)
    relayed: list[dict] = field(default_factory=list)
    goal_statuses: list[dict] = field(default_factory=list)
    last_tick: int = 0
    settled: bool = False


class _Tracker:
    """Follows broadcasts to decide when the session has gone quiet."""

    def __init__(self):
        self.goal_state: dict[int, str] = {}
        self.speed = 0.0
        self.last_tick = 0

    def feed(self, m: dict) -> None:
        t = m.get("type")
        if t == "goal_status":
            self.goal_state[m["goal_id"]] = m["status"]
        elif t in ("state_delta", "keyframe"):
            self.last_tick = m.get("tick", self.last_tick)
            robot = m.get("robot") or {}
            self.speed = robot.get("linear_velocity", self.speed)

    @property
    def quiet(self) -> bool:
        busy = any(s in ("pending", "active") for s in self.goal_state.values())
        return not busy and self.speed == 0.0


async def drive_script(ws_url: str, actions: list[ScriptAction],
                       settle_timeout_s: float = 60.0) -> ScriptOutcome:
    """Run the script against a live server over real sockets.

    The user client acknowledges every state delta (that acknowledgment is
    what pins down 'user perceived the motion start'). After the last action
    the driver waits until no goal is non-terminal and the robot is still.
    """
    outcome = ScriptOutcome()
    tracker = _Tracker()

    async with websockets.connect(ws_url) as wizard_ws, \
            websockets.connect(ws_url) as user_ws:
        await wizard_ws.send(json.dumps({"type": "hello", "role": "wizard"}))
        await user_ws.send(json.dumps({"type": "hello", "role": "user"}))
        w_welcome = json.loads(await wizard_ws.recv())
        u_welcome = json.loads(await user_ws.recv())
        if w_welcome.get("type") != "welcome" or u_welcome.get("type") != "welcome":
            raise RuntimeError(f"handshake refused: {w_welcome} / {u_welcome}")

        async def user_loop():
            # besides acks, the scripted user stands in for a headset: it
            # reports its camera following the robot and idle controller state
            acked = 0
            async for raw in user_ws:
                m = json.loads(raw)
                if m.get("type") in ("state_delta", "keyframe"):
                    await user_ws.send(json.dumps({"type": "ack_delta", "tick": m["tick"]}))
                    acked += 1
                    robot = m.get("robot") or {}
                    if acked % 20 == 1 and robot:
                        await user_ws.send(json.dumps({
                            "type": "view_pose",
                            "pose": {"x": robot.get("x", 0.0) - 1.0,
                                     "y": robot.get("y", 0.0) - 1.0,
                                     "theta": robot.get("theta", 0.0)},
                        }))
                        await user_ws.send(json.dumps({
                            "type": "controller", "action": "gaze", "value": 1.0,
                        }))

        async def wizard_loop():
            async for raw in wizard_ws:
                m = json.loads(raw)
                tracker.feed(m)
                t = m.get("type")
                if t == "latency":
                    outcome.latency_messages.append(m)
                elif t == "error":
                    outcome.errors.append(m)
                elif t == "relay_utterance":
                    outcome.relayed.append(m)
                elif t == "goal_status":
                    outcome.goal_statuses.append(m)

        user_task = asyncio.create_task(user_loop())
        wizard_task = asyncio.create_task(wizard_loop())
        try:
            loop = asyncio.get_running_loop()
            t0 = loop.time()
            for action in actions:
                delay = t0 + action.at_ms / 1000.0 - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                if action.verb == "says":
                    await user_ws.send(json.dumps({"type": "utterance", "text": action.text}))
                elif action.verb == "clicks":
                    await wizard_ws.send(json.dumps({"type": "click", "x": action.x,
                                                     "y": action.y}))
                else:
                    await wizard_ws.send(json.dumps({"type": "cancel_all"}))

            deadline = loop.time() + settle_timeout_s
            quiet_since = None
            while loop.time() < deadline:
                await asyncio.sleep(0.05)
                if tracker.quiet:
                    if quiet_since is None:
                        quiet_since = loop.time()
                    elif loop.time() - quiet_since > 0.3:
                        outcome.settled = True
                        break
                else:
                    quiet_since = None
        finally:
            user_task.cancel()
            wizard_task.cancel()
            for task in (user_task, wizard_task):
                try:
                    await task
                except (asyncio.CancelledError, Exception):
                    pass
    outcome.last_tick = tracker.last_tick
    return outcome


def repair_demo_script() -> str:
    """The canonical pick-then-corrected-place interaction as a script."""
    return "\n".join([
        '# remote onto the right table, then repaired onto the left table',
        'at 1000ms user says "put the remote on the table"',
        'at 1800ms wizard clicks (5.0, 2.0)',
        'at 9200ms wizard clicks (7.5, 7.5)',
        'at 10600ms user says "no, the left-hand table"',
        'at 11400ms wizard clicks (2.5, 7.5)',
        '',
    ])
