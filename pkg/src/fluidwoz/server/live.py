"""The live session host: one tick loop owns all state, handlers only enqueue.

WebSocket handlers run on the same event loop as the tick task, so "enqueue
plus read immutable snapshots" is the entire concurrency story: no handler
ever touches the engine, the log, or the mark store directly. Latency marks
are stamped with the receipt time captured in the handler, then recorded in
order inside the loop.
"""

from __future__ import annotations

import asyncio
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..errors import EmptyLog, IncompleteTrace
from ..eventlog import (
    STREAM_GOAL_STATUS,
    STREAM_OBJECT_STATE,
    STREAM_PROGRESS,
    STREAM_ROBOT_STATE,
    STREAM_USER_CONTROLLER,
    STREAM_USER_UTTERANCE,
    STREAM_USER_VIEW,
    LogEvent,
    log_filename,
    mono_ms,
    open_session,
    scenario_of,
    snapshot_policy,
)
from ..latency import (
    LatencyMark,
    MarkKind,
    compute_breakdown,
    report,
    report_from_store,
)
from ..model import ValidatedScenario
from ..replay import paced
from ..session import SessionCore
from . import messages as msg

SEND_QUEUE_LIMIT = 8192


@dataclass
class Client:
    id: int
    role: str
    queue: asyncio.Queue = field(default_factory=lambda: asyncio.Queue(SEND_QUEUE_LIMIT))
    alive: bool = True

    def push(self, text: str) -> None:
        if not self.alive:
            return
        try:
            self.queue.put_nowait(text)
        except asyncio.QueueFull:
            self.alive = False  # slow consumer; sender task will close it


class LiveSession:
    """A running simulation session plus its connected clients."""

    def __init__(self, scenario: ValidatedScenario, log_dir, session_id: str,
                 snapshot_hz="every_tick"):
        self.scenario = scenario
        self.session_id = session_id
        self.log_path = Path(log_dir) / log_filename(session_id)
        policy = snapshot_policy(snapshot_hz, scenario.tick_ms)
        writer = open_session(self.log_path, scenario, session_id=session_id)
        self.core = SessionCore(scenario, writer, policy)
        self.clients: dict[int, Client] = {}
        self._wizard_id: Optional[int] = None
        self._next_client_id = 1
        self._next_command_id = 1
        self._inbox: list[tuple] = []
        self._unanswered_utterances: list[int] = []
        # command_id -> tick of its first moving state delta (None until seen)
        self._awaiting_motion: dict[int, Optional[int]] = {}
        self._fmp_marked: set[int] = set()
        self._stopping = asyncio.Event()
        self.mode = "live"

    # -- connection management (called from handlers, same loop) --------------

    def connect(self, role: str) -> tuple[Optional[Client], Optional[str]]:
        if role == msg.ROLE_WIZARD and self._wizard_id is not None:
            return None, "role_taken"
        client = Client(id=self._next_client_id, role=role)
        self._next_client_id += 1
        self.clients[client.id] = client
        if role == msg.ROLE_WIZARD:
            self._wizard_id = client.id
        client.push(msg.dump(msg.welcome(self.session_id, self.scenario.to_dict(), self.mode)))
        return client, None

    def disconnect(self, client: Client) -> None:
        client.alive = False
        self.clients.pop(client.id, None)
        if self._wizard_id == client.id:
            self._wizard_id = None

    # -- inbound messages (receipt stamping happens here) ---------------------

    def on_message(self, client: Client, parsed) -> None:
        t_recv = mono_ms()
        if isinstance(parsed, msg.Click):
            if client.role != msg.ROLE_WIZARD:
                client.push(msg.dump(msg.error("not_wizard", "only the wizard can click")))
                return
            cid = self._bind_command()
            self._inbox.append(("click", parsed.x, parsed.y, cid, t_recv))
        elif isinstance(parsed, msg.CancelAll):
            if client.role != msg.ROLE_WIZARD:
                client.push(msg.dump(msg.error("not_wizard", "only the wizard can cancel")))
                return
            cid = self._bind_command()
            self._inbox.append(("cancel", cid, t_recv))
        elif isinstance(parsed, msg.Utterance):
            cid = self._next_command_id
            self._next_command_id += 1
            self._unanswered_utterances.append(cid)
            self._inbox.append(("utterance", parsed.text, cid, t_recv, parsed.client_t_ms))
            self._send_to_wizard(msg.relay_utterance(parsed.text, cid))
        elif isinstance(parsed, msg.ViewPose):
            self._inbox.append(("user_view", parsed.pose))
        elif isinstance(parsed, msg.Controller):
            self._inbox.append(("user_controller", parsed.action, parsed.value))
        elif isinstance(parsed, msg.AckDelta):
            self._inbox.append(("ack", parsed.tick, t_recv))

    def _bind_command(self) -> int:
        """Attribute wizard input to the oldest unanswered utterance, else
        mint a wizard-initiated command id."""
        if self._unanswered_utterances:
            return self._unanswered_utterances.pop(0)
        cid = self._next_command_id
        self._next_command_id += 1
        return cid

    # -- the tick loop ---------------------------------------------------------

    async def run(self) -> None:
        loop = asyncio.get_running_loop()
        tick_s = self.scenario.tick_ms / 1000.0
        next_t = loop.time() + tick_s
        try:
            while not self._stopping.is_set():
                self._process_boundary()
                delay = next_t - loop.time()
                next_t += tick_s
                if delay > 0:
                    try:
                        await asyncio.wait_for(self._stopping.wait(), timeout=delay)
                    except asyncio.TimeoutError:
                        pass
                else:
                    await asyncio.sleep(0)  # running behind; yield and catch up
        finally:
            self.core.close()

    def stop(self) -> None:
        self._stopping.set()

    def _process_boundary(self) -> None:
        inbox, self._inbox = self._inbox, []
        for item in inbox:
            self._apply(item)

        out = self.core.advance_tick()
        for ev in out.status_events:
            self._broadcast(msg.goal_status(ev.to_payload(), ev.tick))
        for rep in out.progress:
            self._broadcast(msg.progress(rep.to_dict()))
        if out.snapshot is not None:
            snap = out.snapshot
            now = mono_ms()
            if snap.keyframe:
                self._broadcast(msg.keyframe(snap.tick, now, snap.robot, snap.all_objects))
            else:
                self._broadcast(msg.state_delta(snap.tick, now, snap.robot, snap.changed_objects))
            if snap.robot["linear_velocity"] > 0.0:
                for cid, seen in self._awaiting_motion.items():
                    if seen is None:
                        self._awaiting_motion[cid] = snap.tick

    def _apply(self, item: tuple) -> None:
        kind = item[0]
        core = self.core
        if kind == "click":
            _, x, y, cid, t_recv = item
            outcome = core.apply_wizard_click(x, y, command_id=cid, wizard_input_t=t_recv)
            for ev in outcome.status_events:
                self._broadcast(msg.goal_status(ev.to_payload(), ev.tick))
            if outcome.blocked:
                self._send_to_wizard(msg.error("illegal_click", "target is blocked"))
            elif outcome.rejected_reason is not None:
                self._send_to_wizard(msg.error("goal_rejected", outcome.rejected_reason))
            else:
                self._awaiting_motion.setdefault(cid, None)
        elif kind == "cancel":
            _, cid, t_recv = item
            _, events = core.apply_cancel(command_id=cid, wizard_input_t=t_recv)
            for ev in events:
                self._broadcast(msg.goal_status(ev.to_payload(), ev.tick))
        elif kind == "utterance":
            _, text, cid, t_recv, client_t = item
            core.mark(LatencyMark(cid, MarkKind.USER_REQUEST, t_recv, client_t_ms=client_t))
            core.log(STREAM_USER_UTTERANCE, {"text": text, "command_id": cid})
        elif kind == "user_view":
            core.log(STREAM_USER_VIEW, {"camera": item[1]})
        elif kind == "user_controller":
            core.log(STREAM_USER_CONTROLLER, {"action": item[1], "value": item[2]})
        elif kind == "ack":
            _, tick, t_recv = item
            self._handle_ack(tick, t_recv)

    def _handle_ack(self, tick: int, t_recv: int) -> None:
        for cid, motion_tick in list(self._awaiting_motion.items()):
            if motion_tick is None or tick < motion_tick or cid in self._fmp_marked:
                continue
            if self.core.mark(LatencyMark(cid, MarkKind.FIRST_MOTION_PERCEIVED, t_recv)):
                self._fmp_marked.add(cid)
                del self._awaiting_motion[cid]
                try:
                    bd = compute_breakdown(self.core.marks.marks_for(cid))
                except IncompleteTrace:
                    continue
                self._broadcast(msg.latency(bd.to_dict()))

    # -- outbound --------------------------------------------------------------

    def _broadcast(self, message: dict) -> None:
        text = msg.dump(message)
        for client in self.clients.values():
            client.push(text)

    def _send_to_wizard(self, message: dict) -> None:
        if self._wizard_id is not None and self._wizard_id in self.clients:
            self.clients[self._wizard_id].push(msg.dump(message))

    # -- REST-facing snapshots ---------------------------------------------------

    def latency_report_dict(self) -> dict:
        try:
            return report_from_store(self.core.marks).to_dict()
        except EmptyLog:
            return {"commands": 0, "components": {}, "telescoping_ok": True,
                    "telescoping_violations": []}

    def info(self) -> dict:
        return {
            "session_id": self.session_id,
            "mode": self.mode,
            "tick": self.core.tick,
            "log_path": str(self.log_path),
            "wizard_connected": self._wizard_id is not None,
            "clients": len(self.clients),
        }


class ReplaySession:
    """Serves a recorded log to observers at recorded pace."""

    def __init__(self, events: list[LogEvent], speed_factor: float):
        self.events = events
        self.speed = speed_factor
        self.scenario = scenario_of(events)
        self.session_id = events[0].session_id
        self.clients: dict[int, Client] = {}
        self._next_client_id = 1
        self._stopping = asyncio.Event()
        self._first_client = asyncio.Event()
        self.mode = "replay"
        self.finished = False

    def connect(self, role: str) -> tuple[Optional[Client], Optional[str]]:
        client = Client(id=self._next_client_id, role=role)
        self._next_client_id += 1
        self.clients[client.id] = client
        client.push(msg.dump(msg.welcome(self.session_id, self.scenario.to_dict(), self.mode)))
        self._first_client.set()
        return client, None

    def disconnect(self, client: Client) -> None:
        client.alive = False
        self.clients.pop(client.id, None)

    def on_message(self, client: Client, parsed) -> None:
        pass  # playback is read-only

    def stop(self) -> None:
        self._stopping.set()
        self._first_client.set()

    async def run(self) -> None:
        await self._first_client.wait()
        if self._stopping.is_set():
            return
        last_robot: Optional[dict] = None
        for delay, ev in paced(self.events, self.speed):
            if delay > 0:
                try:
                    await asyncio.wait_for(self._stopping.wait(), timeout=delay)
                except asyncio.TimeoutError:
                    pass
            if self._stopping.is_set():
                return
            out, last_robot = _translate(ev, last_robot)
            if out is not None:
                text = msg.dump(out)
                for client in self.clients.values():
                    client.push(text)
        self.finished = True

    def latency_report_dict(self) -> dict:
        try:
            return report(self.events).to_dict()
        except EmptyLog:
            return {"commands": 0, "components": {}, "telescoping_ok": True,
                    "telescoping_violations": []}

    def info(self) -> dict:
        return {
            "session_id": self.session_id,
            "mode": self.mode,
            "tick": None,
            "log_path": None,
            "wizard_connected": False,
            "clients": len(self.clients),
        }


def _translate(ev: LogEvent, last_robot: Optional[dict]):
    """Map a logged event onto the live wire vocabulary."""
    if ev.stream == STREAM_ROBOT_STATE:
        return msg.state_delta(ev.tick, ev.t_mono_ms, ev.payload, []), ev.payload
    if ev.stream == STREAM_OBJECT_STATE:
        if ev.payload.get("keyframe"):
            return msg.keyframe(ev.tick, ev.t_mono_ms, last_robot or {}, ev.payload["objects"]), last_robot
        return msg.state_delta(ev.tick, ev.t_mono_ms, last_robot or {}, ev.payload["objects"]), last_robot
    if ev.stream == STREAM_GOAL_STATUS:
        return msg.goal_status(ev.payload, ev.tick), last_robot
    if ev.stream == STREAM_PROGRESS:
        return msg.progress(ev.payload), last_robot
    if ev.stream == STREAM_USER_UTTERANCE:
        return msg.relay_utterance(ev.payload.get("text", ""), ev.payload.get("command_id")), last_robot
    return None, last_robot
