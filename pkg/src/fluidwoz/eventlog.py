"""Append-only JSONL session log.

One event per line so a crash mid-write loses at most the final line. Line 1
always embeds the full scenario, which makes every log file self-contained
for replay. Envelope fields: event_id, session_id, tick, t_mono_ms,
t_wall_ms, stream, payload.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import (
    InvalidRate,
    IoError,
    MalformedLine,
    MissingScenarioHeader,
    NonMonotonicTimestamp,
    RefusedExisting,
    SchemaViolation,
)
from .model import ScenarioConfig

STREAM_WIZARD_ACTION = "wizard_action"
STREAM_ROBOT_STATE = "robot_state"
STREAM_OBJECT_STATE = "object_state"
STREAM_USER_VIEW = "user_view"
STREAM_USER_CONTROLLER = "user_controller"
STREAM_USER_UTTERANCE = "user_utterance"
STREAM_GOAL_STATUS = "goal_status"
STREAM_PROGRESS = "progress"
STREAM_LATENCY_MARK = "latency_mark"
STREAM_SCENARIO = "scenario"

# required payload keys per stream; appends are checked against this
_STREAM_SCHEMAS: dict[str, tuple[str, ...]] = {
    STREAM_WIZARD_ACTION: ("kind", "command_id"),
    STREAM_ROBOT_STATE: ("x", "y", "theta", "linear_velocity"),
    STREAM_OBJECT_STATE: ("objects", "keyframe"),
    STREAM_USER_VIEW: ("camera",),
    STREAM_USER_CONTROLLER: ("action", "value"),
    STREAM_USER_UTTERANCE: ("text", "command_id"),
    STREAM_GOAL_STATUS: ("goal_id", "status"),
    STREAM_PROGRESS: ("goal_id", "phase", "fraction"),
    STREAM_LATENCY_MARK: ("command_id", "kind", "t_mono_ms"),
    STREAM_SCENARIO: ("scenario",),
}

PAPER_MANDATED_STREAMS = (
    STREAM_WIZARD_ACTION,
    STREAM_ROBOT_STATE,
    STREAM_OBJECT_STATE,
    STREAM_USER_VIEW,
    STREAM_USER_CONTROLLER,
)

ENVELOPE_FIELDS = ("event_id", "session_id", "tick", "t_mono_ms", "t_wall_ms", "stream", "payload")


def mono_ms() -> int:
    """Monotonic server clock in whole milliseconds (the authoritative clock)."""
    return time.monotonic_ns() // 1_000_000


@dataclass
class LogEvent:
    event_id: int
    session_id: str
    tick: int
    t_mono_ms: int
    t_wall_ms: int
    stream: str
    payload: dict

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "session_id": self.session_id,
            "tick": self.tick,
            "t_mono_ms": self.t_mono_ms,
            "t_wall_ms": self.t_wall_ms,
            "stream": self.stream,
            "payload": self.payload,
        }


def validate_payload(stream: str, payload: dict) -> None:
    if stream not in _STREAM_SCHEMAS:
        raise SchemaViolation(f"unknown stream {stream!r}")
    if not isinstance(payload, dict):
        raise SchemaViolation(f"{stream}: payload must be an object")
    missing = [k for k in _STREAM_SCHEMAS[stream] if k not in payload]
    if missing:
        raise SchemaViolation(f"{stream}: payload missing {missing}")


class LogWriter:
    """Single writer per session; every append is flushed before returning."""

    def __init__(self, path, session_id: str, scenario: ScenarioConfig):
        self.path = Path(path)
        self.session_id = session_id
        self._next_event_id = 0
        self._last_mono = -1
        if self.path.exists():
            raise RefusedExisting(str(self.path))
        try:
            self._fh = open(self.path, "x", encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot open {self.path}: {exc}") from exc
        self.append(STREAM_SCENARIO, {"scenario": scenario.to_dict()}, tick=0)

    def append(self, stream: str, payload: dict, tick: int) -> int:
        validate_payload(stream, payload)
        now_mono = max(mono_ms(), self._last_mono)
        self._last_mono = now_mono
        event = LogEvent(
            event_id=self._next_event_id,
            session_id=self.session_id,
            tick=tick,
            t_mono_ms=now_mono,
            t_wall_ms=int(time.time() * 1000),
            stream=stream,
            payload=payload,
        )
        self._next_event_id += 1
        self._fh.write(json.dumps(event.to_dict(), separators=(",", ":")) + "\n")
        self._fh.flush()
        return event.event_id

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def open_session(path, scenario: ScenarioConfig, session_id: Optional[str] = None) -> LogWriter:
    """Create a fresh session log; refuses to touch an existing file."""
    if session_id is None:
        session_id = uuid.uuid4().hex[:12]
    return LogWriter(path, session_id, scenario)


def log_filename(session_id: str) -> str:
    return f"{session_id}.woz.jsonl"


def read(path) -> list[LogEvent]:
    """Parse and validate a session log.

    Unknown streams are preserved as opaque events for forward compatibility.
    A truncated final line (no trailing newline) is tolerated and dropped;
    anything else malformed raises with its line number.
    """
    p = Path(path)
    if not p.exists():
        raise IoError(f"no such log: {p}")
    raw = p.read_text(encoding="utf-8")
    if raw == "":
        raise MissingScenarioHeader(str(p))
    lines = raw.split("\n")
    truncated_tail = lines and lines[-1] != ""
    if not truncated_tail:
        lines = lines[:-1]

    events: list[LogEvent] = []
    last_mono = -1
    last_event_id = -1
    for i, line in enumerate(lines, start=1):
        if line == "":
            raise MalformedLine(i, "blank line inside log")
        try:
            d = json.loads(line)
        except json.JSONDecodeError:
            if truncated_tail and i == len(lines):
                break  # partial final write
            raise MalformedLine(i) from None
        if not isinstance(d, dict) or any(f not in d for f in ENVELOPE_FIELDS):
            raise MalformedLine(i, "missing envelope fields")
        try:
            event = LogEvent(
                event_id=int(d["event_id"]),
                session_id=str(d["session_id"]),
                tick=int(d["tick"]),
                t_mono_ms=int(d["t_mono_ms"]),
                t_wall_ms=int(d["t_wall_ms"]),
                stream=str(d["stream"]),
                payload=d["payload"],
            )
        except (TypeError, ValueError):
            raise MalformedLine(i, "bad envelope field types") from None
        if event.t_mono_ms < last_mono:
            raise NonMonotonicTimestamp(i)
        if event.event_id <= last_event_id:
            raise MalformedLine(i, "event_id not strictly increasing")
        last_mono = event.t_mono_ms
        last_event_id = event.event_id
        events.append(event)

    if not events or events[0].stream != STREAM_SCENARIO:
        raise MissingScenarioHeader(str(p))
    return events


def scenario_of(events: list[LogEvent]) -> ScenarioConfig:
    if not events or events[0].stream != STREAM_SCENARIO:
        raise MissingScenarioHeader("log has no scenario header event")
    return ScenarioConfig.from_dict(events[0].payload["scenario"])


EVERY_TICK = "every_tick"


@dataclass(frozen=True)
class SnapshotPolicy:
    """Cadence for robot/object state emission, shared by wire and log."""

    every_n_ticks: int
    keyframe_every: int = 100

    def due(self, tick: int) -> bool:
        return tick % self.every_n_ticks == 0

    def is_keyframe(self, snapshot_index: int) -> bool:
        return snapshot_index % self.keyframe_every == 0


def snapshot_policy(snapshot_hz, tick_ms: int, keyframe_every: int = 100) -> SnapshotPolicy:
    """Build the emission rule; snapshot_hz must divide the tick rate."""
    if snapshot_hz == EVERY_TICK:
        return SnapshotPolicy(every_n_ticks=1, keyframe_every=keyframe_every)
    hz = int(snapshot_hz)
    if hz <= 0:
        raise InvalidRate(f"snapshot_hz must be positive, got {snapshot_hz!r}")
    tick_rate = 1000.0 / tick_ms
    per = tick_rate / hz
    if abs(per - round(per)) > 1e-9 or round(per) < 1:
        raise InvalidRate(f"{hz} Hz does not divide the {tick_rate:.0f} Hz tick rate")
    return SnapshotPolicy(every_n_ticks=int(round(per)), keyframe_every=keyframe_every)
