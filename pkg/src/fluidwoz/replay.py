"""Paced playback and deterministic re-simulation of session logs.

Two distinct modes: playback re-emits logged events with their recorded
inter-event gaps (for humans watching a session re-unfold), while
resimulate rebuilds the whole state trajectory by re-applying only the
logged wizard commands at their recorded ticks. verify() is the bridge:
it proves the re-derived trajectory matches the logged snapshots.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

from .errors import CommandOutOfRange, InvalidSpeed
from .eventlog import (
    STREAM_GOAL_STATUS,
    STREAM_ROBOT_STATE,
    STREAM_WIZARD_ACTION,
    LogEvent,
    SnapshotPolicy,
    scenario_of,
)
from .model import validate_scenario
from .session import SessionCore

# a missing lifecycle transition counts as this many ticks of divergence
MISSING_TRANSITION_TICKS = 1 << 31


@dataclass
class DivergenceReport:
    max_position_dev_m: float
    max_timing_dev_ticks: int
    first_divergent_tick: Optional[int]
    events_compared: int

    @property
    def diverged(self) -> bool:
        return self.first_divergent_tick is not None

    def to_dict(self) -> dict:
        return {
            "max_position_dev_m": self.max_position_dev_m,
            "max_timing_dev_ticks": self.max_timing_dev_ticks,
            "first_divergent_tick": self.first_divergent_tick,
            "events_compared": self.events_compared,
        }


@dataclass
class ResimResult:
    trajectory: dict[int, tuple[float, float, float, float]]  # tick -> x, y, theta, v
    transitions: dict[tuple[int, str], int]  # (goal_id, status) -> tick
    core: SessionCore

    @property
    def final_world(self):
        return self.core.world


def _commands_of(events: Iterable[LogEvent]) -> list[LogEvent]:
    return [ev for ev in events if ev.stream == STREAM_WIZARD_ACTION]


def resimulate(events: list[LogEvent]) -> ResimResult:
    """Re-derive the full trajectory from the scenario header plus commands.

    Snapshot events in the input are ignored entirely, so the result is
    invariant under their deletion: commands suffice.
    """
    scenario = validate_scenario(scenario_of(events))
    commands = _commands_of(events)
    for cmd in commands:
        if cmd.tick < 0:
            raise CommandOutOfRange(f"event {cmd.event_id} at tick {cmd.tick}")

    end_tick = max((ev.tick for ev in events), default=0)
    core = SessionCore(scenario, writer=None, snapshot=SnapshotPolicy(every_n_ticks=1))
    transitions: dict[tuple[int, str], int] = {}

    def absorb(status_events):
        for ev in status_events:
            transitions.setdefault((ev.goal_id, ev.status.value), ev.tick)

    def pose_now() -> tuple[float, float, float, float]:
        r = core.world.robot
        return (r.base.x, r.base.y, r.base.theta, r.linear_velocity)

    trajectory = {0: pose_now()}
    pending = list(commands)
    while True:
        while pending and pending[0].tick <= core.tick:
            cmd = pending.pop(0)
            payload = cmd.payload
            if payload.get("kind") == "click":
                outcome = core.apply_wizard_click(
                    float(payload["x"]), float(payload["y"]),
                    command_id=payload.get("command_id"),
                )
                absorb(outcome.status_events)
            elif payload.get("kind") == "cancel_all":
                _, evs = core.apply_cancel(command_id=payload.get("command_id"))
                absorb(evs)
        if core.tick >= end_tick:
            break
        out = core.advance_tick()
        absorb(out.status_events)
        trajectory[core.tick] = pose_now()
    return ResimResult(trajectory=trajectory, transitions=transitions, core=core)


def verify(events: list[LogEvent], pos_tol_m: float = 1e-9,
           timing_tol_ticks: int = 0) -> DivergenceReport:
    """Compare logged robot snapshots and goal timings against a fresh
    re-simulation of the same commands."""
    resim = resimulate(events)
    max_pos = 0.0
    max_timing = 0
    first_divergent: Optional[int] = None
    compared = 0

    def flag(tick: int):
        nonlocal first_divergent
        if first_divergent is None or tick < first_divergent:
            first_divergent = tick

    for ev in events:
        if ev.stream == STREAM_ROBOT_STATE:
            if ev.tick not in resim.trajectory:
                continue
            x, y, _, _ = resim.trajectory[ev.tick]
            dev = math.hypot(float(ev.payload["x"]) - x, float(ev.payload["y"]) - y)
            compared += 1
            max_pos = max(max_pos, dev)
            if dev > pos_tol_m:
                flag(ev.tick)
        elif ev.stream == STREAM_GOAL_STATUS:
            key = (int(ev.payload["goal_id"]), str(ev.payload["status"]))
            compared += 1
            resim_tick = resim.transitions.get(key)
            if resim_tick is None:
                max_timing = max(max_timing, MISSING_TRANSITION_TICKS)
                flag(ev.tick)
                continue
            dev_ticks = abs(resim_tick - ev.tick)
            max_timing = max(max_timing, dev_ticks)
            if dev_ticks > timing_tol_ticks:
                flag(ev.tick)

    return DivergenceReport(
        max_position_dev_m=max_pos,
        max_timing_dev_ticks=max_timing,
        first_divergent_tick=first_divergent,
        events_compared=compared,
    )


def paced(events: Iterable[LogEvent], speed_factor: float) -> Iterator[tuple[float, LogEvent]]:
    """(delay_seconds, event) pairs reproducing the recorded gaps / speed."""
    if not (speed_factor > 0):
        raise InvalidSpeed(f"speed factor must be > 0, got {speed_factor!r}")
    prev: Optional[int] = None
    for ev in events:
        delay = 0.0 if prev is None else max(ev.t_mono_ms - prev, 0) / 1000.0 / speed_factor
        yield delay, ev
        prev = ev.t_mono_ms


def playback(events: Iterable[LogEvent], speed_factor: float,
             emit: Callable[[LogEvent], None], sleep: Callable[[float], None] = time.sleep) -> int:
    """Push events to `emit` at recorded pace; returns the count emitted."""
    n = 0
    for delay, ev in paced(events, speed_factor):
        if delay > 0:
            sleep(delay)
        emit(ev)
        n += 1
    return n
