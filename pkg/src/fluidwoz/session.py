"""Headless session core: engine + log + snapshot cadence, no networking.

The live server, the scripted demo driver, and the re-simulator all run
sessions through this one class so that a command applied at tick T always
has the identical effect regardless of where it came from. Commands must be
applied between calls to advance_tick(), never concurrently with one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .engine import (
    RESOLVED_BLOCKED,
    RESOLVED_FLOOR,
    RESOLVED_OBJECT,
    RESOLVED_SURFACE,
    ClickTarget,
    Engine,
    StatusEvent,
)
from .eventlog import (
    STREAM_GOAL_STATUS,
    STREAM_LATENCY_MARK,
    STREAM_OBJECT_STATE,
    STREAM_PROGRESS,
    STREAM_ROBOT_STATE,
    STREAM_WIZARD_ACTION,
    LogWriter,
    SnapshotPolicy,
    mono_ms,
)
from .errors import DuplicateMark
from .latency import LatencyMark, MarkKind, MarkStore
from .model import (
    GoalStatus,
    NavigateTo,
    Pick,
    Place,
    ProgressReport,
    ScenarioConfig,
    WorldObject,
)


def robot_payload(world) -> dict:
    r = world.robot
    return {
        "x": r.base.x,
        "y": r.base.y,
        "theta": r.base.theta,
        "linear_velocity": r.linear_velocity,
        "angular_velocity": r.angular_velocity,
        "arm_extension": r.joints.arm_extension,
        "gripper": r.joints.gripper,
        "holding": r.joints.holding,
        "carried": r.carried,
    }


def object_entry(obj: WorldObject) -> dict:
    return {
        "id": obj.id,
        "x": obj.pose.x,
        "y": obj.pose.y,
        "theta": obj.pose.theta,
        "resting_on": obj.resting_on,
    }


@dataclass
class Snapshot:
    tick: int
    keyframe: bool
    robot: dict
    changed_objects: list[dict]
    all_objects: list[dict]


@dataclass
class ClickOutcome:
    target: ClickTarget
    goal_id: Optional[int]
    status_events: list[StatusEvent]
    rejected_reason: Optional[str] = None
    preempted_goal: Optional[int] = None

    @property
    def blocked(self) -> bool:
        return self.target.resolved == RESOLVED_BLOCKED


@dataclass
class TickOutput:
    status_events: list[StatusEvent]
    progress: list[ProgressReport]
    snapshot: Optional[Snapshot]


class SessionCore:
    def __init__(self, scenario: ScenarioConfig, writer: Optional[LogWriter],
                 snapshot: SnapshotPolicy):
        self.scenario = scenario
        self.engine = Engine(scenario)
        self.writer = writer
        self.snapshot = snapshot
        self.marks = MarkStore()
        self._snapshot_index = 0
        self._last_object_state: dict[str, dict] = {}

    # -- properties -----------------------------------------------------------

    @property
    def world(self):
        return self.engine.world

    @property
    def tick(self) -> int:
        return self.engine.world.tick

    def idle(self) -> bool:
        """No non-terminal goals and no residual motion."""
        return not self.engine.non_terminal_ids() and self.engine.motion is None

    # -- latency marks --------------------------------------------------------

    def mark(self, m: LatencyMark) -> bool:
        """Store and mirror a latency mark; returns False on a duplicate."""
        try:
            self.marks.mark(m)
        except DuplicateMark:
            return False
        self._log(STREAM_LATENCY_MARK, m.to_payload())
        return True

    # -- commands (tick-boundary only) ---------------------------------------

    def apply_wizard_click(self, x: float, y: float, command_id: Optional[int] = None,
                           wizard_input_t: Optional[int] = None) -> ClickOutcome:
        """Resolve a click, mint the matching goal, log and latency-mark it.

        floor -> navigate, item -> pick, surface -> place at the click point.
        Blocked clicks produce no goal and are surfaced to the caller.
        """
        tick = self.tick
        had_active = self.engine.active_id is not None
        if command_id is not None and wizard_input_t is not None:
            self._mark_quiet(command_id, MarkKind.WIZARD_INPUT, wizard_input_t)
            if had_active:
                self._mark_quiet(command_id, MarkKind.REPAIR_REQUESTED, wizard_input_t)

        target = self.engine.validate_target(x, y)
        action_payload = {
            "kind": "click",
            "x": x,
            "y": y,
            "resolved": target.resolved,
            "object_id": target.object_id,
            "command_id": command_id,
        }

        if target.resolved == RESOLVED_BLOCKED:
            self._log(STREAM_WIZARD_ACTION, dict(action_payload, goal_id=None))
            return ClickOutcome(target=target, goal_id=None, status_events=[])

        if target.resolved == RESOLVED_OBJECT:
            variant = Pick(target.object_id)
        elif target.resolved == RESOLVED_SURFACE:
            variant = Place(x, y)
        else:
            variant = NavigateTo(x, y)

        goal_id, events = self.engine.submit_goal(variant, tick, command_id=command_id)
        self._log(STREAM_WIZARD_ACTION, dict(action_payload, goal_id=goal_id))
        self._log_status_events(events)

        rejected = next((e.reason for e in events
                         if e.goal_id == goal_id and e.status == GoalStatus.REJECTED), None)
        preempted = next((e.goal_id for e in events if e.status == GoalStatus.PREEMPTED), None)
        if rejected is None and command_id is not None:
            now = mono_ms()
            self._mark_quiet(command_id, MarkKind.GOAL_ACTIVE, now)
            if preempted is not None:
                self._mark_quiet(command_id, MarkKind.REPAIR_ACTIVE, now)
        return ClickOutcome(
            target=target,
            goal_id=goal_id,
            status_events=events,
            rejected_reason=rejected,
            preempted_goal=preempted,
        )

    def apply_cancel(self, command_id: Optional[int] = None,
                     wizard_input_t: Optional[int] = None) -> tuple[list[int], list[StatusEvent]]:
        tick = self.tick
        had_active = bool(self.engine.non_terminal_ids())
        if command_id is not None and wizard_input_t is not None:
            self._mark_quiet(command_id, MarkKind.WIZARD_INPUT, wizard_input_t)
            if had_active:
                self._mark_quiet(command_id, MarkKind.REPAIR_REQUESTED, wizard_input_t)
        self._log(STREAM_WIZARD_ACTION, {"kind": "cancel_all", "command_id": command_id})
        cancelled, events = self.engine.cancel_all(tick)
        self._log_status_events(events)
        if cancelled and command_id is not None and had_active:
            self._mark_quiet(command_id, MarkKind.REPAIR_ACTIVE, mono_ms())
        return cancelled, events

    # -- stepping -------------------------------------------------------------

    def advance_tick(self) -> TickOutput:
        result = self.engine.tick()
        self._log_status_events(result.status_events)
        for rep in result.progress:
            self._log(STREAM_PROGRESS, rep.to_dict())

        snap: Optional[Snapshot] = None
        if self.snapshot.due(self.tick):
            snap = self._take_snapshot()
        return TickOutput(status_events=result.status_events, progress=result.progress,
                          snapshot=snap)

    def _take_snapshot(self) -> Snapshot:
        world = self.world
        keyframe = self.snapshot.is_keyframe(self._snapshot_index)
        self._snapshot_index += 1

        all_objects = [object_entry(o) for o in sorted(world.objects.values(), key=lambda o: o.id)]
        changed = []
        for entry in all_objects:
            if self._last_object_state.get(entry["id"]) != entry:
                changed.append(entry)
                self._last_object_state[entry["id"]] = entry

        robot = robot_payload(world)
        self._log(STREAM_ROBOT_STATE, robot)
        if keyframe or changed:
            self._log(STREAM_OBJECT_STATE, {
                "keyframe": keyframe,
                "objects": all_objects if keyframe else changed,
            })
        return Snapshot(
            tick=self.tick,
            keyframe=keyframe,
            robot=robot,
            changed_objects=changed,
            all_objects=all_objects,
        )

    # -- plumbing -------------------------------------------------------------

    def log(self, stream: str, payload: dict) -> None:
        """Append a non-command event (user streams) at the current tick."""
        self._log(stream, payload)

    def _mark_quiet(self, command_id: int, kind: MarkKind, t: int) -> None:
        self.mark(LatencyMark(command_id=command_id, kind=kind, t_mono_ms=t))

    def _log_status_events(self, events: list[StatusEvent]) -> None:
        for ev in events:
            self._log(STREAM_GOAL_STATUS, ev.to_payload(), tick=ev.tick)

    def _log(self, stream: str, payload: dict, tick: Optional[int] = None) -> None:
        if self.writer is not None:
            self.writer.append(stream, payload, tick=self.tick if tick is None else tick)

    def close(self) -> None:
        if self.writer is not None:
            self.writer.close()


HeadlessCommand = tuple  # (tick, "click", x, y) or (tick, "cancel")


def run_headless(scenario: ScenarioConfig, commands: list[HeadlessCommand],
                 writer: Optional[LogWriter] = None,
                 snapshot: Optional[SnapshotPolicy] = None,
                 settle_ticks: int = 2000) -> SessionCore:
    """Run a scripted session as fast as the CPU allows (no wall pacing).

    Commands are applied at their tick boundaries; afterwards the session
    keeps ticking until idle (bounded by settle_ticks). Useful for producing
    deterministic logs without a network in tests and demos.
    """
    core = SessionCore(scenario, writer,
                       snapshot or SnapshotPolicy(every_n_ticks=1))
    pending = sorted(commands, key=lambda c: c[0])
    next_command_id = 1
    i = 0
    while i < len(pending) or not core.idle():
        while i < len(pending) and pending[i][0] <= core.tick:
            cmd = pending[i]
            i += 1
            cid = next_command_id
            next_command_id += 1
            if cmd[1] == "click":
                core.apply_wizard_click(cmd[2], cmd[3], command_id=cid,
                                        wizard_input_t=mono_ms())
            elif cmd[1] == "cancel":
                core.apply_cancel(command_id=cid, wizard_input_t=mono_ms())
            else:
                raise ValueError(f"unknown headless command {cmd!r}")
        core.advance_tick()
        if i >= len(pending) and core.tick > (pending[-1][0] if pending else 0) + settle_ticks:
            break
    core.close()
    return core
