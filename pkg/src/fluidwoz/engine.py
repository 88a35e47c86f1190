"""Preemptible goal engine: submit/override, cancel-all, per-tick progress.

One goal runs at a time. Submitting while a goal is active preempts it in
the same tick the replacement activates (the override is atomic in the
event stream), and the base keeps its speed across the swap instead of
stopping to replan. Cancelling drops every goal and ramps speed down at the
profile's deceleration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import OutOfReach, TargetBlocked, UnknownGoal, Unreachable
from .grid import OccupancyGrid, build_grid, plan_path
from .kinematics import MotionProfile, Polyline, plan_trapezoid
from .model import (
    ActionGoal,
    GoalStatus,
    GoalVariant,
    LifecycleEvent,
    NavigateTo,
    ObjectKind,
    Phase,
    Pick,
    Place,
    ProgressReport,
    ScenarioConfig,
    WorldState,
    initial_world,
    transition,
    variant_to_dict,
)
from .sim import GRASPING, RELEASING, DriveMotion, step, step_manipulation

# drive targets stop a hair inside reach so the phase-start check can't flap
REACH_FUDGE = 0.99
CANDIDATE_FUDGE = 0.95

RESOLVED_FLOOR = "floor"
RESOLVED_OBJECT = "object"
RESOLVED_SURFACE = "surface"
RESOLVED_BLOCKED = "blocked"

# weights for combined pick/place progress (documented convention)
DRIVE_WEIGHT = 0.6
MANIP_WEIGHT = 0.4


@dataclass(frozen=True)
class ClickTarget:
    point: tuple[float, float]
    resolved: str
    object_id: Optional[str] = None


@dataclass
class StatusEvent:
    goal_id: int
    status: GoalStatus
    tick: int
    reason: Optional[str] = None
    command_id: Optional[int] = None
    variant: Optional[dict] = None

    def to_payload(self) -> dict:
        return {
            "goal_id": self.goal_id,
            "status": self.status.value,
            "reason": self.reason,
            "command_id": self.command_id,
            "variant": self.variant,
        }


@dataclass
class GoalRecord:
    goal: ActionGoal
    status: GoalStatus
    submitted_tick: int
    reason: Optional[str] = None
    terminal_tick: Optional[int] = None
    drive_length: float = 0.0
    manip_kind: Optional[str] = None  # grasping / releasing, None for navigate
    manip_object: Optional[str] = None
    manip_destination: Optional[tuple[float, float]] = None
    manip_surface: Optional[str] = None
    manip_duration_ms: int = 0
    manip_start_tick: Optional[int] = None
    manip_fraction: float = 0.0
    frozen_fraction: float = 0.0
    frozen_phase: Phase = Phase.PLANNING


@dataclass
class TickResult:
    status_events: list[StatusEvent]
    progress: list[ProgressReport]


def resolve_click(scenario: ScenarioConfig, world: WorldState, x: float, y: float) -> ClickTarget:
    """Resolve a click point: items before surfaces before floor; obstacle
    interiors and out-of-bounds points are blocked."""
    point = (x, y)
    if not (0.0 <= x <= scenario.world_width and 0.0 <= y <= scenario.world_height):
        return ClickTarget(point, RESOLVED_BLOCKED)
    hits = [o for o in sorted(world.objects.values(), key=lambda o: o.id) if o.contains(x, y)]
    for kind, resolved in ((ObjectKind.ITEM, RESOLVED_OBJECT), (ObjectKind.SURFACE, RESOLVED_SURFACE)):
        for obj in hits:
            if obj.kind == kind:
                return ClickTarget(point, resolved, obj.id)
    if any(o.kind == ObjectKind.OBSTACLE for o in hits):
        return ClickTarget(point, RESOLVED_BLOCKED)
    return ClickTarget(point, RESOLVED_FLOOR)


class Engine:
    """Owns the world, the occupancy grids, and the goal table.

    Commands must arrive through one ordered queue and be applied only at
    tick boundaries; the engine itself is single-threaded.
    """

    def __init__(self, scenario: ScenarioConfig):
        self.scenario = scenario
        self.world = initial_world(scenario)
        self.profile = MotionProfile(
            v_max=scenario.robot.v_max,
            a_max=scenario.robot.a_max,
            decel=scenario.robot.decel,
        )
        self.base_grid = build_grid(scenario)
        self._place_grids: dict[str, OccupancyGrid] = {}
        self.goals: dict[int, GoalRecord] = {}
        self.active_id: Optional[int] = None
        self.motion: Optional[DriveMotion] = None
        self.next_goal_id = 1
        self._progress_due: set[int] = set()

    # -- queries ------------------------------------------------------------

    def validate_target(self, x: float, y: float) -> ClickTarget:
        return resolve_click(self.scenario, self.world, x, y)

    def non_terminal_ids(self) -> list[int]:
        return [gid for gid, rec in self.goals.items()
                if rec.status in (GoalStatus.PENDING, GoalStatus.ACTIVE)]

    def poll(self, goal_id: int) -> ProgressReport:
        rec = self.goals.get(goal_id)
        if rec is None:
            raise UnknownGoal(f"goal {goal_id} was never submitted")
        if rec.status == GoalStatus.PENDING:
            return ProgressReport(goal_id, Phase.PLANNING, 0.0, self._est_remaining_ms(rec))
        if rec.status == GoalStatus.ACTIVE:
            return ProgressReport(goal_id, self._phase_of(rec), self._fraction_of(rec),
                                  self._est_remaining_ms(rec))
        if rec.status == GoalStatus.SUCCEEDED:
            return ProgressReport(goal_id, Phase.DONE, 1.0, 0)
        if rec.status == GoalStatus.REJECTED:
            return ProgressReport(goal_id, Phase.PLANNING, 0.0, 0)
        return ProgressReport(goal_id, rec.frozen_phase, rec.frozen_fraction, 0)

    def _drive_fraction(self, rec: GoalRecord) -> float:
        if rec.drive_length <= 0.0:
            return 1.0
        if self.motion is None or self.active_id != rec.goal.goal_id:
            return 1.0 if rec.manip_start_tick is not None or rec.manip_kind is None else 0.0
        return min(self.motion.arc / rec.drive_length, 1.0)

    def _fraction_of(self, rec: GoalRecord) -> float:
        df = self._drive_fraction(rec)
        if rec.manip_kind is None:
            return df
        return DRIVE_WEIGHT * df + MANIP_WEIGHT * rec.manip_fraction

    def _phase_of(self, rec: GoalRecord) -> Phase:
        if rec.manip_start_tick is not None:
            if rec.manip_fraction < 0.5:
                return Phase.REACHING
            return Phase.GRASPING if rec.manip_kind == GRASPING else Phase.RELEASING
        return Phase.DRIVING

    def _est_remaining_ms(self, rec: GoalRecord) -> int:
        remaining = 0.0
        if rec.manip_kind is not None:
            if rec.manip_start_tick is None:
                remaining += rec.manip_duration_ms
            else:
                remaining += max(rec.manip_duration_ms * (1.0 - rec.manip_fraction), 0.0)
        if (self.motion is not None and not self.motion.braking
                and self.active_id == rec.goal.goal_id and rec.manip_start_tick is None):
            elapsed = (self.world.tick - self.motion.start_tick) * self.scenario.tick_ms / 1000.0
            remaining += max(self.motion.plan.total_time - elapsed, 0.0) * 1000.0
        return int(math.ceil(remaining))

    # -- commands (apply only at tick boundaries) ----------------------------

    def submit_goal(self, variant: GoalVariant, tick: int,
                    command_id: Optional[int] = None) -> tuple[int, list[StatusEvent]]:
        """Create a goal, plan it, and either activate it (preempting any
        active goal in the same tick) or record it as rejected."""
        gid = self.next_goal_id
        self.next_goal_id += 1
        goal = ActionGoal(goal_id=gid, variant=variant, command_id=command_id)
        rec = GoalRecord(goal=goal, status=GoalStatus.PENDING, submitted_tick=tick)
        self.goals[gid] = rec
        self._progress_due.add(gid)
        events = [self._event(rec, tick)]

        try:
            setup = self._plan_goal(variant)
        except _Reject as rj:
            rec.status = transition(rec.status, LifecycleEvent.REJECT)
            rec.reason = rj.reason
            rec.terminal_tick = tick
            events.append(self._event(rec, tick))
            return gid, events

        # planning succeeded: preempt whatever is running, atomically at this tick
        events.extend(self._terminate_active(LifecycleEvent.PREEMPT, tick))

        rec.drive_length = setup.drive_length
        rec.manip_kind = setup.manip_kind
        rec.manip_object = setup.manip_object
        rec.manip_destination = setup.manip_destination
        rec.manip_surface = setup.manip_surface
        rec.manip_duration_ms = setup.manip_duration_ms
        rec.status = transition(rec.status, LifecycleEvent.ACTIVATE)
        self.active_id = gid
        self.motion = setup.motion
        events.append(self._event(rec, tick))

        if setup.motion is None:
            # nothing to drive: navigation completes now, manipulation starts now
            if rec.manip_kind is None:
                events.extend(self._succeed(rec, tick))
            else:
                events.extend(self._begin_manipulation(rec, tick))
        return gid, events

    def cancel_all(self, tick: int) -> tuple[list[int], list[StatusEvent]]:
        """Cancel every pending/active goal and start decelerating. Idempotent."""
        events: list[StatusEvent] = []
        cancelled: list[int] = []
        for gid in sorted(self.non_terminal_ids()):
            rec = self.goals[gid]
            self._freeze(rec)
            rec.status = transition(rec.status, LifecycleEvent.CANCEL)
            rec.terminal_tick = tick
            self._progress_due.add(gid)
            events.append(self._event(rec, tick))
            cancelled.append(gid)
        self.active_id = None
        if self.motion is not None:
            self.motion.start_braking(self.world.tick, self.scenario.tick_ms)
            if self.motion.brake_speed <= 0.0:
                self.motion = None
        self.world.robot.joints.arm_extension = 0.0
        return cancelled, events

    # -- the tick -------------------------------------------------------------

    def tick(self) -> TickResult:
        """Advance the world one tick and the active goal through its phases."""
        dt_ms = self.scenario.tick_ms
        step(self.world, self.motion, dt_ms)
        t = self.world.tick
        events: list[StatusEvent] = []

        if self.motion is not None and self.motion.braking and self.motion.brake_speed <= 0.0:
            self.motion = None

        rec = self.goals.get(self.active_id) if self.active_id is not None else None
        if rec is not None:
            if rec.manip_start_tick is None:
                drive_done = self.motion is None or self.motion.done_at_tick(t, dt_ms)
                if drive_done:
                    self.motion = None
                    self.world.robot.linear_velocity = 0.0
                    if rec.manip_kind is None:
                        events.extend(self._succeed(rec, t))
                    else:
                        events.extend(self._begin_manipulation(rec, t))
            else:
                elapsed_ms = (t - rec.manip_start_tick) * dt_ms
                _, fraction = step_manipulation(
                    self.world,
                    rec.manip_kind,
                    elapsed_ms,
                    rec.manip_duration_ms,
                    object_id=rec.manip_object,
                    reach_radius=self.scenario.robot.reach_radius,
                    destination=rec.manip_destination,
                    surface_id=rec.manip_surface,
                )
                rec.manip_fraction = fraction
                if fraction >= 1.0:
                    events.extend(self._succeed(rec, t))

        progress = []
        due = set(self._progress_due)
        self._progress_due.clear()
        if self.active_id is not None:
            due.add(self.active_id)
        for gid in sorted(due):
            progress.append(self.poll(gid))
        return TickResult(status_events=events, progress=progress)

    # -- internals ------------------------------------------------------------

    def _event(self, rec: GoalRecord, tick: int) -> StatusEvent:
        return StatusEvent(
            goal_id=rec.goal.goal_id,
            status=rec.status,
            tick=tick,
            reason=rec.reason,
            command_id=rec.goal.command_id,
            variant=variant_to_dict(rec.goal.variant),
        )

    def _succeed(self, rec: GoalRecord, tick: int) -> list[StatusEvent]:
        rec.status = transition(rec.status, LifecycleEvent.SUCCEED)
        rec.terminal_tick = tick
        rec.manip_fraction = 1.0 if rec.manip_kind is not None else rec.manip_fraction
        self.active_id = None
        self.motion = None
        self._progress_due.add(rec.goal.goal_id)
        return [self._event(rec, tick)]

    def _fail(self, rec: GoalRecord, tick: int, reason: str) -> list[StatusEvent]:
        self._freeze(rec)
        rec.status = transition(rec.status, LifecycleEvent.FAIL)
        rec.reason = reason
        rec.terminal_tick = tick
        self.active_id = None
        self.motion = None
        self.world.robot.joints.arm_extension = 0.0
        self._progress_due.add(rec.goal.goal_id)
        return [self._event(rec, tick)]

    def _terminate_active(self, event: LifecycleEvent, tick: int) -> list[StatusEvent]:
        if self.active_id is None:
            return []
        rec = self.goals[self.active_id]
        self._freeze(rec)
        rec.status = transition(rec.status, event)
        rec.terminal_tick = tick
        self.active_id = None
        self.world.robot.joints.arm_extension = 0.0
        self._progress_due.add(rec.goal.goal_id)
        return [self._event(rec, tick)]

    def _freeze(self, rec: GoalRecord) -> None:
        rec.frozen_fraction = self._fraction_of(rec)
        rec.frozen_phase = self._phase_of(rec)

    def _begin_manipulation(self, rec: GoalRecord, tick: int) -> list[StatusEvent]:
        rec.manip_start_tick = tick
        try:
            step_manipulation(
                self.world,
                rec.manip_kind,
                0,
                rec.manip_duration_ms,
                object_id=rec.manip_object,
                reach_radius=self.scenario.robot.reach_radius,
                destination=rec.manip_destination,
                surface_id=rec.manip_surface,
            )
        except OutOfReach:
            return self._fail(rec, tick, "out_of_reach")
        return []

    def _entry_speed(self) -> float:
        return self.world.robot.linear_velocity

    def _place_grid(self, surface_id: str) -> OccupancyGrid:
        if surface_id not in self._place_grids:
            self._place_grids[surface_id] = build_grid(
                self.scenario, ignore_ids=frozenset({surface_id})
            )
        return self._place_grids[surface_id]

    def _plan_goal(self, variant: GoalVariant) -> "_GoalSetup":
        if isinstance(variant, NavigateTo):
            return self._plan_navigate(variant)
        if isinstance(variant, Pick):
            return self._plan_pick(variant)
        if isinstance(variant, Place):
            return self._plan_place(variant)
        raise _Reject("no_object")

    def _plan_navigate(self, variant: NavigateTo) -> "_GoalSetup":
        if not self._in_bounds(variant.x, variant.y):
            raise _Reject("target_blocked")
        pos = (self.world.robot.base.x, self.world.robot.base.y)
        try:
            path = plan_path(self.base_grid, pos, (variant.x, variant.y))
        except TargetBlocked:
            raise _Reject("target_blocked") from None
        except Unreachable:
            raise _Reject("unreachable") from None
        return self._drive_setup(pos, path.waypoints, manip_kind=None)

    def _plan_pick(self, variant: Pick) -> "_GoalSetup":
        obj = self.world.objects.get(variant.object_id)
        if obj is None or obj.kind != ObjectKind.ITEM:
            raise _Reject("no_object")
        if self.world.robot.carried is not None:
            raise _Reject("already_carrying")
        target = (obj.pose.x, obj.pose.y)
        reach = self.scenario.robot.reach_radius
        pos = (self.world.robot.base.x, self.world.robot.base.y)
        manip = dict(
            manip_kind=GRASPING,
            manip_object=obj.id,
            manip_duration_ms=self.scenario.robot.grasp_duration_ms,
        )
        if math.dist(pos, target) <= reach * REACH_FUDGE:
            return _GoalSetup(motion=None, drive_length=0.0, **manip)
        waypoints = self._route_near(self.base_grid, pos, target, reach)
        return self._drive_setup(pos, waypoints, reach_target=target, **manip)

    def _plan_place(self, variant: Place) -> "_GoalSetup":
        if self.world.robot.carried is None:
            raise _Reject("not_carrying")
        if not self._in_bounds(variant.x, variant.y):
            raise _Reject("not_on_surface")
        surface = None
        for obj in sorted(self.world.objects.values(), key=lambda o: o.id):
            if obj.kind == ObjectKind.SURFACE and obj.contains(variant.x, variant.y):
                surface = obj
                break
        if surface is None:
            raise _Reject("not_on_surface")
        reach = self.scenario.robot.reach_radius
        pos = (self.world.robot.base.x, self.world.robot.base.y)
        target = (variant.x, variant.y)
        manip = dict(
            manip_kind=RELEASING,
            manip_object=self.world.robot.carried,
            manip_destination=target,
            manip_surface=surface.id,
            manip_duration_ms=self.scenario.robot.release_duration_ms,
        )
        if math.dist(pos, target) <= reach * REACH_FUDGE:
            return _GoalSetup(motion=None, drive_length=0.0, **manip)
        grid = self._place_grid(surface.id)
        try:
            path = plan_path(grid, pos, target)
        except TargetBlocked:
            raise _Reject("target_blocked") from None
        except Unreachable:
            raise _Reject("unreachable") from None
        return self._drive_setup(pos, path.waypoints, reach_target=target, **manip)

    def _route_near(self, grid: OccupancyGrid, pos: tuple[float, float],
                    target: tuple[float, float], reach: float) -> list[tuple[float, float]]:
        """Waypoints to the best free cell within reach of `target`."""
        candidates: list[tuple[float, int, int]] = []
        r0, c0 = grid.cell_of(*target)
        span = int(math.ceil(reach / grid.cell_size)) + 1
        for row in range(max(r0 - span, 0), min(r0 + span + 1, grid.height_cells)):
            for col in range(max(c0 - span, 0), min(c0 + span + 1, grid.width_cells)):
                if grid.is_blocked(row, col):
                    continue
                d = math.dist(grid.center((row, col)), target)
                if d <= reach * CANDIDATE_FUDGE:
                    candidates.append((d, row, col))
        candidates.sort()
        for _, row, col in candidates:
            try:
                path = plan_path(grid, pos, grid.center((row, col)))
            except (TargetBlocked, Unreachable):
                continue
            return path.waypoints
        raise _Reject("unreachable")

    def _drive_setup(self, pos, waypoints, reach_target=None, **manip) -> "_GoalSetup":
        points = [pos] + list(waypoints)
        poly = Polyline.from_points(points)
        if reach_target is not None:
            s_stop = poly.first_arc_within(
                reach_target, self.scenario.robot.reach_radius * REACH_FUDGE
            )
            if s_stop is not None:
                poly = poly.truncated(s_stop)
        if poly.length <= 0.0:
            return _GoalSetup(motion=None, drive_length=0.0, **manip)
        motion = DriveMotion(
            polyline=poly,
            plan=plan_trapezoid(poly.length, self._entry_speed(), self.profile),
            profile=self.profile,
            start_tick=self.world.tick,
        )
        return _GoalSetup(motion=motion, drive_length=poly.length, **manip)

    def _in_bounds(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.scenario.world_width and 0.0 <= y <= self.scenario.world_height


class _Reject(Exception):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


@dataclass
class _GoalSetup:
    motion: Optional[DriveMotion]
    drive_length: float
    manip_kind: Optional[str] = None
    manip_object: Optional[str] = None
    manip_destination: Optional[tuple[float, float]] = None
    manip_surface: Optional[str] = None
    manip_duration_ms: int = 0
