"""Fixed-timestep world stepping.

The stepper is a pure function of (world, motion, tick_ms): it never reads a
wall clock or RNG, so identical command-to-tick assignments reproduce
bit-identical trajectories. Time inside a motion is integer ticks times
tick_ms, converted to seconds only at the point of profile evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import OutOfReach
from .kinematics import MotionProfile, Polyline, TrapezoidalPlan, brake_step, plan_trapezoid
from .model import (
    GRIPPER_HOLDING,
    GRIPPER_OPEN,
    Pose,
    WorldState,
    normalize_angle,
)

GRASPING = "grasping"
RELEASING = "releasing"


@dataclass
class DriveMotion:
    """Active base motion: a polyline plus its trapezoidal schedule.

    While `braking` is set the schedule is abandoned and speed ramps down by
    decel each tick; the base keeps sliding along (and, for sub-tick
    remainders, past) the remaining polyline.
    """

    polyline: Polyline
    plan: TrapezoidalPlan
    profile: MotionProfile
    start_tick: int
    arc: float = 0.0
    braking: bool = False
    brake_speed: float = 0.0

    @classmethod
    def begin(cls, points: list[tuple[float, float]], entry_speed: float,
              profile: MotionProfile, tick: int) -> "DriveMotion":
        poly = Polyline.from_points(points)
        return cls(
            polyline=poly,
            plan=plan_trapezoid(poly.length, entry_speed, profile),
            profile=profile,
            start_tick=tick,
        )

    def speed_at_tick(self, tick: int, tick_ms: int) -> float:
        if self.braking:
            return self.brake_speed
        t = (tick - self.start_tick) * tick_ms / 1000.0
        return self.plan.sample(t)[1]

    def arc_at_tick(self, tick: int, tick_ms: int) -> float:
        t = (tick - self.start_tick) * tick_ms / 1000.0
        return self.plan.sample(t)[0]

    def done_at_tick(self, tick: int, tick_ms: int) -> bool:
        if self.braking:
            return self.brake_speed <= 0.0
        return (tick - self.start_tick) * tick_ms / 1000.0 >= self.plan.total_time

    def start_braking(self, tick: int, tick_ms: int) -> None:
        if self.braking:
            return
        self.brake_speed = self.speed_at_tick(tick, tick_ms)
        self.braking = True


def step(world: WorldState, motion: Optional[DriveMotion], tick_ms: int) -> WorldState:
    """Advance the world by exactly one tick.

    Total on valid inputs: with no motion only the tick counter moves. A
    carried object's pose tracks the base every tick.
    """
    world.tick += 1
    robot = world.robot

    if motion is None:
        robot.linear_velocity = 0.0
        _track_carried(world)
        return world

    if motion.braking:
        v_new, ds = brake_step(motion.brake_speed, motion.profile.decel, tick_ms / 1000.0)
        motion.brake_speed = v_new
        motion.arc += ds
        x, y, heading = motion.polyline.point_at(motion.arc)
        robot.base.x, robot.base.y = x, y
        if ds > 0.0:
            robot.base.theta = normalize_angle(heading)
        robot.linear_velocity = v_new
        _track_carried(world)
        return world

    s, v = motion.plan.sample((world.tick - motion.start_tick) * tick_ms / 1000.0)
    motion.arc = s
    x, y, heading = motion.polyline.point_at(s)
    robot.base.x, robot.base.y = x, y
    if v > 0.0 or s >= motion.plan.length:
        robot.base.theta = normalize_angle(heading)
    robot.linear_velocity = v
    _track_carried(world)
    return world


def _track_carried(world: WorldState) -> None:
    carried = world.robot.carried
    if carried is not None and carried in world.objects:
        obj = world.objects[carried]
        obj.pose.x = world.robot.base.x
        obj.pose.y = world.robot.base.y


def step_manipulation(
    world: WorldState,
    phase: str,
    elapsed_ms: int,
    duration_ms: int,
    *,
    object_id: str,
    reach_radius: float,
    destination: Optional[tuple[float, float]] = None,
    surface_id: Optional[str] = None,
) -> tuple[WorldState, float]:
    """Advance a grasp or release by reporting its completion fraction.

    At fraction 1.0 a grasp closes the gripper on `object_id` and a release
    drops it at `destination` resting on `surface_id`. The arm extension
    scalar animates with the fraction. Raises OutOfReach when invoked at
    phase start with the target outside reach_radius.
    """
    robot = world.robot
    if elapsed_ms <= 0:
        tx, ty = _manip_target(world, phase, object_id, destination)
        if math.hypot(robot.base.x - tx, robot.base.y - ty) > reach_radius:
            raise OutOfReach(f"{phase} target {object_id!r} beyond {reach_radius} m")

    fraction = min(elapsed_ms / duration_ms, 1.0)
    robot.joints.arm_extension = fraction if fraction < 1.0 else 0.0

    if fraction >= 1.0:
        obj = world.objects[object_id]
        if phase == GRASPING:
            robot.joints.gripper = GRIPPER_HOLDING
            robot.joints.holding = object_id
            robot.carried = object_id
            obj.resting_on = None
            obj.pose.x, obj.pose.y = robot.base.x, robot.base.y
        elif phase == RELEASING:
            assert destination is not None
            obj.pose = Pose(destination[0], destination[1], normalize_angle(obj.pose.theta))
            obj.resting_on = surface_id
            robot.joints.gripper = GRIPPER_OPEN
            robot.joints.holding = None
            robot.carried = None
        else:
            raise ValueError(f"unknown manipulation phase {phase!r}")
    return world, fraction


def _manip_target(world, phase, object_id, destination):
    if phase == RELEASING and destination is not None:
        return destination
    obj = world.objects[object_id]
    return obj.pose.x, obj.pose.y
