"""Core domain types: world state, goals, the goal lifecycle, scenario config.

Everything here is a plain value type. Nothing holds references to engines,
sockets, or files, so instances can be copied freely between contexts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path as FsPath
from typing import Optional, Union

from .errors import (
    DuplicateObjectId,
    IllegalTransition,
    InvalidReference,
    NonFinite,
    NonPositiveParameter,
    OutOfBounds,
    SpawnBlocked,
)

TAU = 2.0 * math.pi


def normalize_angle(theta: float) -> float:
    """Fold an angle into (-pi, pi]. Idempotent."""
    if not math.isfinite(theta):
        raise NonFinite(f"angle is not finite: {theta!r}")
    r = math.remainder(theta, TAU)  # lands in [-pi, pi]
    if r <= -math.pi:
        r += TAU
    return r


@dataclass
class Pose:
    x: float
    y: float
    theta: float = 0.0

    def normalized(self) -> "Pose":
        return Pose(self.x, self.y, normalize_angle(self.theta))

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "theta": self.theta}

    @classmethod
    def from_dict(cls, d: dict) -> "Pose":
        return cls(float(d["x"]), float(d["y"]), float(d.get("theta", 0.0)))


GRIPPER_OPEN = "open"
GRIPPER_CLOSED = "closed"
GRIPPER_HOLDING = "holding"


@dataclass
class JointState:
    """Simplified arm: one extension scalar plus a gripper state."""

    arm_extension: float = 0.0  # fraction in [0, 1]
    gripper: str = GRIPPER_OPEN
    holding: Optional[str] = None  # object id, set iff gripper == "holding"


class ObjectKind(str, Enum):
    ITEM = "item"
    SURFACE = "surface"
    OBSTACLE = "obstacle"


@dataclass
class WorldObject:
    id: str
    kind: ObjectKind
    pose: Pose
    half_extents: tuple[float, float]
    graspable: bool = False
    resting_on: Optional[str] = None

    def contains(self, x: float, y: float) -> bool:
        """Axis-aligned footprint containment, edges inclusive."""
        hx, hy = self.half_extents
        return abs(x - self.pose.x) <= hx and abs(y - self.pose.y) <= hy

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "pose": self.pose.to_dict(),
            "half_extents": list(self.half_extents),
            "graspable": self.graspable,
            "resting_on": self.resting_on,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorldObject":
        kind = ObjectKind(d["kind"])
        he = d["half_extents"]
        return cls(
            id=str(d["id"]),
            kind=kind,
            pose=Pose.from_dict(d["pose"]),
            half_extents=(float(he[0]), float(he[1])),
            graspable=bool(d.get("graspable", kind == ObjectKind.ITEM)),
            resting_on=d.get("resting_on"),
        )


@dataclass
class RobotState:
    base: Pose
    linear_velocity: float = 0.0
    angular_velocity: float = 0.0
    joints: JointState = field(default_factory=JointState)
    carried: Optional[str] = None


@dataclass
class WorldState:
    tick: int
    robot: RobotState
    objects: dict[str, WorldObject]

    def clone(self) -> "WorldState":
        return WorldState(
            tick=self.tick,
            robot=RobotState(
                base=replace(self.robot.base),
                linear_velocity=self.robot.linear_velocity,
                angular_velocity=self.robot.angular_velocity,
                joints=replace(self.robot.joints),
                carried=self.robot.carried,
            ),
            objects={k: replace(v, pose=replace(v.pose)) for k, v in self.objects.items()},
        )


# --- goal variants ---------------------------------------------------------


@dataclass(frozen=True)
class NavigateTo:
    x: float
    y: float


@dataclass(frozen=True)
class Pick:
    object_id: str


@dataclass(frozen=True)
class Place:
    x: float
    y: float


GoalVariant = Union[NavigateTo, Pick, Place]


def variant_to_dict(v: GoalVariant) -> dict:
    if isinstance(v, NavigateTo):
        return {"kind": "navigate_to", "x": v.x, "y": v.y}
    if isinstance(v, Pick):
        return {"kind": "pick", "object_id": v.object_id}
    if isinstance(v, Place):
        return {"kind": "place", "x": v.x, "y": v.y}
    raise TypeError(f"not a goal variant: {v!r}")


def variant_from_dict(d: dict) -> GoalVariant:
    kind = d["kind"]
    if kind == "navigate_to":
        return NavigateTo(float(d["x"]), float(d["y"]))
    if kind == "pick":
        return Pick(str(d["object_id"]))
    if kind == "place":
        return Place(float(d["x"]), float(d["y"]))
    raise ValueError(f"unknown goal variant: {kind!r}")


@dataclass(frozen=True)
class ActionGoal:
    goal_id: int
    variant: GoalVariant
    command_id: Optional[int] = None


# --- goal lifecycle --------------------------------------------------------


class GoalStatus(str, Enum):
    PENDING = "pending"
    ACTIVE = "active"
    SUCCEEDED = "succeeded"
    PREEMPTED = "preempted"
    CANCELLED = "cancelled"
    REJECTED = "rejected"
    FAILED = "failed"


TERMINAL_STATUSES = frozenset(
    {
        GoalStatus.SUCCEEDED,
        GoalStatus.PREEMPTED,
        GoalStatus.CANCELLED,
        GoalStatus.REJECTED,
        GoalStatus.FAILED,
    }
)


class LifecycleEvent(str, Enum):
    ACTIVATE = "activate"
    SUCCEED = "succeed"
    PREEMPT = "preempt"
    CANCEL = "cancel"
    REJECT = "reject"
    FAIL = "fail"


_TRANSITIONS: dict[tuple[GoalStatus, LifecycleEvent], GoalStatus] = {
    (GoalStatus.PENDING, LifecycleEvent.ACTIVATE): GoalStatus.ACTIVE,
    (GoalStatus.PENDING, LifecycleEvent.CANCEL): GoalStatus.CANCELLED,
    (GoalStatus.PENDING, LifecycleEvent.REJECT): GoalStatus.REJECTED,
    (GoalStatus.ACTIVE, LifecycleEvent.SUCCEED): GoalStatus.SUCCEEDED,
    (GoalStatus.ACTIVE, LifecycleEvent.PREEMPT): GoalStatus.PREEMPTED,
    (GoalStatus.ACTIVE, LifecycleEvent.CANCEL): GoalStatus.CANCELLED,
    (GoalStatus.ACTIVE, LifecycleEvent.FAIL): GoalStatus.FAILED,
}


def transition(status: GoalStatus, event: LifecycleEvent) -> GoalStatus:
    """Next status for a lifecycle event, or IllegalTransition if no such edge."""
    try:
        return _TRANSITIONS[(status, event)]
    except KeyError:
        raise IllegalTransition(f"{status.value} --{event.value}--> ?") from None


class Phase(str, Enum):
    PLANNING = "planning"
    DRIVING = "driving"
    REACHING = "reaching"
    GRASPING = "grasping"
    RELEASING = "releasing"
    DONE = "done"


@dataclass
class ProgressReport:
    goal_id: int
    phase: Phase
    fraction: float
    est_remaining_ms: int

    def to_dict(self) -> dict:
        return {
            "goal_id": self.goal_id,
            "phase": self.phase.value,
            "fraction": self.fraction,
            "est_remaining_ms": self.est_remaining_ms,
        }


# --- scenario configuration ------------------------------------------------


@dataclass
class RobotParams:
    spawn: Pose
    v_max: float = 1.0  # m/s
    a_max: float = 2.0  # m/s^2
    decel: float = 2.0  # m/s^2
    radius: float = 0.25  # m
    reach_radius: float = 0.7  # m
    grasp_duration_ms: int = 800
    release_duration_ms: int = 800

    def to_dict(self) -> dict:
        return {
            "spawn": self.spawn.to_dict(),
            "v_max": self.v_max,
            "a_max": self.a_max,
            "decel": self.decel,
            "radius": self.radius,
            "reach_radius": self.reach_radius,
            "grasp_duration_ms": self.grasp_duration_ms,
            "release_duration_ms": self.release_duration_ms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RobotParams":
        return cls(
            spawn=Pose.from_dict(d["spawn"]),
            v_max=float(d.get("v_max", 1.0)),
            a_max=float(d.get("a_max", 2.0)),
            decel=float(d.get("decel", 2.0)),
            radius=float(d.get("radius", 0.25)),
            reach_radius=float(d.get("reach_radius", 0.7)),
            grasp_duration_ms=int(d.get("grasp_duration_ms", 800)),
            release_duration_ms=int(d.get("release_duration_ms", 800)),
        )


@dataclass
class ScenarioConfig:
    world_width: float
    world_height: float
    cell_size: float
    robot: RobotParams
    objects: list[WorldObject]
    tick_ms: int = 10

    def to_dict(self) -> dict:
        return {
            "world_width": self.world_width,
            "world_height": self.world_height,
            "cell_size": self.cell_size,
            "robot": self.robot.to_dict(),
            "objects": [o.to_dict() for o in self.objects],
            "tick_ms": self.tick_ms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        return cls(
            world_width=float(d["world_width"]),
            world_height=float(d["world_height"]),
            cell_size=float(d["cell_size"]),
            robot=RobotParams.from_dict(d["robot"]),
            objects=[WorldObject.from_dict(o) for o in d.get("objects", [])],
            tick_ms=int(d.get("tick_ms", 10)),
        )


# A validated scenario is a ScenarioConfig that passed validate_scenario().
ValidatedScenario = ScenarioConfig


def _require_positive(name: str, value) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise NonPositiveParameter(name, f"must be finite and > 0, got {value!r}")


def validate_scenario(config: ScenarioConfig) -> ValidatedScenario:
    """Check every scenario invariant and return a normalized copy.

    Angles are normalized into (-pi, pi], graspability is derived from the
    object kind, and object order is preserved. Raises a ScenarioError
    subclass naming the offending field on the first violation found.
    """
    _require_positive("world_width", config.world_width)
    _require_positive("world_height", config.world_height)
    _require_positive("cell_size", config.cell_size)
    _require_positive("tick_ms", config.tick_ms)
    r = config.robot
    for name in ("v_max", "a_max", "decel", "radius", "reach_radius",
                 "grasp_duration_ms", "release_duration_ms"):
        _require_positive(f"robot.{name}", getattr(r, name))

    w, h = config.world_width, config.world_height
    if not (0.0 <= r.spawn.x <= w and 0.0 <= r.spawn.y <= h):
        raise OutOfBounds("robot.spawn", f"({r.spawn.x}, {r.spawn.y}) outside {w}x{h} world")

    seen: set[str] = set()
    objects: list[WorldObject] = []
    surface_ids = {o.id for o in config.objects if o.kind == ObjectKind.SURFACE}
    for obj in config.objects:
        if obj.id in seen:
            raise DuplicateObjectId(f"objects[{obj.id}]", "duplicate id")
        seen.add(obj.id)
        hx, hy = obj.half_extents
        _require_positive(f"objects[{obj.id}].half_extents", min(hx, hy))
        if not (0.0 <= obj.pose.x - hx and obj.pose.x + hx <= w
                and 0.0 <= obj.pose.y - hy and obj.pose.y + hy <= h):
            raise OutOfBounds(f"objects[{obj.id}]", "footprint leaves world bounds")
        if obj.resting_on is not None and obj.resting_on not in surface_ids:
            raise InvalidReference(f"objects[{obj.id}].resting_on",
                                   f"{obj.resting_on!r} is not a surface id")
        objects.append(
            replace(
                obj,
                pose=obj.pose.normalized(),
                # graspability is a function of kind, not free config
                graspable=obj.kind == ObjectKind.ITEM,
            )
        )

    for obj in objects:
        if obj.kind != ObjectKind.OBSTACLE:
            continue
        hx, hy = obj.half_extents
        # circle (spawn, radius) vs axis-aligned rectangle overlap
        dx = max(abs(r.spawn.x - obj.pose.x) - hx, 0.0)
        dy = max(abs(r.spawn.y - obj.pose.y) - hy, 0.0)
        if dx * dx + dy * dy < r.radius * r.radius:
            raise SpawnBlocked("robot.spawn", f"overlaps obstacle {obj.id!r}")

    return ScenarioConfig(
        world_width=w,
        world_height=h,
        cell_size=config.cell_size,
        robot=replace(r, spawn=r.spawn.normalized()),
        objects=objects,
        tick_ms=config.tick_ms,
    )


def scenario_to_json(config: ScenarioConfig, indent: int = 2) -> str:
    return json.dumps(config.to_dict(), indent=indent)


def scenario_from_json(text: str) -> ScenarioConfig:
    d = json.loads(text)
    return ScenarioConfig.from_dict(d)


def load_scenario(path) -> ValidatedScenario:
    """Read, parse, and validate a scenario JSON file."""
    text = FsPath(path).read_text(encoding="utf-8")
    return validate_scenario(scenario_from_json(text))


def initial_world(scenario: ValidatedScenario) -> WorldState:
    """Tick-0 world for a validated scenario."""
    return WorldState(
        tick=0,
        robot=RobotState(base=replace(scenario.robot.spawn)),
        objects={o.id: replace(o, pose=replace(o.pose)) for o in scenario.objects},
    )
