import math
import random

import pytest

from fluidwoz.errors import NonPositiveParameter, OutOfReach
from fluidwoz.kinematics import (
    MotionProfile,
    Polyline,
    brake_step,
    clamp_entry_speed,
    plan_trapezoid,
)
from fluidwoz.model import Pose, RobotState, WorldState
from fluidwoz.sim import GRASPING, RELEASING, DriveMotion, step, step_manipulation

from conftest import make_object

TICK_MS = 10


def closed_form_time(length, v_max, a_max, decel, v0=0.0):
    """Independent trapezoid/triangle schedule algebra, used as the oracle."""
    v_peak = math.sqrt((2 * a_max * decel * length + decel * v0 * v0) / (a_max + decel))
    vc = min(v_peak, v_max)
    d_acc = (vc * vc - v0 * v0) / (2 * a_max)
    d_dec = vc * vc / (2 * decel)
    d_cruise = max(length - d_acc - d_dec, 0.0)
    return (vc - v0) / a_max + d_cruise / vc + vc / decel


def drive(length, profile, tick_ms=TICK_MS, v0=0.0):
    world = WorldState(tick=0, robot=RobotState(base=Pose(0, 0, 0)), objects={})
    motion = DriveMotion.begin([(0.0, 0.0), (length, 0.0)], v0, profile, 0)
    speeds = [0.0]
    while not motion.done_at_tick(world.tick, tick_ms):
        step(world, motion, tick_ms)
        speeds.append(world.robot.linear_velocity)
        assert world.tick < 500_000
    return world, motion, speeds


def test_profile_requires_positive_rates():
    with pytest.raises(NonPositiveParameter):
        MotionProfile(v_max=0.0, a_max=1.0, decel=1.0)


def test_reference_traversal_450_ticks():
    # 4.0 m at v_max 1.0, a 2.0, decel 2.0: 0.5 s accel + 3.5 s cruise + 0.5 s decel
    profile = MotionProfile(1.0, 2.0, 2.0)
    world, motion, speeds = drive(4.0, profile)
    assert motion.plan.total_time == pytest.approx(4.5)
    assert abs(world.tick - 450) <= 1
    assert world.robot.base.x == pytest.approx(4.0)
    assert max(speeds) <= 1.0 + 1e-12


def test_traversal_times_match_closed_form_over_random_draws():
    rng = random.Random(11)
    profile_ticks_tolerance = 1
    for _ in range(100):
        length = rng.uniform(0.3, 12.0)
        vm = rng.uniform(0.3, 2.5)
        am = rng.uniform(0.5, 4.0)
        dc = rng.uniform(0.5, 4.0)
        profile = MotionProfile(vm, am, dc)
        world, _, speeds = drive(length, profile)
        expected_ticks = math.ceil(closed_form_time(length, vm, am, dc) * 1000 / TICK_MS)
        assert abs(world.tick - expected_ticks) <= profile_ticks_tolerance
        assert max(speeds) <= vm + 1e-9
        per_tick_limit = max(am, dc) * TICK_MS / 1000 + 1e-9
        assert all(abs(b - a) <= per_tick_limit for a, b in zip(speeds, speeds[1:]))


def test_entry_speed_carries_over():
    profile = MotionProfile(1.0, 2.0, 2.0)
    plan = plan_trapezoid(4.0, 1.0, profile)
    assert plan.v0 == pytest.approx(1.0)
    assert plan.total_time == pytest.approx(4.0 / 1.0 - 0.25 + 0.5)  # no accel phase
    assert plan.sample(0.0)[1] == pytest.approx(1.0)


def test_entry_speed_clamped_to_absorbable():
    profile = MotionProfile(2.0, 2.0, 2.0)
    # 0.1 m cannot absorb 2 m/s; it can absorb sqrt(2*2*0.1)
    assert clamp_entry_speed(0.1, 2.0, profile) == pytest.approx(math.sqrt(0.4))


def test_cancel_brake_monotone_and_exact_distance():
    rng = random.Random(23)
    for _ in range(200):
        v = rng.uniform(0.05, 3.0)
        decel = rng.uniform(0.4, 4.0)
        dt = TICK_MS / 1000
        dist = 0.0
        speeds = [v]
        ticks = 0
        while v > 0:
            v, ds = brake_step(v, decel, dt)
            dist += ds
            speeds.append(v)
            ticks += 1
        assert ticks <= math.ceil(speeds[0] / (decel * dt)) + 1
        assert all(a >= b for a, b in zip(speeds, speeds[1:]))
        one_tick_travel = speeds[0] * dt
        assert abs(dist - speeds[0] ** 2 / (2 * decel)) <= one_tick_travel


def test_step_without_motion_only_advances_tick():
    world = WorldState(tick=5, robot=RobotState(base=Pose(2, 3, 0.5)), objects={})
    step(world, None, TICK_MS)
    assert world.tick == 6
    assert (world.robot.base.x, world.robot.base.y) == (2, 3)
    assert world.robot.linear_velocity == 0.0


def test_polyline_arc_addressing():
    poly = Polyline.from_points([(0, 0), (2, 0), (2, 2)])
    assert poly.length == pytest.approx(4.0)
    x, y, heading = poly.point_at(1.0)
    assert (x, y) == (1.0, 0.0)
    assert heading == pytest.approx(0.0)
    x, y, heading = poly.point_at(3.0)
    assert (x, y) == (2.0, 1.0)
    assert heading == pytest.approx(math.pi / 2)


def test_polyline_first_entry_into_disc():
    poly = Polyline.from_points([(0, 0), (10, 0)])
    s = poly.first_arc_within((5.0, 0.0), 1.0)
    assert s == pytest.approx(4.0)
    assert poly.first_arc_within((5.0, 5.0), 1.0) is None
    short = poly.truncated(s)
    assert short.length == pytest.approx(4.0)
    assert short.points[-1] == (4.0, 0.0)


# --- manipulation ------------------------------------------------------------

def manip_world(carried=None):
    objects = {
        "cup": make_object("cup", "item", 1.2, 1.0, 0.1, 0.1),
        "table": make_object("table", "surface", 3.0, 3.0),
    }
    world = WorldState(tick=0, robot=RobotState(base=Pose(1.0, 1.0, 0.0)), objects=objects)
    if carried:
        world.robot.carried = carried
        world.robot.joints.gripper = "holding"
        world.robot.joints.holding = carried
    return world


def test_grasp_zero_elapsed_changes_nothing():
    world = manip_world()
    _, fraction = step_manipulation(world, GRASPING, 0, 1000, object_id="cup",
                                    reach_radius=0.7)
    assert fraction == 0.0
    assert world.robot.carried is None
    assert world.robot.joints.gripper == "open"


def test_grasp_halfway_keeps_gripper_open():
    world = manip_world()
    _, fraction = step_manipulation(world, GRASPING, 500, 1000, object_id="cup",
                                    reach_radius=0.7)
    assert fraction == 0.5
    assert world.robot.joints.gripper == "open"
    assert world.robot.joints.arm_extension == pytest.approx(0.5)


def test_grasp_completion_takes_the_object():
    world = manip_world()
    _, fraction = step_manipulation(world, GRASPING, 1000, 1000, object_id="cup",
                                    reach_radius=0.7)
    assert fraction == 1.0
    assert world.robot.carried == "cup"
    assert world.robot.joints.holding == "cup"
    assert world.objects["cup"].resting_on is None


def test_release_completion_places_object():
    world = manip_world(carried="cup")
    _, fraction = step_manipulation(world, RELEASING, 1200, 1000, object_id="cup",
                                    reach_radius=0.7, destination=(1.5, 1.2),
                                    surface_id="table")
    assert fraction == 1.0
    cup = world.objects["cup"]
    assert (cup.pose.x, cup.pose.y) == (1.5, 1.2)
    assert cup.resting_on == "table"
    assert world.robot.carried is None
    assert world.robot.joints.gripper == "open"


def test_manipulation_out_of_reach_at_start():
    world = manip_world()
    world.objects["cup"].pose.x = 5.0
    with pytest.raises(OutOfReach):
        step_manipulation(world, GRASPING, 0, 1000, object_id="cup", reach_radius=0.7)
