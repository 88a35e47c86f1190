import pytest

from fluidwoz.cli import STARTER_SCENARIO
from fluidwoz.model import (
    ObjectKind,
    Pose,
    RobotParams,
    ScenarioConfig,
    WorldObject,
    validate_scenario,
)


def starter_scenario():
    return validate_scenario(ScenarioConfig.from_dict(STARTER_SCENARIO))


@pytest.fixture
def scenario():
    """The 10x10 starter scene: remote, two tables, one crate."""
    return starter_scenario()


def open_scenario(cell_size=0.5, tick_ms=10):
    """A 10x10 empty room, useful for pure-kinematics checks."""
    return validate_scenario(
        ScenarioConfig(
            world_width=10.0,
            world_height=10.0,
            cell_size=cell_size,
            robot=RobotParams(spawn=Pose(1.0, 1.0, 0.0)),
            objects=[],
            tick_ms=tick_ms,
        )
    )


@pytest.fixture
def empty_scenario():
    return open_scenario()


def make_object(oid, kind, x, y, hx=0.5, hy=0.5, resting_on=None):
    return WorldObject(
        id=oid,
        kind=ObjectKind(kind),
        pose=Pose(x, y, 0.0),
        half_extents=(hx, hy),
        graspable=kind == "item",
        resting_on=resting_on,
    )
