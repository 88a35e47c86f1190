import math
import random

import pytest

from fluidwoz.errors import SpawnBlocked, TargetBlocked, Unreachable
from fluidwoz.grid import OccupancyGrid, bfs_shortest_steps, build_grid, plan_path
from fluidwoz.model import Pose, RobotParams, ScenarioConfig, validate_scenario

from conftest import make_object, open_scenario


def scene(objects, cell=0.5, radius=0.25, spawn=(1.0, 1.0)):
    return validate_scenario(ScenarioConfig(
        world_width=10.0, world_height=10.0, cell_size=cell,
        robot=RobotParams(spawn=Pose(*spawn, 0.0), radius=radius),
        objects=objects, tick_ms=10,
    ))


def test_empty_world_grid_dimensions():
    grid = build_grid(open_scenario(cell_size=0.5))
    assert (grid.width_cells, grid.height_cells) == (20, 20)
    assert not any(grid.blocked)


def test_inflation_matches_direct_geometry():
    # 1x1 m obstacle centered at (5,5), robot radius 0.25 m
    scenario = scene([make_object("box", "obstacle", 5.0, 5.0)])
    grid = build_grid(scenario)
    inflated = (4.25, 4.25, 5.75, 5.75)
    for row in range(grid.height_cells):
        for col in range(grid.width_cells):
            x0, y0, x1, y1 = grid.cell_rect((row, col))
            overlaps = (x0 < inflated[2] and x1 > inflated[0]
                        and y0 < inflated[3] and y1 > inflated[1])
            assert grid.is_blocked(row, col) == overlaps, (row, col)


def test_obstacle_on_spawn_raises():
    with pytest.raises(SpawnBlocked):
        build_grid(scene([make_object("box", "obstacle", 1.2, 1.2)]))


def test_surfaces_block_but_ignored_ids_do_not():
    scenario = scene([make_object("table", "surface", 5.0, 5.0)])
    grid = build_grid(scenario)
    assert grid.is_blocked(*grid.cell_of(5.0, 5.0))
    free = build_grid(scenario, ignore_ids=frozenset({"table"}))
    assert not any(free.blocked)


def test_items_never_block():
    grid = build_grid(scene([make_object("cup", "item", 5.0, 5.0)]))
    assert not any(grid.blocked)


def test_same_point_gives_empty_path():
    grid = build_grid(open_scenario())
    path = plan_path(grid, (1.0, 1.0), (1.0, 1.0))
    assert path.waypoints == []
    assert path.total_length == 0.0


def test_straight_line_matches_bfs_cell_count():
    grid = build_grid(open_scenario(cell_size=0.5))
    path = plan_path(grid, (1.0, 1.0), (4.0, 1.0))
    steps = bfs_shortest_steps(grid, grid.cell_of(1.0, 1.0), grid.cell_of(4.0, 1.0))
    assert path.grid_steps == steps == 6
    assert steps * grid.cell_size == pytest.approx(3.0)
    assert path.waypoints[-1] == (4.0, 1.0)


def test_waypoints_are_grid_adjacent_and_length_consistent():
    grid = build_grid(scene([make_object("box", "obstacle", 3.0, 1.0, 1.0, 1.0)]))
    path = plan_path(grid, (1.0, 1.0), (6.0, 1.0))
    for a, b in zip(path.cells, path.cells[1:]):
        assert abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1
    total = sum(math.dist(a, b) for a, b in zip(path.waypoints, path.waypoints[1:]))
    assert path.total_length == pytest.approx(total)


def test_target_inside_obstacle():
    grid = build_grid(scene([make_object("box", "obstacle", 5.0, 5.0)]))
    with pytest.raises(TargetBlocked):
        plan_path(grid, (1.0, 1.0), (5.0, 5.0))


def test_walled_off_target_unreachable():
    # a sealed ring of obstacles around (8,8) that leaves the center cell free
    ring = [make_object(f"w{i}", "obstacle", x, y, 0.5, 0.5)
            for i, (x, y) in enumerate([(6.5, 6.5), (8.0, 6.5), (9.5, 6.5),
                                        (6.5, 8.0), (9.5, 8.0),
                                        (6.5, 9.5), (8.0, 9.5), (9.5, 9.5)])]
    grid = build_grid(scene(ring))
    assert not grid.is_blocked(*grid.cell_of(8.0, 8.0))
    with pytest.raises(Unreachable):
        plan_path(grid, (1.0, 1.0), (8.0, 8.0))


def test_planner_is_deterministic():
    grid = build_grid(scene([make_object("box", "obstacle", 4.0, 4.0, 1.5, 0.5)]))
    a = plan_path(grid, (1.0, 1.0), (8.0, 8.0))
    b = plan_path(grid, (1.0, 1.0), (8.0, 8.0))
    assert a.waypoints == b.waypoints
    assert a.cells == b.cells


def random_grid(rng, max_side=30, density=0.3):
    w = rng.randint(4, max_side)
    h = rng.randint(4, max_side)
    blocked = [rng.random() < density for _ in range(w * h)]
    return OccupancyGrid(width_cells=w, height_cells=h, cell_size=0.5, blocked=blocked)


def free_cells(grid):
    return [(r, c) for r in range(grid.height_cells) for c in range(grid.width_cells)
            if not grid.is_blocked(r, c)]


def test_plan_matches_bfs_on_random_grids():
    rng = random.Random(42)
    for _ in range(60):
        grid = random_grid(rng)
        cells = free_cells(grid)
        if len(cells) < 2:
            continue
        start, goal = rng.choice(cells), rng.choice(cells)
        expected = bfs_shortest_steps(grid, start, goal)
        try:
            path = plan_path(grid, grid.center(start), grid.center(goal))
        except Unreachable:
            assert expected is None
            continue
        assert expected == path.grid_steps
