"""Occupancy grid and A* path planning on it.

Cells are row-major, row 0 at y=0. A cell is blocked when it overlaps an
obstacle or surface footprint inflated by the robot radius; items never
block. Planning is 4-connected with deterministic tie-breaking so that
identical inputs always give the identical path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Iterable, Optional

from .errors import SpawnBlocked, TargetBlocked, Unreachable
from .model import ObjectKind, ValidatedScenario

Cell = tuple[int, int]  # (row, col)


@dataclass
class OccupancyGrid:
    width_cells: int
    height_cells: int
    cell_size: float
    blocked: list[bool]  # row-major, len == width*height

    def index(self, row: int, col: int) -> int:
        return row * self.width_cells + col

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.height_cells and 0 <= col < self.width_cells

    def is_blocked(self, row: int, col: int) -> bool:
        return self.blocked[self.index(row, col)]

    def cell_of(self, x: float, y: float) -> Cell:
        col = min(int(x / self.cell_size), self.width_cells - 1)
        row = min(int(y / self.cell_size), self.height_cells - 1)
        return (max(row, 0), max(col, 0))

    def center(self, cell: Cell) -> tuple[float, float]:
        row, col = cell
        return ((col + 0.5) * self.cell_size, (row + 0.5) * self.cell_size)

    def cell_rect(self, cell: Cell) -> tuple[float, float, float, float]:
        row, col = cell
        s = self.cell_size
        return (col * s, row * s, (col + 1) * s, (row + 1) * s)


@dataclass
class Path:
    waypoints: list[tuple[float, float]]
    total_length: float
    cells: list[Cell] = field(default_factory=list)

    @property
    def grid_steps(self) -> int:
        """Number of 4-connected moves, the quantity a BFS oracle counts."""
        return max(len(self.cells) - 1, 0)


def _rects_overlap(a, b) -> bool:
    # strict overlap: shared edges do not block
    return a[0] < b[2] and a[2] > b[0] and a[1] < b[3] and a[3] > b[1]


def _cells_touching(grid: OccupancyGrid, rect) -> Iterable[Cell]:
    s = grid.cell_size
    c0 = max(int(rect[0] / s), 0)
    r0 = max(int(rect[1] / s), 0)
    c1 = min(int(math.ceil(rect[2] / s)), grid.width_cells - 1)
    r1 = min(int(math.ceil(rect[3] / s)), grid.height_cells - 1)
    for row in range(r0, r1 + 1):
        for col in range(c0, c1 + 1):
            yield (row, col)


def build_grid(scenario: ValidatedScenario, ignore_ids: frozenset[str] = frozenset()) -> OccupancyGrid:
    """Rasterize blocking footprints, inflated by the robot radius.

    `ignore_ids` excludes specific objects (used to leave the target surface
    of an active place goal traversable). Raises SpawnBlocked if inflation
    closes the robot's spawn cell.
    """
    cell = scenario.cell_size
    width = int(math.ceil(scenario.world_width / cell - 1e-9))
    height = int(math.ceil(scenario.world_height / cell - 1e-9))
    grid = OccupancyGrid(width, height, cell, [False] * (width * height))

    inflate = scenario.robot.radius
    for obj in scenario.objects:
        if obj.kind == ObjectKind.ITEM or obj.id in ignore_ids:
            continue
        hx, hy = obj.half_extents
        rect = (
            obj.pose.x - hx - inflate,
            obj.pose.y - hy - inflate,
            obj.pose.x + hx + inflate,
            obj.pose.y + hy + inflate,
        )
        for c in _cells_touching(grid, rect):
            if _rects_overlap(grid.cell_rect(c), rect):
                grid.blocked[grid.index(*c)] = True

    spawn_cell = grid.cell_of(scenario.robot.spawn.x, scenario.robot.spawn.y)
    if grid.is_blocked(*spawn_cell):
        raise SpawnBlocked("robot.spawn", "spawn cell closed by inflated footprints")
    return grid


# neighbor order is part of the determinism contract
_NEIGHBOR_STEPS = ((-1, 0), (1, 0), (0, -1), (0, 1))


def plan_path(grid: OccupancyGrid, start: tuple[float, float], goal: tuple[float, float]) -> Path:
    """Shortest 4-connected path by A* with a Manhattan heuristic.

    Ties on f are broken by lower cell index, so repeated runs always expand
    the same nodes and return the same path. Waypoints sit at cell centers
    with the last one replaced by the exact goal point. The start cell is
    always traversable as the origin, even if blocked, so the robot can back
    out of a footprint it was driven onto.
    """
    if start == goal:
        return Path(waypoints=[], total_length=0.0, cells=[])

    start_cell = grid.cell_of(*start)
    goal_cell = grid.cell_of(*goal)
    if grid.is_blocked(*goal_cell):
        raise TargetBlocked(f"target cell {goal_cell} is blocked")
    if start_cell == goal_cell:
        return Path(waypoints=[(goal[0], goal[1])], total_length=0.0, cells=[start_cell])

    g_score: dict[Cell, int] = {start_cell: 0}
    parent: dict[Cell, Cell] = {}
    open_heap: list[tuple[int, int, Cell]] = []

    def h(c: Cell) -> int:
        return abs(c[0] - goal_cell[0]) + abs(c[1] - goal_cell[1])

    heappush(open_heap, (h(start_cell), grid.index(*start_cell), start_cell))
    closed: set[Cell] = set()

    while open_heap:
        _, _, current = heappop(open_heap)
        if current in closed:
            continue
        closed.add(current)
        if current == goal_cell:
            break
        g_here = g_score[current]
        for dr, dc in _NEIGHBOR_STEPS:
            nb = (current[0] + dr, current[1] + dc)
            if not grid.in_bounds(*nb) or grid.is_blocked(*nb):
                continue
            tentative = g_here + 1
            if tentative < g_score.get(nb, 1 << 60):
                g_score[nb] = tentative
                parent[nb] = current
                heappush(open_heap, (tentative + h(nb), grid.index(*nb), nb))

    if goal_cell not in closed:
        raise Unreachable(f"no path from {start_cell} to {goal_cell}")

    cells = [goal_cell]
    while cells[-1] != start_cell:
        cells.append(parent[cells[-1]])
    cells.reverse()

    waypoints = [grid.center(c) for c in cells]
    waypoints[-1] = (goal[0], goal[1])
    total = 0.0
    for a, b in zip(waypoints, waypoints[1:]):
        total += math.hypot(b[0] - a[0], b[1] - a[1])
    return Path(waypoints=waypoints, total_length=total, cells=cells)


def bfs_shortest_steps(grid: OccupancyGrid, start_cell: Cell, goal_cell: Cell) -> Optional[int]:
    """Independent shortest-path oracle: plain BFS step count, None if unreachable.

    Kept deliberately separate from plan_path; tests compare the two.
    """
    if grid.is_blocked(*goal_cell):
        return None
    if start_cell == goal_cell:
        return 0
    from collections import deque

    dist = {start_cell: 0}
    q = deque([start_cell])
    while q:
        cur = q.popleft()
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            nb = (cur[0] + dr, cur[1] + dc)
            if not grid.in_bounds(*nb) or grid.is_blocked(*nb) or nb in dist:
                continue
            dist[nb] = dist[cur] + 1
            if nb == goal_cell:
                return dist[nb]
            q.append(nb)
    return None
