"""Grid A* over the operating area.

The search runs on an 8-connected grid of cell centers at a configurable
resolution. A cell is blocked when its center falls inside a no-fly zone
inflated by half a cell, and a diagonal move is allowed only when both
adjacent orthogonal cells are free (no corner cutting). Step costs are
geometric (cell, cell*sqrt(2)), so the returned grid path is cost-optimal
for that metric.

With smooth=True (the default) a line-of-sight shortcut pass runs over the
grid path afterwards, so a free-space query returns the straight segment
between the exact start and goal. smooth=False returns the raw grid path,
whose cost is what optimality checks should measure.
"""

from __future__ import annotations

import heapq
import math

import numpy as np
import shapely

from .geometry import LocalPoint
from .worldmap import WorldMap, segment_clear

SQRT2 = math.sqrt(2.0)

# 8-connected neighborhood: (di, dj, unit cost)
_STEPS = [
    (1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
    (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2),
]


class NoPathError(Exception):
    """No collision-free grid path between start and goal."""


class _Grid:
    def __init__(self, world_map: WorldMap, cell: float):
        if not cell > 0.0:
            raise ValueError("cell size must be positive")
        b = world_map.bounds
        self.cell = cell
        self.x0 = b.x_min
        self.y0 = b.y_min
        self.nx = max(1, int(math.ceil((b.x_max - b.x_min) / cell)))
        self.ny = max(1, int(math.ceil((b.y_max - b.y_min) / cell)))
        inflated = world_map.inflated_union(0.5 * cell)
        xs = self.x0 + (np.arange(self.nx) + 0.5) * cell
        ys = self.y0 + (np.arange(self.ny) + 0.5) * cell
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        if inflated.is_empty:
            self.blocked = np.zeros((self.nx, self.ny), dtype=bool)
        else:
            self.blocked = shapely.intersects_xy(inflated, gx.ravel(), gy.ravel()).reshape(
                self.nx, self.ny
            )

    def snap(self, p: LocalPoint) -> tuple[int, int]:
        i = int((p.x - self.x0) // self.cell)
        j = int((p.y - self.y0) // self.cell)
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise NoPathError(f"point ({p.x}, {p.y}) outside map bounds")
        return i, j

    def center(self, i: int, j: int) -> tuple[float, float]:
        return (self.x0 + (i + 0.5) * self.cell, self.y0 + (j + 0.5) * self.cell)


def _search(grid: _Grid, start: tuple[int, int], goal: tuple[int, int]) -> list[tuple[int, int]]:
    blocked = grid.blocked
    if blocked[start] or blocked[goal]:
        raise NoPathError("start or goal cell is inside an inflated no-fly zone")
    gx, gy = goal
    cell = grid.cell

    g = np.full((grid.nx, grid.ny), np.inf)
    g[start] = 0.0
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    closed = np.zeros((grid.nx, grid.ny), dtype=bool)
    heap: list[tuple[float, int, int, int]] = []
    tie = 0
    h0 = math.hypot(gx - start[0], gy - start[1]) * cell
    heapq.heappush(heap, (h0, tie, start[0], start[1]))

    while heap:
        _, _, i, j = heapq.heappop(heap)
        if closed[i, j]:
            continue
        closed[i, j] = True
        if (i, j) == goal:
            path = [(i, j)]
            while path[-1] != start:
                path.append(parent[path[-1]])
            path.reverse()
            return path
        base = g[i, j]
        for di, dj, unit in _STEPS:
            ni, nj = i + di, j + dj
            if not (0 <= ni < grid.nx and 0 <= nj < grid.ny):
                continue
            if blocked[ni, nj]:
                continue
            if di != 0 and dj != 0 and (blocked[i + di, j] or blocked[i, j + dj]):
                continue  # no corner cutting
            cand = base + unit * cell
            if cand < g[ni, nj]:
                g[ni, nj] = cand
                parent[(ni, nj)] = (i, j)
                tie += 1
                f = cand + math.hypot(gx - ni, gy - nj) * cell
                heapq.heappush(heap, (f, tie, ni, nj))
    raise NoPathError("goal unreachable on the grid")


def _lerp_z(points: list[LocalPoint], z_start: float, z_end: float) -> list[LocalPoint]:
    total = sum(a.distance_to(b) for a, b in zip(points, points[1:]))
    if total <= 0.0:
        return [p.with_z(z_end) for p in points]
    out = [points[0].with_z(z_start)]
    run = 0.0
    for a, b in zip(points, points[1:]):
        run += a.distance_to(b)
        out.append(b.with_z(z_start + (z_end - z_start) * run / total))
    out[-1] = points[-1].with_z(z_end)  # keep the endpoint exact
    return out


def _shortcut(points: list[LocalPoint], inflated, step: float) -> list[LocalPoint]:
    out = [points[0]]
    i = 0
    while i < len(points) - 1:
        j = len(points) - 1
        while j > i + 1 and not segment_clear(inflated, points[i], points[j], step):
            j -= 1
        out.append(points[j])
        i = j
    return out


def astar_path(
    world_map: WorldMap,
    start: LocalPoint,
    goal: LocalPoint,
    cell: float = 2.0,
    smooth: bool = True,
) -> list[LocalPoint]:
    """Plan a collision-free horizontal path from start to goal.

    Altitude is linearly interpolated from start.z to goal.z along the path
    (vertical profiles are the caller's business). Raises NoPathError when
    either endpoint is blocked/out of bounds or the goal is unreachable.
    """
    grid = _Grid(world_map, cell)
    s_cell = grid.snap(start)
    g_cell = grid.snap(goal)
    cells = _search(grid, s_cell, g_cell)
    if smooth and start.distance_to(goal) <= 1e-9:
        return [start]
    centers = [LocalPoint(*grid.center(i, j)) for i, j in cells]
    if not smooth:
        return _lerp_z(centers, start.z, goal.z)

    pts = [start.with_z(0.0)] + centers + [goal.with_z(0.0)]
    # drop duplicate endpoints when start/goal already sit on grid centers
    dedup = [pts[0]]
    for p in pts[1:]:
        if p.distance_to(dedup[-1]) > 1e-9:
            dedup.append(p)
    if len(dedup) == 1:
        return [start, goal.with_z(goal.z)] if start.distance_to(goal) > 0 else [start]
    inflated = world_map.inflated_union(0.5 * cell)
    short = _shortcut(dedup, inflated, 0.5 * cell)
    return _lerp_z(short, start.z, goal.z)


def grid_step_counts(path: list[LocalPoint], cell: float) -> tuple[int, int]:
    """Count (straight, diagonal) steps of a raw grid path."""
    straight = diag = 0
    for a, b in zip(path, path[1:]):
        dx, dy = abs(b.x - a.x), abs(b.y - a.y)
        if dx > 0.5 * cell and dy > 0.5 * cell:
            diag += 1
        else:
            straight += 1
    return straight, diag


def grid_cost(path: list[LocalPoint], cell: float) -> float:
    """Canonical geometric cost of a raw grid path."""
    straight, diag = grid_step_counts(path, cell)
    return straight * cell + diag * (cell * SQRT2)
