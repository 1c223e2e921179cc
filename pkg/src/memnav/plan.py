"""Grid path planning and geodesic distances.

A* over 4-connected Free cells with a Manhattan heuristic (admissible on a
unit-cost grid, so paths are optimal). BFS distance fields serve geodesic
queries and candidate-feature distances. The policy only ever plans on the
agent's partial grid; ground-truth grids are reserved for labels and
metrics.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .mapping import FREE, OccupancyGrid

# Neighbor expansion order: N, E, S, W (deterministic tie-break).
NEIGHBORS = ((0, 1), (1, 0), (0, -1), (-1, 0))


@dataclass(frozen=True)
class PlannedPath:
    waypoints: list[tuple[float, float]]
    length_meters: float


def shortest_path_cells(grid: OccupancyGrid, start, goal):
    """A* on Free cells; returns the cell list or None when unreachable."""
    ny, nx = grid.cells.shape
    sx, sy = int(start[0]), int(start[1])
    gx, gy = int(goal[0]), int(goal[1])
    if not (0 <= gx < nx and 0 <= gy < ny):
        return None
    cells = grid.cells
    if cells[sy, sx] != FREE or cells[gy, gx] != FREE:
        return None
    if (sx, sy) == (gx, gy):
        return [(sx, sy)]

    g_cost = {(sx, sy): 0}
    parent = {}
    counter = 0
    h0 = abs(sx - gx) + abs(sy - gy)
    heap = [(h0, counter, (sx, sy))]
    closed = set()
    while heap:
        f, _, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        if cur == (gx, gy):
            path = [cur]
            while cur in parent:
                cur = parent[cur]
                path.append(cur)
            path.reverse()
            return path
        closed.add(cur)
        cx, cy = cur
        base = g_cost[cur]
        for dx, dy in NEIGHBORS:
            vx, vy = cx + dx, cy + dy
            if not (0 <= vx < nx and 0 <= vy < ny) or cells[vy, vx] != FREE:
                continue
            v = (vx, vy)
            ng = base + 1
            if ng < g_cost.get(v, math.inf):
                g_cost[v] = ng
                parent[v] = cur
                counter += 1
                heapq.heappush(heap, (ng + abs(vx - gx) + abs(vy - gy), counter, v))
    return None


def shortest_path(grid: OccupancyGrid, from_xy, to_xy) -> PlannedPath | None:
    """Plan between two metric positions; None when no Free path exists."""
    cells = shortest_path_cells(grid, grid.cell_of(from_xy), grid.cell_of(to_xy))
    if cells is None:
        return None
    waypoints = [grid.center_of(c) for c in cells]
    return PlannedPath(waypoints, (len(cells) - 1) * grid.resolution)


def distance_field(grid: OccupancyGrid, source_cell) -> np.ndarray:
    """BFS distances in meters from a source cell over Free cells; inf elsewhere."""
    ny, nx = grid.cells.shape
    field = np.full((ny, nx), np.inf)
    sx, sy = int(source_cell[0]), int(source_cell[1])
    if not (0 <= sx < nx and 0 <= sy < ny) or grid.cells[sy, sx] != FREE:
        return field
    cells = grid.cells
    field[sy, sx] = 0.0
    q = deque([(sx, sy)])
    res = grid.resolution
    while q:
        cx, cy = q.popleft()
        base = field[cy, cx] + res
        for dx, dy in NEIGHBORS:
            vx, vy = cx + dx, cy + dy
            if 0 <= vx < nx and 0 <= vy < ny and cells[vy, vx] == FREE and base < field[vy, vx]:
                field[vy, vx] = base
                q.append((vx, vy))
    return field


def geodesic_distance(grid: OccupancyGrid, from_xy, to_xy) -> float:
    """Shortest-path length in meters; inf when unreachable.

    Callers doing metrics must pass the ground-truth rasterization, never
    the agent's partial grid.
    """
    a = grid.cell_of(from_xy)
    b = grid.cell_of(to_xy)
    cells = shortest_path_cells(grid, a, b)
    if cells is None:
        return math.inf
    return (len(cells) - 1) * grid.resolution


def object_anchor_cell(grid: OccupancyGrid, obj) -> tuple[int, int]:
    """Free cell nearest (Euclidean) to the object's center; the navigation
    target standing in for the object itself."""
    free = grid.free_cells()
    if free.shape[0] == 0:
        raise ValueError("grid has no free cells")
    cx, cy = obj.box.center[0], obj.box.center[1]
    centers_x = grid.origin[0] + (free[:, 0] + 0.5) * grid.resolution
    centers_y = grid.origin[1] + (free[:, 1] + 0.5) * grid.resolution
    d2 = (centers_x - cx) ** 2 + (centers_y - cy) ** 2
    best = int(np.argmin(d2))  # first in row-major order on ties
    return int(free[best, 0]), int(free[best, 1])


def footprint_source_mask(grid: OccupancyGrid, rect) -> np.ndarray:
    """Free cells standing at a box: the footprint cells plus their one-cell
    ring (8-neighborhood), intersected with Free space. Footprint cells
    themselves only qualify when free (phantom targets)."""
    ny, nx = grid.cells.shape
    res = grid.resolution
    ix0 = max(0, int(math.floor((rect[0] - grid.origin[0]) / res + 1e-9)) - 1)
    iy0 = max(0, int(math.floor((rect[1] - grid.origin[1]) / res + 1e-9)) - 1)
    ix1 = min(nx, int(math.ceil((rect[2] - grid.origin[0]) / res - 1e-9)) + 1)
    iy1 = min(ny, int(math.ceil((rect[3] - grid.origin[1]) / res - 1e-9)) + 1)
    mask = np.zeros((ny, nx), dtype=bool)
    if ix0 < ix1 and iy0 < iy1:
        mask[iy0:iy1, ix0:ix1] = True
    return mask & (grid.cells == FREE)


def multi_source_distance_field(grid: OccupancyGrid, sources: np.ndarray) -> np.ndarray:
    """BFS distances in meters from a set of source cells (boolean mask)."""
    ny, nx = grid.cells.shape
    field = np.full((ny, nx), np.inf)
    cells = grid.cells
    q = deque()
    ys, xs = np.nonzero(sources & (cells == FREE))
    for x, y in zip(xs, ys):
        field[y, x] = 0.0
        q.append((int(x), int(y)))
    res = grid.resolution
    while q:
        cx, cy = q.popleft()
        base = field[cy, cx] + res
        for dx, dy in NEIGHBORS:
            vx, vy = cx + dx, cy + dy
            if 0 <= vx < nx and 0 <= vy < ny and cells[vy, vx] == FREE and base < field[vy, vx]:
                field[vy, vx] = base
                q.append((vx, vy))
    return field


def object_distance_field(grid: OccupancyGrid, rect) -> np.ndarray:
    """Geodesic meters from every free cell to 'standing at' the given box
    footprint; the goal-distance convention for success and SPL."""
    return multi_source_distance_field(grid, footprint_source_mask(grid, rect))


def region_distance(field: np.ndarray, grid: OccupancyGrid, rect) -> float:
    """Distance (meters) from a BFS field to the cells around a box footprint.

    Takes the minimum field value over the footprint cells inflated by one
    ring, i.e. the cost to stand next to the box. inf when nothing nearby
    is reachable.
    """
    ny, nx = grid.cells.shape
    res = grid.resolution
    ix0 = int(math.floor((rect[0] - grid.origin[0]) / res)) - 1
    iy0 = int(math.floor((rect[1] - grid.origin[1]) / res)) - 1
    ix1 = int(math.ceil((rect[2] - grid.origin[0]) / res)) + 1
    iy1 = int(math.ceil((rect[3] - grid.origin[1]) / res)) + 1
    ix0, iy0 = max(0, ix0), max(0, iy0)
    ix1, iy1 = min(nx, ix1), min(ny, iy1)
    if ix0 >= ix1 or iy0 >= iy1:
        return math.inf
    return float(field[iy0:iy1, ix0:ix1].min())
