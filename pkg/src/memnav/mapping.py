"""Occupancy grid maintenance and frontier extraction.

The grid covers the scene bounds at 0.25 m/cell. Depth rays carve Free
space and pin Occupied cells; Occupied is sticky so a grazing ray can never
reopen a wall. Frontiers are Free cells touching Unknown space, clustered
with 8-connectivity and reported as one waypoint per cluster.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .scene import FOUR_CONNECTED, RESOLUTION, SceneSpec

UNKNOWN = 0
FREE = 1
OCCUPIED = 2

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)

VISITED_RADIUS = 0.5  # meters; a new cluster this close to a visited one is visited


@dataclass(frozen=True)
class FrontierQuery:
    """Cluster representative on the Free/Unknown boundary."""

    position: tuple[float, float, float]  # z is always 0
    cluster_size: int
    visited: bool = False


class OccupancyGrid:
    """2D grid with cells in {Unknown, Free, Occupied}."""

    def __init__(self, width_cells: int, height_cells: int,
                 resolution: float = RESOLUTION, origin: tuple[float, float] = (0.0, 0.0)):
        self.resolution = resolution
        self.origin = origin
        self.cells = np.zeros((height_cells, width_cells), dtype=np.int8)

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape  # (ny, nx)

    def copy(self) -> "OccupancyGrid":
        g = OccupancyGrid(self.cells.shape[1], self.cells.shape[0], self.resolution, self.origin)
        g.cells[:] = self.cells
        return g

    def cell_of(self, point) -> tuple[int, int]:
        ix = int(math.floor((point[0] - self.origin[0]) / self.resolution))
        iy = int(math.floor((point[1] - self.origin[1]) / self.resolution))
        return ix, iy

    def center_of(self, cell) -> tuple[float, float]:
        return (
            self.origin[0] + (cell[0] + 0.5) * self.resolution,
            self.origin[1] + (cell[1] + 0.5) * self.resolution,
        )

    def in_bounds(self, cell) -> bool:
        ny, nx = self.cells.shape
        return 0 <= cell[0] < nx and 0 <= cell[1] < ny

    def state_at(self, cell) -> int:
        return int(self.cells[cell[1], cell[0]])

    def free_cells(self) -> np.ndarray:
        """(N, 2) array of (ix, iy) for every Free cell, row-major order."""
        iy, ix = np.nonzero(self.cells == FREE)
        return np.stack([ix, iy], axis=1)


def rasterize_scene(scene: SceneSpec, phantom_ids: tuple[int, ...] = ()) -> OccupancyGrid:
    """Fully-known ground-truth grid: walls and object footprints Occupied."""
    nx, ny = scene.cells
    grid = OccupancyGrid(nx, ny, scene.resolution, (scene.bounds[0], scene.bounds[1]))
    occ = scene.occupied_mask(phantom_ids=frozenset(phantom_ids))
    grid.cells[:] = np.where(occ, OCCUPIED, FREE)
    return grid


def integrate(grid: OccupancyGrid, frame) -> OccupancyGrid:
    """Fold one sensor frame's depth rays into the grid (in place).

    Cells along each ray become Free, the terminal cell of a hit becomes
    Occupied. Free marking uses quarter-cell ray marching (a conservative
    subset of the exact cell traversal); terminal cells are exact.
    """
    res = grid.resolution
    ox = frame.pose.x - grid.origin[0]
    oy = frame.pose.y - grid.origin[1]
    ny, nx = grid.cells.shape

    angles = np.array([a for a, _ in frame.depth_rays])
    ranges = np.array([r for _, r in frame.depth_rays])
    if angles.size == 0:
        return grid
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)

    # Sample points strictly before each ray's end point.
    step = res / 4.0
    max_r = float(ranges.max())
    ts = np.arange(0.0, max_r + step, step)
    pts_x = ox + dirs[:, 0:1] * ts[None, :]
    pts_y = oy + dirs[:, 1:2] * ts[None, :]
    valid = ts[None, :] < (ranges[:, None] - 1e-9)
    cx = np.floor(pts_x[valid] / res).astype(np.int64)
    cy = np.floor(pts_y[valid] / res).astype(np.int64)
    inb = (cx >= 0) & (cx < nx) & (cy >= 0) & (cy < ny)
    flat = cy[inb] * nx + cx[inb]
    free_flat = np.unique(flat)

    cells = grid.cells.reshape(-1)
    mask = cells[free_flat] != OCCUPIED  # sticky Occupied
    cells[free_flat[mask]] = FREE

    hit = ranges < (frame.max_range - 1e-9)
    if hit.any():
        hx = ox + dirs[hit, 0] * (ranges[hit] + 1e-6)
        hy = oy + dirs[hit, 1] * (ranges[hit] + 1e-6)
        cx = np.floor(hx / res).astype(np.int64)
        cy = np.floor(hy / res).astype(np.int64)
        inb = (cx >= 0) & (cx < nx) & (cy >= 0) & (cy < ny)
        cells[cy[inb] * nx + cx[inb]] = OCCUPIED
    return grid


def frontier_cell_mask(grid: OccupancyGrid) -> np.ndarray:
    """Free cells with at least one Unknown 4-neighbor (in-grid neighbors only)."""
    c = grid.cells
    unknown = c == UNKNOWN
    near_unknown = np.zeros_like(unknown)
    near_unknown[:-1, :] |= unknown[1:, :]
    near_unknown[1:, :] |= unknown[:-1, :]
    near_unknown[:, :-1] |= unknown[:, 1:]
    near_unknown[:, 1:] |= unknown[:, :-1]
    return (c == FREE) & near_unknown


def extract_frontiers(grid: OccupancyGrid, visited: list[FrontierQuery] = ()) -> list[FrontierQuery]:
    """Cluster frontier cells (8-connectivity) into one waypoint per cluster.

    The waypoint is the member cell nearest the cluster centroid. Clusters
    whose waypoint lies within VISITED_RADIUS of any visited frontier are
    flagged visited.
    """
    mask = frontier_cell_mask(grid)
    labels, count = ndimage.label(mask, structure=EIGHT_CONNECTED)
    visited_xy = np.array([[f.position[0], f.position[1]] for f in visited]) if visited else None

    out: list[FrontierQuery] = []
    for lab in range(1, count + 1):
        ys, xs = np.nonzero(labels == lab)
        n = xs.size
        ccx = (xs.mean() + 0.5) * grid.resolution + grid.origin[0]
        ccy = (ys.mean() + 0.5) * grid.resolution + grid.origin[1]
        centers_x = (xs + 0.5) * grid.resolution + grid.origin[0]
        centers_y = (ys + 0.5) * grid.resolution + grid.origin[1]
        d2 = (centers_x - ccx) ** 2 + (centers_y - ccy) ** 2
        best = int(np.argmin(d2))  # ties: first in row-major order
        px, py = float(centers_x[best]), float(centers_y[best])
        was_visited = False
        if visited_xy is not None:
            dist = np.hypot(visited_xy[:, 0] - px, visited_xy[:, 1] - py)
            was_visited = bool((dist <= VISITED_RADIUS).any())
        out.append(FrontierQuery((px, py, 0.0), int(n), was_visited))
    return out


def mark_visited(frontier: FrontierQuery) -> FrontierQuery:
    return replace(frontier, visited=True)


def is_reachable(grid: OccupancyGrid, from_xy, to_xy) -> bool:
    """True iff a 4-connected path of Free cells joins the two positions."""
    a = grid.cell_of(from_xy)
    b = grid.cell_of(to_xy)
    if not grid.in_bounds(b) or not grid.in_bounds(a):
        return False
    if grid.state_at(a) != FREE or grid.state_at(b) != FREE:
        return False
    labels, _ = ndimage.label(grid.cells == FREE, structure=FOUR_CONNECTED)
    return labels[a[1], a[0]] == labels[b[1], b[0]]


def write_pgm(grid: OccupancyGrid, path: str) -> None:
    """Debug snapshot: Unknown=128, Free=255, Occupied=0, row 0 at the top."""
    lut = np.array([128, 255, 0], dtype=np.uint8)
    img = lut[grid.cells[::-1, :]]
    ny, nx = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n255\n".encode())
        fh.write(img.tobytes())


def frontier_to_dict(f: FrontierQuery) -> dict:
    return {
        "position": [f.position[0], f.position[1], f.position[2]],
        "cluster_size": f.cluster_size,
        "visited": f.visited,
    }
