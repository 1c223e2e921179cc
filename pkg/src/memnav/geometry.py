"""Axis-aligned geometry primitives shared by the simulator and the memory bank.

Everything in the world is axis-aligned: walls are thin axis-aligned slabs,
objects are 3D axis-aligned boxes, and the agent is a point. Rectangles are
stored as (xmin, ymin, xmax, ymax) rows so batches vectorize cleanly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Box3", "rects_contain", "ray_hits", "segment_blocked"]


@dataclass(frozen=True)
class Box3:
    """3D axis-aligned box, center + size in meters."""

    center: tuple[float, float, float]
    size: tuple[float, float, float]

    def __post_init__(self):
        if min(self.size) <= 0:
            raise ValueError(f"box size must be positive, got {self.size}")

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float) - np.asarray(self.size, dtype=float) / 2.0

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float) + np.asarray(self.size, dtype=float) / 2.0

    @property
    def volume(self) -> float:
        sx, sy, sz = self.size
        return float(sx * sy * sz)

    def footprint(self) -> np.ndarray:
        """2D extent (xmin, ymin, xmax, ymax) of the box in the plane."""
        lo, hi = self.lo, self.hi
        return np.array([lo[0], lo[1], hi[0], hi[1]])

    @staticmethod
    def from_minmax(lo, hi) -> "Box3":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        return Box3(tuple((lo + hi) / 2.0), tuple(hi - lo))


def rects_contain(rects: np.ndarray, point) -> np.ndarray:
    """Boolean mask of rectangles (K,4) containing the 2D point (closed test)."""
    if rects.size == 0:
        return np.zeros(0, dtype=bool)
    x, y = point
    return (
        (rects[:, 0] <= x) & (x <= rects[:, 2]) & (rects[:, 1] <= y) & (y <= rects[:, 3])
    )


def ray_hits(origin, dirs: np.ndarray, rects: np.ndarray) -> np.ndarray:
    """First-hit distance of each ray against a batch of rectangles.

    origin: (2,), dirs: (R, 2) unit direction rows, rects: (K, 4).
    Returns (R,) distances; +inf where a ray misses everything. Rays that
    start inside a rectangle hit it at distance 0. Uses the slab method with
    divide-by-zero handled through inf arithmetic.
    """
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    if rects.size == 0:
        return np.full(dirs.shape[0], np.inf)
    ox, oy = float(origin[0]), float(origin[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs  # inf where component is 0
        # (R, K) parametric distances to each slab boundary
        tx1 = (rects[None, :, 0] - ox) * inv[:, 0, None]
        tx2 = (rects[None, :, 2] - ox) * inv[:, 0, None]
        ty1 = (rects[None, :, 1] - oy) * inv[:, 1, None]
        ty2 = (rects[None, :, 3] - oy) * inv[:, 1, None]
        # 0 * inf -> nan when the origin sits exactly on a slab boundary of
        # an axis-parallel ray; treat that axis as unconstrained.
        txmin = np.fmin(tx1, tx2)
        txmax = np.fmax(tx1, tx2)
        tymin = np.fmin(ty1, ty2)
        tymax = np.fmax(ty1, ty2)
        txmin = np.where(np.isnan(txmin), -np.inf, txmin)
        txmax = np.where(np.isnan(txmax), np.inf, txmax)
        tymin = np.where(np.isnan(tymin), -np.inf, tymin)
        tymax = np.where(np.isnan(tymax), np.inf, tymax)
    tnear = np.maximum(txmin, tymin)
    tfar = np.minimum(txmax, tymax)
    hit = (tnear <= tfar) & (tfar >= 0.0)
    t = np.where(hit, np.maximum(tnear, 0.0), np.inf)
    return t.min(axis=1)


def segment_blocked(p, q, rects: np.ndarray) -> bool:
    """True if the open segment p -> q passes through any rectangle.

    Grazing contact with a rectangle boundary does not count as blocked;
    this keeps motion between two adjacent free cells legal when a wall
    slab ends exactly at their shared corner.
    """
    if rects.size == 0:
        return False
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = q - p
    length = float(np.hypot(d[0], d[1]))
    if length == 0.0:
        return bool(_strictly_inside(rects, p).any())
    dirv = d / length
    eps = 1e-9
    # Shrink each rect by eps so boundary grazes do not register.
    shrunk = rects + np.array([eps, eps, -eps, -eps])
    valid = (shrunk[:, 0] < shrunk[:, 2]) & (shrunk[:, 1] < shrunk[:, 3])
    shrunk = shrunk[valid]
    if shrunk.size == 0:
        return False
    t = ray_hits(p, dirv[None, :], shrunk)[0]
    return bool(t < length)


def _strictly_inside(rects: np.ndarray, point) -> np.ndarray:
    x, y = point
    return (
        (rects[:, 0] < x) & (x < rects[:, 2]) & (rects[:, 1] < y) & (y < rects[:, 3])
    )
