"""Discrete-time agent simulator.

The agent is a point with planar pose (x, y, heading). Actions are the
fixed set move_forward (0.25 m), turn_left / turn_right (30 degrees).
Sensing casts exact rays against wall slabs and object footprints and
reports which objects are visible (center in range, in the field of view,
line of sight clear of opaque walls and other objects).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ray_hits, rects_contain, segment_blocked
from .scene import RESOLUTION, SceneSpec

MOVE_FORWARD = "move_forward"
TURN_LEFT = "turn_left"
TURN_RIGHT = "turn_right"

STEP_LENGTH = 0.25  # meters per move_forward
TURN_INCREMENT = math.pi / 6.0  # 30 degrees

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap to [0, 2*pi)."""
    a = math.fmod(a, TWO_PI)
    return a + TWO_PI if a < 0 else a


def wrap_signed(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, TWO_PI)
    if a <= 0:
        a += TWO_PI
    return a - math.pi


@dataclass(frozen=True)
class AgentPose:
    x: float
    y: float
    heading: float  # radians in [0, 2*pi)


@dataclass(frozen=True)
class SensorConfig:
    max_range: float = 5.0
    fov: float = math.pi / 2.0
    n_rays: int = 180


@dataclass(frozen=True)
class SensorFrame:
    timestamp: int
    pose: AgentPose
    visible_ids: tuple[int, ...]
    depth_rays: tuple[tuple[float, float], ...]  # (world angle, range) pairs
    max_range: float


@dataclass
class FollowResult:
    arrived: bool
    replan_needed: bool = False
    budget_exhausted: bool = False
    actions: int = 0
    moves: int = 0


class SimState:
    """Mutable per-episode simulator state; the scene is shared read-only."""

    def __init__(
        self,
        scene: SceneSpec,
        pose: AgentPose | tuple[float, float, float],
        sensor: SensorConfig = SensorConfig(),
        phantom_ids: tuple[int, ...] = (),
        turn_increment: float = TURN_INCREMENT,
        trace: list | None = None,
    ):
        if not isinstance(pose, AgentPose):
            pose = AgentPose(pose[0], pose[1], wrap_angle(pose[2]))
        self.scene = scene
        self.pose = pose
        self.sensor = sensor
        self.turn_increment = turn_increment
        self.phantoms = frozenset(phantom_ids)
        self.step_count = 0
        self.moves = 0
        self.blocked = False
        self.trace = trace

        self._objects = [o for o in scene.objects if o.id not in self.phantoms]
        obj_rects = (
            np.stack([o.box.footprint() for o in self._objects])
            if self._objects
            else np.zeros((0, 4))
        )
        walls_all = scene.wall_rects(include_transparent=True)
        walls_opaque = scene.wall_rects(include_transparent=False)
        self._collision_rects = np.vstack([walls_all, obj_rects])
        self._ray_rects = self._collision_rects  # depth sees windows as solid
        self._walls_opaque = walls_opaque
        self._obj_rects = obj_rects

    # -- kinematics ---------------------------------------------------------

    def _try_move(self, frm: AgentPose) -> tuple[AgentPose, bool]:
        dest = (
            frm.x + STEP_LENGTH * math.cos(frm.heading),
            frm.y + STEP_LENGTH * math.sin(frm.heading),
        )
        if rects_contain(self._collision_rects, dest).any():
            return frm, True
        if segment_blocked((frm.x, frm.y), dest, self._collision_rects):
            return frm, True
        return AgentPose(dest[0], dest[1], frm.heading), False

    def apply(self, action: str) -> "SimState":
        """Execute one action; blocked moves leave the pose unchanged."""
        p = self.pose
        blocked = False
        if action == TURN_LEFT:
            p = AgentPose(p.x, p.y, wrap_angle(p.heading + self.turn_increment))
        elif action == TURN_RIGHT:
            p = AgentPose(p.x, p.y, wrap_angle(p.heading - self.turn_increment))
        elif action == MOVE_FORWARD:
            p, blocked = self._try_move(p)
            if not blocked:
                self.moves += 1
        else:
            raise ValueError(f"unknown action {action!r}")
        self.pose = p
        self.blocked = blocked
        self.step_count += 1
        if self.trace is not None:
            self.trace.append(
                {
                    "step": self.step_count,
                    "pose": [self.pose.x, self.pose.y, self.pose.heading],
                    "action": action,
                    "blocked": blocked,
                }
            )
        return self

    # -- sensing ------------------------------------------------------------

    def line_of_sight(self, target_xy, exclude_id: int | None = None) -> bool:
        """Segment test used for both sensing and data collection: opaque
        walls and other objects occlude; windows do not."""
        if exclude_id is None or self._obj_rects.shape[0] == 0:
            others = self._obj_rects
        else:
            keep = [i for i, o in enumerate(self._objects) if o.id != exclude_id]
            others = self._obj_rects[keep] if keep else np.zeros((0, 4))
        blockers = np.vstack([self._walls_opaque, others])
        return not segment_blocked((self.pose.x, self.pose.y), target_xy, blockers)

    def sense(self) -> SensorFrame:
        pose = self.pose
        cfg = self.sensor
        panoramic = cfg.fov >= TWO_PI - 1e-9
        if panoramic:
            offsets = np.arange(cfg.n_rays) * (TWO_PI / cfg.n_rays) - math.pi
        else:
            offsets = np.linspace(-cfg.fov / 2.0, cfg.fov / 2.0, cfg.n_rays)
        angles = pose.heading + offsets
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        ranges = ray_hits((pose.x, pose.y), dirs, self._ray_rects)
        ranges = np.minimum(ranges, cfg.max_range)

        visible = []
        for o in self._objects:
            cx, cy, _ = o.box.center
            d = math.hypot(cx - pose.x, cy - pose.y)
            if d > cfg.max_range:
                continue
            if not panoramic:
                bearing = math.atan2(cy - pose.y, cx - pose.x)
                if abs(wrap_signed(bearing - pose.heading)) > cfg.fov / 2.0 + 1e-12:
                    continue
            if self.line_of_sight((cx, cy), exclude_id=o.id):
                visible.append(o.id)
        frame = SensorFrame(
            timestamp=self.step_count,
            pose=pose,
            visible_ids=tuple(sorted(visible)),
            depth_rays=tuple((float(a), float(r)) for a, r in zip(angles, ranges)),
            max_range=cfg.max_range,
        )
        if self.trace is not None:
            self.trace.append(
                {
                    "step": self.step_count,
                    "pose": [pose.x, pose.y, pose.heading],
                    "action": "sense",
                    "blocked": False,
                    "visible_ids": list(frame.visible_ids),
                }
            )
        return frame

    # -- path following -----------------------------------------------------

    def plan_leg_actions(self, waypoints) -> tuple[list[str], bool]:
        """Kinematic dry run of the greedy controller; returns (actions,
        blocked). Deterministic, so executing the list reproduces it."""
        actions: list[str] = []
        x, y, heading = self.pose.x, self.pose.y, self.pose.heading
        tol = self.turn_increment / 2.0 + 1e-9
        cap = 24 + 12 * max(1, len(waypoints)) * 4
        for wp in waypoints:
            while math.hypot(wp[0] - x, wp[1] - y) >= RESOLUTION - 1e-9:
                if len(actions) > cap:
                    return actions, True
                desired = math.atan2(wp[1] - y, wp[0] - x)
                err = wrap_signed(desired - heading)
                if abs(err) > tol:
                    if err > 0:
                        actions.append(TURN_LEFT)
                        heading = wrap_angle(heading + self.turn_increment)
                    else:
                        actions.append(TURN_RIGHT)
                        heading = wrap_angle(heading - self.turn_increment)
                    continue
                dest = (
                    x + STEP_LENGTH * math.cos(heading),
                    y + STEP_LENGTH * math.sin(heading),
                )
                if rects_contain(self._collision_rects, dest).any() or segment_blocked(
                    (x, y), dest, self._collision_rects
                ):
                    return actions, True
                actions.append(MOVE_FORWARD)
                x, y = dest
        return actions, False

    def follow_path(
        self,
        waypoints,
        on_frame=None,
        frames_per_leg: int = 18,
        budget: int | None = None,
    ) -> FollowResult:
        """Drive along planner waypoints, sensing at evenly subsampled steps.

        on_frame(state, frame) is invoked at each sensing event; the last
        event lands on arrival. Returns replan_needed when a move is blocked.
        """
        actions, blocked = self.plan_leg_actions(waypoints)
        n = len(actions)
        if n == 0:
            if blocked:
                return FollowResult(arrived=False, replan_needed=True)
            return FollowResult(arrived=True)
        n_frames = min(frames_per_leg, n)
        sense_at = set(
            int(round(i)) for i in np.linspace(1, n, n_frames)
        )
        result = FollowResult(arrived=False)
        for idx, action in enumerate(actions, start=1):
            if budget is not None and self.step_count >= budget:
                result.budget_exhausted = True
                return result
            self.apply(action)
            result.actions += 1
            if action == MOVE_FORWARD:
                result.moves += 1
            if self.blocked:
                result.replan_needed = True
                return result
            if idx in sense_at and on_frame is not None:
                on_frame(self, self.sense())
        result.arrived = not blocked
        result.replan_needed = blocked
        return result

    def spin_and_update(self, on_frame, budget: int | None = None) -> bool:
        """Full panorama: twelve 30-degree turns, sensing after each.

        Returns False when the step budget ran out mid-spin.
        """
        turns = int(round(TWO_PI / self.turn_increment))
        for _ in range(turns):
            if budget is not None and self.step_count >= budget:
                return False
            self.apply(TURN_LEFT)
            on_frame(self, self.sense())
        return True
