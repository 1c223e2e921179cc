"""Shared episode machinery: the sense -> perceive -> fuse -> map loop,
navigation to frontiers and grounded objects, and ground-truth distance
fields for labels and metrics.

The policy-facing surface only ever touches the agent's partial grid and
the memory bank; ground-truth grids stay on the metrics/label side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mapping import (
    FREE,
    FrontierQuery,
    OccupancyGrid,
    extract_frontiers,
    integrate,
    rasterize_scene,
)
from .memory import MemoryBank, ingest
from .percept import NoiseParams, exact_query, observe
from .plan import (
    distance_field,
    object_distance_field,
    region_distance,
    shortest_path_cells,
)
from .scene import EpisodeSpec, GoalSpec, SceneSpec
from .sim import SensorConfig, SimState

SUCCESS_RADIUS = 1.0  # meters, geodesic

ARRIVED = "arrived"
NO_PATH = "no_path"
BLOCKED = "blocked"
BUDGET = "budget"


@dataclass(frozen=True)
class ActiveGoal:
    """One executable sub-goal: a plain goal, or one step of a sequence."""

    kind: str
    embedding: np.ndarray
    target_ids: tuple[int, ...]
    goal_index: int
    step_index: int
    is_sequence_step: bool


def expand_goals(goals: list[GoalSpec]) -> list[ActiveGoal]:
    out: list[ActiveGoal] = []
    for gi, goal in enumerate(goals):
        steps = goal.steps()
        for si, (emb, ids) in enumerate(steps):
            out.append(
                ActiveGoal(
                    kind=goal.kind,
                    embedding=emb,
                    target_ids=ids,
                    goal_index=gi,
                    step_index=si,
                    is_sequence_step=goal.kind == "task_steps",
                )
            )
    return out


class EpisodeDriver:
    """Owns one episode's simulator, agent grid, memory bank, and the
    ground-truth side used for labels and success checks."""

    def __init__(
        self,
        scene: SceneSpec,
        episode: EpisodeSpec,
        *,
        noise: NoiseParams = NoiseParams(),
        seed: int = 0,
        epsilon: float = 0.25,
        sensor: SensorConfig = SensorConfig(),
        success_radius: float = SUCCESS_RADIUS,
        trace: list | None = None,
    ):
        self.scene = scene
        self.episode = episode
        self.noise = noise
        self.seed = seed
        self.success_radius = success_radius
        self.state = SimState(
            scene, episode.start_pose, sensor, episode.phantom_ids, trace=trace
        )
        self.gt_grid = rasterize_scene(scene, episode.phantom_ids)
        nx, ny = scene.cells
        self._grid_dims = (nx, ny)
        self.grid = OccupancyGrid(nx, ny, scene.resolution, (scene.bounds[0], scene.bounds[1]))
        self.bank = MemoryBank(epsilon)
        self.visited: list[FrontierQuery] = []
        self.last_seen: set[int] = set()
        self._fields: dict[int, np.ndarray] = {}

    # -- memory/map update ----------------------------------------------------

    def reset_memory(self) -> None:
        """Cold restart of the spatial memory (bank, grid, visited list)."""
        nx, ny = self._grid_dims
        self.grid = OccupancyGrid(
            nx, ny, self.scene.resolution, (self.scene.bounds[0], self.scene.bounds[1])
        )
        self.bank = MemoryBank(self.bank.epsilon)
        self.visited = []

    def on_frame(self, state: SimState, frame) -> None:
        queries = observe(frame, self.scene, self.noise, self.seed)
        ingest(queries, self.bank)
        integrate(self.grid, frame)
        self.last_seen.update(frame.visible_ids)

    def spin(self, budget: int | None = None) -> tuple[bool, set[int]]:
        """Panorama update; returns (completed, ids seen during the spin)."""
        self.last_seen = set()
        ok = self.state.spin_and_update(self.on_frame, budget=budget)
        return ok, set(self.last_seen)

    def frontiers(self) -> list[FrontierQuery]:
        return extract_frontiers(self.grid, self.visited)

    def agent_field(self) -> np.ndarray:
        pose = self.state.pose
        return distance_field(self.grid, self.grid.cell_of((pose.x, pose.y)))

    def prefill_ground_truth(self) -> None:
        """Fully pre-explored setup: exact queries for every object and a
        completely known grid (no frontiers remain)."""
        ingest([exact_query(self.scene, o.id) for o in self.scene.objects
                if o.id not in self.state.phantoms], self.bank)
        self.grid.cells[:] = self.gt_grid.cells

    # -- ground-truth side ------------------------------------------------------

    def gt_field(self, target_id: int) -> np.ndarray:
        """Geodesic meters from every free cell to standing at the target."""
        if target_id not in self._fields:
            obj = self.scene.object_by_id(target_id)
            self._fields[target_id] = object_distance_field(
                self.gt_grid, obj.box.footprint()
            )
        return self._fields[target_id]

    def gt_goal_distance(self, xy, target_ids) -> float:
        """Geodesic meters from a position to the nearest target anchor."""
        cell = self.gt_grid.cell_of(xy)
        if not self.gt_grid.in_bounds(cell):
            return math.inf
        best = math.inf
        for tid in target_ids:
            best = min(best, float(self.gt_field(tid)[cell[1], cell[0]]))
        return best

    def success_at(self, xy, target_ids) -> bool:
        return self.gt_goal_distance(xy, target_ids) <= self.success_radius + 1e-9

    def goal_shortest_length(self, xy, target_ids) -> float:
        """SPL denominator: geodesic from xy to the success region boundary."""
        d = self.gt_goal_distance(xy, target_ids)
        if not math.isfinite(d):
            return math.inf
        return max(0.0, d - self.success_radius)

    # -- navigation ---------------------------------------------------------------

    def _goto_cell(self, target_cell, budget: int | None, replans: int = 3) -> str:
        for _ in range(replans + 1):
            pose = self.state.pose
            start = self.grid.cell_of((pose.x, pose.y))
            cells = shortest_path_cells(self.grid, start, target_cell)
            if cells is None:
                return NO_PATH
            waypoints = [self.grid.center_of(c) for c in cells]
            result = self.state.follow_path(waypoints, on_frame=self.on_frame, budget=budget)
            if result.budget_exhausted:
                return BUDGET
            if result.arrived:
                return ARRIVED
        return BLOCKED

    def goto_frontier(self, frontier: FrontierQuery, budget: int | None) -> str:
        cell = self.grid.cell_of((frontier.position[0], frontier.position[1]))
        return self._goto_cell(cell, budget)

    def goto_believed_box(self, rect, budget: int | None) -> str:
        """Walk into the success radius of a believed box footprint.

        The region is computed on the agent's own grid (the believed box's
        standing cells, then BFS out to the success radius); the target is
        the region cell nearest the agent, so a correct belief yields a
        shortest-path arrival just inside the region boundary. The believed
        rect is snapped to the cell grid first: true footprints are
        grid-aligned, so snapping absorbs sub-cell box noise that would
        otherwise shift the region boundary by a cell.
        """
        res = self.grid.resolution
        snapped = np.round(np.asarray(rect, dtype=float) / res) * res
        if snapped[2] - snapped[0] < res / 2:
            mid = math.floor((rect[0] + rect[2]) / 2.0 / res) * res
            snapped[0], snapped[2] = mid, mid + res
        if snapped[3] - snapped[1] < res / 2:
            mid = math.floor((rect[1] + rect[3]) / 2.0 / res) * res
            snapped[1], snapped[3] = mid, mid + res
        field = object_distance_field(self.grid, snapped)
        ring = field <= self.success_radius + 1e-9
        agent_f = self.agent_field()
        masked = np.where(ring, agent_f, np.inf)
        if not np.isfinite(masked).any():
            return NO_PATH
        iy, ix = np.unravel_index(int(np.argmin(masked)), masked.shape)
        return self._goto_cell((int(ix), int(iy)), budget)

    def reachable_on_agent_grid(self, target_ids) -> bool:
        """Algorithm-side reachability: some cell near a target's true box
        is connected to the agent on the agent's own grid."""
        field = self.agent_field()
        for tid in target_ids:
            obj = self.scene.object_by_id(tid)
            if math.isfinite(region_distance(field, self.grid, obj.box.footprint())):
                return True
        return False

    def goto_goal_object(self, target_ids, budget: int | None) -> str:
        """Expert navigation into the true success region of a goal."""
        ring = np.zeros(self.gt_grid.cells.shape, dtype=bool)
        for tid in target_ids:
            ring |= self.gt_field(tid) <= self.success_radius + 1e-9
        agent_f = self.agent_field()
        masked = np.where(ring, agent_f, np.inf)
        if not np.isfinite(masked).any():
            return NO_PATH
        iy, ix = np.unravel_index(int(np.argmin(masked)), masked.shape)
        return self._goto_cell((int(ix), int(iy)), budget)
