"""Procedural synthetic scenes, goals, and episode specs.

Scenes are 2.5D and grid-aligned: the world is a rectangle of 0.25 m cells,
walls are one-cell-thick axis-aligned runs (with door gaps), and objects are
axis-aligned boxes whose footprints cover whole cells. Everything is a pure
function of (params, seed), so identical inputs reproduce identical scenes
byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .geometry import Box3
from .rng import substream

RESOLUTION = 0.25  # meters per cell; also the simulator step length

GOAL_KINDS = ("category", "description", "image", "task_steps")

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


class GenerationError(RuntimeError):
    """Scene or episode generation could not satisfy its constraints."""


def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / n


@dataclass(frozen=True)
class WallSegment:
    """Centerline of a one-cell-thick wall run; endpoints at cell centers.

    A transparent segment (a window) blocks movement and depth rays but not
    object visibility.
    """

    x1: float
    y1: float
    x2: float
    y2: float
    transparent: bool = False

    def rect(self, thickness: float = RESOLUTION) -> np.ndarray:
        h = thickness / 2.0
        return np.array(
            [
                min(self.x1, self.x2) - h,
                min(self.y1, self.y2) - h,
                max(self.x1, self.x2) + h,
                max(self.y1, self.y2) + h,
            ]
        )


@dataclass
class GroundTruthObject:
    id: int
    box: Box3
    category: str
    category_embedding: np.ndarray
    instance_embedding: np.ndarray

    def __post_init__(self):
        for name, emb in (
            ("category_embedding", self.category_embedding),
            ("instance_embedding", self.instance_embedding),
        ):
            if abs(float(np.linalg.norm(emb)) - 1.0) > 1e-6:
                raise ValueError(f"{name} of object {self.id} is not unit norm")


@dataclass
class SceneSpec:
    bounds: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    walls: list[WallSegment]
    objects: list[GroundTruthObject]
    seed: int
    resolution: float = RESOLUTION
    categories: dict[str, np.ndarray] = field(default_factory=dict)
    rooms: list[tuple[int, int, int, int]] = field(default_factory=list)  # cell rects

    @property
    def cells(self) -> tuple[int, int]:
        """(nx, ny) cell counts covering the bounds."""
        nx = int(round((self.bounds[2] - self.bounds[0]) / self.resolution))
        ny = int(round((self.bounds[3] - self.bounds[1]) / self.resolution))
        return nx, ny

    @property
    def diameter(self) -> float:
        return math.hypot(self.bounds[2] - self.bounds[0], self.bounds[3] - self.bounds[1])

    def object_by_id(self, object_id: int) -> GroundTruthObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(f"no object with id {object_id}")

    def wall_rects(self, include_transparent: bool = True) -> np.ndarray:
        segs = [w for w in self.walls if include_transparent or not w.transparent]
        if not segs:
            return np.zeros((0, 4))
        return np.stack([w.rect(self.resolution) for w in segs])

    def object_rects(self, skip_ids: frozenset[int] = frozenset()) -> np.ndarray:
        rects = [o.box.footprint() for o in self.objects if o.id not in skip_ids]
        if not rects:
            return np.zeros((0, 4))
        return np.stack(rects)

    def occupied_mask(self, phantom_ids: frozenset[int] = frozenset()) -> np.ndarray:
        """Boolean (ny, nx) array: True where a wall or object covers the cell."""
        nx, ny = self.cells
        mask = np.zeros((ny, nx), dtype=bool)
        res = self.resolution
        for rect in list(self.wall_rects()) + list(self.object_rects(skip_ids=phantom_ids)):
            ix0 = max(0, int(math.floor(rect[0] / res + 1e-9)))
            iy0 = max(0, int(math.floor(rect[1] / res + 1e-9)))
            ix1 = min(nx, int(math.ceil(rect[2] / res - 1e-9)))
            iy1 = min(ny, int(math.ceil(rect[3] / res - 1e-9)))
            mask[iy0:iy1, ix0:ix1] = True
        return mask

    def free_mask(self, phantom_ids: frozenset[int] = frozenset()) -> np.ndarray:
        return ~self.occupied_mask(phantom_ids=phantom_ids)


@dataclass
class GoalSpec:
    """A navigation goal.

    For single-step kinds, ``embedding`` is (C,) and ``target_ids`` the set of
    object ids that satisfy the goal. For ``task_steps``, ``embedding`` is
    (S, C) and ``target_ids`` a tuple of per-step id tuples.
    """

    kind: str
    embedding: np.ndarray
    target_ids: tuple

    def __post_init__(self):
        if self.kind not in GOAL_KINDS:
            raise ValueError(f"unknown goal kind {self.kind!r}")
        if self.kind == "task_steps":
            if self.embedding.ndim != 2 or len(self.target_ids) != self.embedding.shape[0]:
                raise ValueError("task_steps goal needs one embedding per step")
            if any(len(ids) == 0 for ids in self.target_ids):
                raise ValueError("every step needs at least one target id")
        else:
            if self.embedding.ndim != 1:
                raise ValueError("single-step goal embedding must be 1-D")
            if len(self.target_ids) == 0:
                raise ValueError("goal needs at least one target id")

    def steps(self) -> list[tuple[np.ndarray, tuple[int, ...]]]:
        """Expand to an ordered list of (embedding, target_ids) sub-goals."""
        if self.kind == "task_steps":
            return [(self.embedding[i], tuple(self.target_ids[i])) for i in range(len(self.target_ids))]
        return [(self.embedding, tuple(self.target_ids))]


@dataclass
class EpisodeSpec:
    start_pose: tuple[float, float, float]  # x, y, heading
    goals: list[GoalSpec]
    max_steps: int = 2000
    phantom_ids: tuple[int, ...] = ()  # objects targeted but physically absent

    def __post_init__(self):
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")


@dataclass(frozen=True)
class SceneGenParams:
    width_cells: tuple[int, int] = (40, 56)
    height_cells: tuple[int, int] = (40, 56)
    rooms: tuple[int, int] = (2, 4)
    objects: tuple[int, int] = (8, 14)
    categories: tuple[str, ...] = (
        "chair", "table", "sofa", "bed", "lamp", "plant",
        "fridge", "sink", "oven", "shelf", "desk", "monitor",
    )
    embedding_dim: int = 32
    category_groups: int = 0       # 0: independent random unit embeddings
    group_weight: float = 0.7      # within-group cosine when grouped
    theme_prob: float = 0.85       # chance an object follows its room's group
    door_cells: int = 2
    min_room_cells: int = 6
    object_cells: tuple[int, int] = (1, 3)
    object_height: tuple[float, float] = (0.4, 1.8)
    wall_clearance_cells: int = 1
    object_separation_cells: int = 2

    def validate(self):
        if len(self.categories) == 0:
            raise ValueError("at least one category is required")
        if min(self.width_cells) < 8 or min(self.height_cells) < 8:
            raise ValueError("scene extent too small")
        if self.embedding_dim < 2:
            raise ValueError("embedding_dim must be >= 2")
        if self.objects[0] < 0 or self.objects[1] < self.objects[0]:
            raise ValueError("bad object count range")
        if self.rooms[0] < 1 or self.rooms[1] < self.rooms[0]:
            raise ValueError("bad room count range")


def _category_embeddings(params: SceneGenParams, rng: np.random.Generator):
    """Draw one unit embedding per category, optionally clustered into groups."""
    embs: dict[str, np.ndarray] = {}
    groups: dict[str, int] = {}
    c = params.embedding_dim
    if params.category_groups > 0:
        g = params.category_groups
        centers = [_unit(rng.standard_normal(c)) for _ in range(g)]
        w = math.sqrt(params.group_weight)
        v = math.sqrt(1.0 - params.group_weight)
        for i, name in enumerate(params.categories):
            gi = i % g
            offset = _unit(rng.standard_normal(c))
            embs[name] = _unit(w * centers[gi] + v * offset)
            groups[name] = gi
    else:
        for name in params.categories:
            embs[name] = _unit(rng.standard_normal(c))
            groups[name] = 0
    return embs, groups


def _split_rooms(rng: np.random.Generator, nx: int, ny: int, params: SceneGenParams):
    """Recursively split the interior into rooms; returns (wall_mask, room rects).

    Room rects are interior cell rectangles (ix0, iy0, ix1, iy1), exclusive of
    their bounding walls. Every split wall gets a door gap, so the free space
    stays connected by construction.
    """
    wall = np.zeros((ny, nx), dtype=bool)
    wall[0, :] = wall[-1, :] = True
    wall[:, 0] = wall[:, -1] = True

    rooms = [(1, 1, nx - 1, ny - 1)]
    n_rooms = int(rng.integers(params.rooms[0], params.rooms[1] + 1))
    min_side = params.min_room_cells
    while len(rooms) < n_rooms:
        # Split the largest splittable room.
        order = sorted(
            range(len(rooms)),
            key=lambda i: -(rooms[i][2] - rooms[i][0]) * (rooms[i][3] - rooms[i][1]),
        )
        chosen = None
        for i in order:
            x0, y0, x1, y1 = rooms[i]
            if (x1 - x0 >= 2 * min_side + 1) or (y1 - y0 >= 2 * min_side + 1):
                chosen = i
                break
        if chosen is None:
            break
        x0, y0, x1, y1 = rooms.pop(chosen)
        vertical = (x1 - x0) >= (y1 - y0)
        if vertical and x1 - x0 < 2 * min_side + 1:
            vertical = False
        elif not vertical and y1 - y0 < 2 * min_side + 1:
            vertical = True
        if vertical:
            sx = int(rng.integers(x0 + min_side, x1 - min_side))
            gap0 = int(rng.integers(y0, y1 - params.door_cells + 1))
            wall[y0:y1, sx] = True
            wall[gap0:gap0 + params.door_cells, sx] = False
            rooms.extend([(x0, y0, sx, y1), (sx + 1, y0, x1, y1)])
        else:
            sy = int(rng.integers(y0 + min_side, y1 - min_side))
            gap0 = int(rng.integers(x0, x1 - params.door_cells + 1))
            wall[sy, x0:x1] = True
            wall[sy, gap0:gap0 + params.door_cells] = False
            rooms.extend([(x0, y0, x1, sy), (x0, sy + 1, x1, y1)])
    return wall, rooms


def _wall_mask_to_segments(wall: np.ndarray, res: float) -> list[WallSegment]:
    """Compress a wall cell mask into maximal horizontal/vertical centerline runs."""
    ny, nx = wall.shape
    covered = np.zeros_like(wall)
    segments: list[WallSegment] = []

    def center(ix, iy):
        return ((ix + 0.5) * res, (iy + 0.5) * res)

    for iy in range(ny):
        ix = 0
        while ix < nx:
            if wall[iy, ix]:
                j = ix
                while j + 1 < nx and wall[iy, j + 1]:
                    j += 1
                if j > ix:
                    x1, y1 = center(ix, iy)
                    x2, _ = center(j, iy)
                    segments.append(WallSegment(x1, y1, x2, y1))
                    covered[iy, ix:j + 1] = True
                ix = j + 1
            else:
                ix += 1
    remaining = wall & ~covered
    for ix in range(nx):
        iy = 0
        while iy < ny:
            if remaining[iy, ix]:
                j = iy
                while j + 1 < ny and remaining[j + 1, ix]:
                    j += 1
                x1, y1 = center(ix, iy)
                _, y2 = center(ix, j)
                segments.append(WallSegment(x1, y1, x1, y2))
                iy = j + 1
            else:
                iy += 1
    return segments


def _connected(free: np.ndarray) -> bool:
    if not free.any():
        return False
    labels, count = ndimage.label(free, structure=FOUR_CONNECTED)
    return count == 1


def generate_scene(params: SceneGenParams, seed: int) -> SceneSpec:
    """Generate a scene satisfying all invariants (connected free space,
    objects clear of walls and of each other, deterministic under seed)."""
    params.validate()
    rng = substream("scene", seed)
    embs, groups = _category_embeddings(params, rng)

    res = RESOLUTION
    for _attempt in range(100):
        nx = int(rng.integers(params.width_cells[0], params.width_cells[1] + 1))
        ny = int(rng.integers(params.height_cells[0], params.height_cells[1] + 1))
        wall, rooms = _split_rooms(rng, nx, ny, params)

        n_objects = int(rng.integers(params.objects[0], params.objects[1] + 1))
        occupied = wall.copy()
        blocked_near_wall = ndimage.binary_dilation(
            wall, iterations=params.wall_clearance_cells
        )
        placements = []  # (ix, iy, w, h, room_index)
        failed = False
        for _ in range(n_objects):
            placed = False
            for _try in range(200):
                w = int(rng.integers(params.object_cells[0], params.object_cells[1] + 1))
                h = int(rng.integers(params.object_cells[0], params.object_cells[1] + 1))
                ix = int(rng.integers(1, nx - 1 - w + 1))
                iy = int(rng.integers(1, ny - 1 - h + 1))
                if blocked_near_wall[iy:iy + h, ix:ix + w].any():
                    continue
                s = params.object_separation_cells
                y0, y1 = max(0, iy - s), min(ny, iy + h + s)
                x0, x1 = max(0, ix - s), min(nx, ix + w + s)
                # Walls inside the separation window are fine (clearance is
                # checked above); only other objects force a re-draw.
                if (occupied[y0:y1, x0:x1] & ~wall[y0:y1, x0:x1]).any():
                    continue
                room_idx = next(
                    (k for k, (rx0, ry0, rx1, ry1) in enumerate(rooms)
                     if rx0 <= ix and ix + w <= rx1 and ry0 <= iy and iy + h <= ry1),
                    0,
                )
                occupied[iy:iy + h, ix:ix + w] = True
                placements.append((ix, iy, w, h, room_idx))
                placed = True
                break
            if not placed:
                failed = True
                break
        if failed or not _connected(~occupied):
            continue

        n_groups = max(1, params.category_groups)
        room_group = {k: int(rng.integers(0, n_groups)) for k in range(len(rooms))}
        by_group: dict[int, list[str]] = {}
        for name, gi in groups.items():
            by_group.setdefault(gi, []).append(name)

        objects = []
        for oid, (ix, iy, w, h, room_idx) in enumerate(placements):
            if params.category_groups > 0 and rng.random() < params.theme_prob:
                pool = by_group[room_group[room_idx]]
            else:
                pool = list(params.categories)
            category = pool[int(rng.integers(0, len(pool)))]
            height = float(rng.uniform(*params.object_height))
            center = ((ix + w / 2.0) * res, (iy + h / 2.0) * res, height / 2.0)
            size = (w * res, h * res, height)
            inst = _unit(rng.standard_normal(params.embedding_dim))
            objects.append(
                GroundTruthObject(
                    id=oid,
                    box=Box3(center, size),
                    category=category,
                    category_embedding=embs[category],
                    instance_embedding=inst,
                )
            )
        scene = SceneSpec(
            bounds=(0.0, 0.0, nx * res, ny * res),
            walls=_wall_mask_to_segments(wall, res),
            objects=objects,
            seed=seed,
            resolution=res,
            categories={k: v for k, v in embs.items()},
            rooms=rooms,
        )
        return scene
    raise GenerationError(f"could not generate a valid scene for seed {seed}")


def make_goal(
    scene: SceneSpec,
    kind: str,
    target_id: int,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> GoalSpec:
    """Build a goal for one target object.

    category: the target's category embedding, matching every instance of the
    category. description: category embedding plus Gaussian noise,
    renormalized. image: the target's instance embedding, matching only it.
    """
    target = scene.object_by_id(target_id)
    same_category = tuple(o.id for o in scene.objects if o.category == target.category)
    if kind == "category":
        return GoalSpec("category", target.category_embedding.copy(), same_category)
    if kind == "description":
        rng = substream("goal", seed, target_id, kind)
        emb = target.category_embedding + noise_sigma * rng.standard_normal(
            target.category_embedding.shape
        )
        return GoalSpec("description", _unit(emb), same_category)
    if kind == "image":
        return GoalSpec("image", target.instance_embedding.copy(), (target_id,))
    raise ValueError(f"make_goal does not build {kind!r} goals")


def make_task_goal(
    scene: SceneSpec,
    step_target_ids: list[int],
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> GoalSpec:
    """Ordered multi-step goal; each step uses its target's category embedding."""
    embs = []
    ids = []
    for si, tid in enumerate(step_target_ids):
        target = scene.object_by_id(tid)
        emb = target.category_embedding
        if noise_sigma > 0:
            rng = substream("goal", seed, tid, "task_steps", si)
            emb = _unit(emb + noise_sigma * rng.standard_normal(emb.shape))
        embs.append(emb.copy())
        ids.append(tuple(o.id for o in scene.objects if o.category == target.category))
    return GoalSpec("task_steps", np.stack(embs), tuple(ids))


def generate_episodes(
    scene: SceneSpec,
    count: int,
    goals_per_episode: int,
    seed: int,
    *,
    goal_kinds: tuple[str, ...] = ("category",),
    description_sigma: float = 0.1,
    sequential: bool = False,
    revisit_heavy: bool = False,
    max_steps: int = 2000,
    min_start_goal_dist: float = 2.0,
) -> list[EpisodeSpec]:
    """Sample episodes with reachable, non-trivial goals.

    revisit_heavy places later goals near the shortest route to the first
    goal, so a lifelong agent will have observed them during the first
    sub-episode.
    """
    from .mapping import rasterize_scene
    from .plan import object_anchor_cell, object_distance_field

    if goals_per_episode > len(scene.objects):
        raise GenerationError("scene has fewer objects than goals_per_episode")
    for k in goal_kinds:
        if k not in ("category", "description", "image"):
            raise ValueError(f"unsupported goal kind for sampling: {k!r}")

    rng = substream("episodes", scene.seed, seed)
    grid = rasterize_scene(scene)
    free = grid.free_cells()
    if free.shape[0] == 0:
        raise GenerationError("scene has no free start cell")
    anchors = {o.id: object_anchor_cell(grid, o) for o in scene.objects}
    fields = {o.id: object_distance_field(grid, o.box.footprint()) for o in scene.objects}

    episodes: list[EpisodeSpec] = []
    for ep_index in range(count):
        for _attempt in range(100):
            start = free[int(rng.integers(0, free.shape[0]))]
            targets = _pick_targets(
                scene, rng, goals_per_episode, start, fields, anchors, revisit_heavy, grid
            )
            if targets is None:
                continue
            heading = float(int(rng.integers(0, 12)) * math.pi / 6.0)
            pose = (
                float((start[0] + 0.5) * scene.resolution),
                float((start[1] + 0.5) * scene.resolution),
                heading,
            )
            if sequential:
                goals = [make_task_goal(scene, list(targets), noise_sigma=0.0, seed=seed)]
            else:
                goals = []
                used_categories: set[str] = set()
                ok = True
                for gi, tid in enumerate(targets):
                    kind = goal_kinds[int(rng.integers(0, len(goal_kinds)))]
                    cat = scene.object_by_id(tid).category
                    if kind in ("category", "description"):
                        if cat in used_categories:
                            ok = False
                            break
                        used_categories.add(cat)
                    sigma = description_sigma if kind == "description" else 0.0
                    goals.append(make_goal(scene, kind, tid, sigma, seed=seed * 1000 + ep_index * 10 + gi))
                if not ok:
                    continue
            # Non-degenerate start: every satisfying instance of every goal
            # (not just the sampled primary target) stays well out of the
            # success radius, so the shortest length is strictly positive.
            dist_ok = True
            for goal in goals:
                for _emb, ids in goal.steps():
                    d = min(fields[t][start[1], start[0]] for t in ids)  # meters
                    if not np.isfinite(d) or d < min_start_goal_dist:
                        dist_ok = False
                        break
                if not dist_ok:
                    break
            if not dist_ok:
                continue
            episodes.append(EpisodeSpec(start_pose=pose, goals=goals, max_steps=max_steps))
            break
        else:
            raise GenerationError(
                f"could not sample episode {ep_index} after 100 attempts"
            )
    return episodes


def _pick_targets(scene, rng, n, start, fields, anchors, revisit_heavy, grid):
    """Choose n distinct target object ids; None if impossible this attempt."""
    ids = [o.id for o in scene.objects]
    if not revisit_heavy or n == 1:
        if len(ids) < n:
            return None
        perm = rng.permutation(len(ids))
        return [ids[int(i)] for i in perm[:n]]

    # First goal: among the three geodesically farthest objects from start.
    reach = [(fields[i][start[1], start[0]], i) for i in ids]
    reach = [(d, i) for d, i in reach if np.isfinite(d)]
    if len(reach) < n:
        return None
    reach.sort(key=lambda t: (-t[0], t[1]))
    first = reach[int(rng.integers(0, min(3, len(reach))))][1]

    from .plan import shortest_path_cells

    path = shortest_path_cells(grid, (int(start[0]), int(start[1])), anchors[first])
    if path is None:
        return None
    # Later goals come from the first half of the route: the agent passes
    # (and observes) them during the first sub-episode but ends far away,
    # so only a persistent memory makes revisiting cheap.
    half = path[: max(2, len(path) // 2)]
    path_xy = np.array(
        [[(c[0] + 0.5) * scene.resolution, (c[1] + 0.5) * scene.resolution] for c in half]
    )
    by_category: dict[str, list[int]] = {}
    for o in scene.objects:
        by_category.setdefault(o.category, []).append(o.id)

    def category_separation(cat_a: str, cat_b: str) -> float:
        # Nearest approach between any instances of the two categories;
        # category goals accept any instance, so separation must hold for
        # all of them, not just the sampled primaries.
        best = math.inf
        for a in by_category[cat_a]:
            for b in by_category[cat_b]:
                best = min(best, float(fields[a][anchors[b][1], anchors[b][0]]))
        return best

    first_cat = scene.object_by_id(first).category
    nearby = []
    for o in scene.objects:
        if o.id == first or o.category == first_cat:
            continue
        c = np.array(o.box.center[:2])
        d = np.min(np.hypot(path_xy[:, 0] - c[0], path_xy[:, 1] - c[1]))
        if d <= 2.5 and category_separation(o.category, first_cat) >= 3.5:
            nearby.append(o.id)
    pool = nearby if len(nearby) >= n - 1 else [
        i for i in ids if i != first and scene.object_by_id(i).category != first_cat
    ]
    if len(pool) < n - 1:
        return None
    perm = rng.permutation(len(pool))
    rest: list[int] = []
    for pi in perm:
        cand = pool[int(pi)]
        cand_cat = scene.object_by_id(cand).category
        if any(scene.object_by_id(r).category == cand_cat for r in rest):
            continue
        # pairwise separation keeps later sub-episodes non-trivial
        if all(
            category_separation(cand_cat, scene.object_by_id(r).category) >= 3.5
            for r in rest
        ):
            rest.append(cand)
        if len(rest) == n - 1:
            break
    if len(rest) < n - 1:
        return None
    return [first] + rest


def assemble_scene(
    width_cells: int,
    height_cells: int,
    *,
    extra_walls: list[WallSegment] = (),
    objects: list[tuple[int, tuple[float, float], tuple[int, int], str]] = (),
    categories: tuple[str, ...] = ("chair", "table", "plant"),
    embedding_dim: int = 32,
    seed: int = 0,
    object_height: float = 1.0,
) -> SceneSpec:
    """Hand-build a scene: boundary walls plus explicit interior geometry.

    objects rows are (id, footprint center in meters, footprint cells (w, h),
    category). Used by crafted test suites; embeddings are still seeded.
    """
    res = RESOLUTION
    rng = substream("scene", seed)
    params = SceneGenParams(categories=tuple(categories), embedding_dim=embedding_dim)
    embs, _ = _category_embeddings(params, rng)

    wall = np.zeros((height_cells, width_cells), dtype=bool)
    wall[0, :] = wall[-1, :] = True
    wall[:, 0] = wall[:, -1] = True
    segments = _wall_mask_to_segments(wall, res) + list(extra_walls)

    objs = []
    for oid, (cx, cy), (w, h), category in objects:
        # Snap so the w x h cell footprint covers whole cells; the world
        # model (rasterization, collision, masks) assumes this alignment.
        ix0 = round(cx / res - w / 2.0)
        iy0 = round(cy / res - h / 2.0)
        center = ((ix0 + w / 2.0) * res, (iy0 + h / 2.0) * res, object_height / 2.0)
        size = (w * res, h * res, object_height)
        inst = _unit(rng.standard_normal(embedding_dim))
        objs.append(
            GroundTruthObject(
                id=oid,
                box=Box3(center, size),
                category=category,
                category_embedding=embs[category],
                instance_embedding=inst,
            )
        )
    return SceneSpec(
        bounds=(0.0, 0.0, width_cells * res, height_cells * res),
        walls=segments,
        objects=objs,
        seed=seed,
        resolution=res,
        categories=embs,
        rooms=[(1, 1, width_cells - 1, height_cells - 1)],
    )
