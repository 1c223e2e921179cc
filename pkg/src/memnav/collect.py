"""Trajectory data collection.

Each collection episode runs the expert loop: spin in place to refresh
memory and map, pick the geodesically closest outstanding goal, then either
ground it (visible and reachable), explore a frontier (when an unvisited
frontier is meaningfully closer to the goal than anything already visited),
or end with the matching terminal status. Every moving branch emits one
supervised decision record; under the random/hybrid strategies the agent
may walk to a non-optimal frontier, but the stored label is always the
optimal choice.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .decide import EXPLORE, FEATURE_SPEC_VERSION, GROUND, assemble_candidates
from .driver import ARRIVED, BUDGET, NO_PATH, ActiveGoal, EpisodeDriver, expand_goals
from .mapping import mark_visited
from .percept import NoiseParams
from .rng import substream
from .scene import EpisodeSpec, SceneSpec
from .sim import SensorConfig

SUCCESS = "success"
UNREACHABLE = "unreachable"
INVISIBLE = "invisible"
FAILURE = "failure"

STATUSES = (SUCCESS, UNREACHABLE, INVISIBLE, FAILURE)

BETTER_CHANCE_MARGIN = 0.5  # meters a fresh frontier must beat the visited best by

OPTIMAL = "optimal"
RANDOM = "random"
HYBRID = "hybrid"


@dataclass(frozen=True)
class Strategy:
    kind: str
    p_random: float = 0.0

    def __post_init__(self):
        if self.kind not in (OPTIMAL, RANDOM, HYBRID):
            raise ValueError(f"unknown strategy {self.kind!r}")
        if not (0.0 <= self.p_random <= 1.0):
            raise ValueError("p_random must be in [0, 1]")

    @property
    def name(self) -> str:
        if self.kind == HYBRID:
            return f"hybrid:{self.p_random:g}"
        return self.kind

    @staticmethod
    def parse(text: str) -> "Strategy":
        if text.startswith("hybrid"):
            _, _, p = text.partition(":")
            return Strategy(HYBRID, float(p) if p else 0.5)
        return Strategy(text)


@dataclass
class DecisionRecord:
    """One supervised decision: the candidate snapshot, the optimal label,
    and any other equally-valid candidates excluded from the loss."""

    episode_id: str
    step: int
    goal_kind: str
    goal_embedding: np.ndarray
    candidates: list[dict]  # rows: {kind, features, meta}
    label_idx: int
    ignore: tuple[int, ...] = ()

    @property
    def features(self) -> np.ndarray:
        return np.array([c["features"] for c in self.candidates])

    def to_dict(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "step": self.step,
            "label": self.label_idx,
            "ignore": list(self.ignore),
            "goal": {"kind": self.goal_kind, "embedding": self.goal_embedding.tolist()},
            "candidates": self.candidates,
        }

    @staticmethod
    def from_dict(data: dict) -> "DecisionRecord":
        return DecisionRecord(
            episode_id=data["episode_id"],
            step=data["step"],
            goal_kind=data["goal"]["kind"],
            goal_embedding=np.array(data["goal"]["embedding"]),
            candidates=data["candidates"],
            label_idx=data["label"],
            ignore=tuple(data["ignore"]),
        )


@dataclass
class CollectionOutcome:
    decisions: list[DecisionRecord]
    status: str
    steps: int = 0
    moves: int = 0


def _candidate_rows(cs) -> list[dict]:
    rows = []
    for i, q in enumerate(cs.objects):
        rows.append(
            {
                "kind": "object",
                "features": [float(v) for v in cs.features[i]],
                "meta": {"source_id": q.source_id, "center": list(q.box.center)},
            }
        )
    for k, f in enumerate(cs.frontiers):
        rows.append(
            {
                "kind": "frontier",
                "features": [float(v) for v in cs.features[len(cs.objects) + k]],
                "meta": {"position": list(f.position), "cluster_size": f.cluster_size},
            }
        )
    return rows


def explore_episode(
    scene: SceneSpec,
    episode: EpisodeSpec,
    strategy: Strategy,
    seed: int,
    *,
    noise: NoiseParams = NoiseParams(),
    sensor: SensorConfig = SensorConfig(),
    epsilon: float = 0.25,
    episode_id: str = "ep",
    pre_explored: bool = False,
) -> CollectionOutcome:
    """Run the expert exploration loop over all of the episode's goals.

    Returns the decision records plus the terminal status: success only if
    every goal was grounded (and the agent verifiably ended inside the last
    success region); unreachable/invisible/failure mirror the loop's other
    exits. pre_explored skips exploration entirely: memory and map start
    fully populated, which yields grounding-only records.
    """
    driver = EpisodeDriver(
        scene, episode, noise=noise, seed=seed, epsilon=epsilon, sensor=sensor
    )
    if pre_explored:
        driver.prefill_ground_truth()
    rng = substream("collect-strategy", seed)
    goals = expand_goals(episode.goals)
    done = [False] * len(goals)
    records: list[DecisionRecord] = []
    budget = episode.max_steps
    status: str | None = None
    # visible_ids accumulates across the whole episode: once an object has
    # been seen it stays visible for the loop's branch tests.
    seen_ever: set[int] = (
        {o.id for o in scene.objects if o.id not in driver.state.phantoms}
        if pre_explored
        else set()
    )

    while status is None:
        unlocked = _unlocked_goals(goals, done)
        if not unlocked:
            status = SUCCESS
            break
        if not pre_explored:
            ok, seen = driver.spin(budget)
            if not ok:
                status = FAILURE
                break
            seen_ever |= seen
        pose = driver.state.pose
        gi, goal = min(
            unlocked,
            key=lambda item: (driver.gt_goal_distance((pose.x, pose.y), item[1].target_ids), item[0]),
        )

        visible_ids = [tid for tid in goal.target_ids if tid in seen_ever]
        visible = bool(visible_ids)
        reachable = driver.reachable_on_agent_grid(goal.target_ids)
        frontiers = driver.frontiers()
        unvisited = [f for f in frontiers if not f.visited]
        better = _better_chance(driver, unvisited, goal)

        if visible and reachable:
            instance = min(
                visible_ids,
                key=lambda tid: driver.gt_goal_distance((pose.x, pose.y), (tid,)),
            )
            cs = assemble_candidates(
                driver.bank, frontiers, goal.kind, goal.embedding, pose,
                driver.grid, scene.diameter,
            )
            label = _object_label(cs, instance, scene)
            if label is None:
                status = FAILURE
                break
            ignore = tuple(
                i for i, q in enumerate(cs.objects)
                if i != label and q.source_id in goal.target_ids
            )
            records.append(
                DecisionRecord(
                    episode_id=episode_id,
                    step=len(records),
                    goal_kind=goal.kind,
                    goal_embedding=goal.embedding.copy(),
                    candidates=_candidate_rows(cs),
                    label_idx=label,
                    ignore=ignore,
                )
            )
            outcome = driver.goto_goal_object(goal.target_ids, budget)
            if outcome != ARRIVED or not driver.success_at(
                (driver.state.pose.x, driver.state.pose.y), goal.target_ids
            ):
                status = FAILURE
                break
            done[gi] = True
            continue

        if better:
            cs = assemble_candidates(
                driver.bank, frontiers, goal.kind, goal.embedding, pose,
                driver.grid, scene.diameter,
            )
            optimal_k = _optimal_frontier(driver, cs.frontiers, goal)
            records.append(
                DecisionRecord(
                    episode_id=episode_id,
                    step=len(records),
                    goal_kind=goal.kind,
                    goal_embedding=goal.embedding.copy(),
                    candidates=_candidate_rows(cs),
                    label_idx=len(cs.objects) + optimal_k,
                )
            )
            chosen_k = _choose_frontier(strategy, rng, optimal_k, len(cs.frontiers))
            chosen = cs.frontiers[chosen_k]
            outcome = driver.goto_frontier(chosen, budget)
            driver.visited.append(mark_visited(chosen))
            if outcome == BUDGET:
                status = FAILURE
            continue

        if visible and not reachable:
            status = UNREACHABLE
        elif reachable and not visible:
            status = INVISIBLE
        else:
            status = FAILURE

    return CollectionOutcome(
        decisions=records,
        status=status,
        steps=driver.state.step_count,
        moves=driver.state.moves,
    )


def _unlocked_goals(goals: list[ActiveGoal], done: list[bool]):
    """Outstanding goals; a sequence step unlocks once its predecessor is done."""
    unlocked = []
    for i, g in enumerate(goals):
        if done[i]:
            continue
        if g.is_sequence_step and g.step_index > 0:
            prev = next(
                j for j, h in enumerate(goals)
                if h.goal_index == g.goal_index and h.step_index == g.step_index - 1
            )
            if not done[prev]:
                continue
        unlocked.append((i, g))
    return unlocked


def _better_chance(driver: EpisodeDriver, unvisited, goal: ActiveGoal) -> bool:
    """True when some fresh frontier is meaningfully closer to the goal than
    every frontier already visited."""
    if not unvisited:
        return False
    best_visited = math.inf
    for v in driver.visited:
        best_visited = min(
            best_visited,
            driver.gt_goal_distance((v.position[0], v.position[1]), goal.target_ids),
        )
    for f in unvisited:
        d = driver.gt_goal_distance((f.position[0], f.position[1]), goal.target_ids)
        if d < best_visited - BETTER_CHANCE_MARGIN:
            return True
    return False


def _optimal_frontier(driver: EpisodeDriver, frontiers, goal: ActiveGoal) -> int:
    dists = [
        driver.gt_goal_distance((f.position[0], f.position[1]), goal.target_ids)
        for f in frontiers
    ]
    return int(np.argmin(dists))


def _choose_frontier(strategy: Strategy, rng, optimal_k: int, n: int) -> int:
    if strategy.kind == OPTIMAL:
        return optimal_k
    if strategy.kind == RANDOM:
        return int(rng.integers(0, n))
    if rng.random() < strategy.p_random:
        return int(rng.integers(0, n))
    return optimal_k


def _object_label(cs, instance_id: int, scene: SceneSpec) -> int | None:
    """Candidate index of the bank entry for a ground-truth instance; falls
    back to the global whose box center is nearest the true center."""
    for i, q in enumerate(cs.objects):
        if q.source_id == instance_id:
            return i
    if not cs.objects:
        return None
    true_c = np.asarray(scene.object_by_id(instance_id).box.center)
    d = [float(np.linalg.norm(np.asarray(q.box.center) - true_c)) for q in cs.objects]
    return int(np.argmin(d))


# -- dataset writing -----------------------------------------------------------


RECORDS_PER_SHARD = 2000


def _collect_task(task):
    """Module-level episode worker so process pools can pickle it."""
    idx, bi, ei, scene, episode, strategy, pre, seed, noise, sensor, epsilon = task
    outcome = explore_episode(
        scene,
        episode,
        strategy,
        seed=idx * 1_000_003 + seed,
        noise=noise,
        sensor=sensor,
        epsilon=epsilon,
        episode_id=f"scene{bi:04d}/ep{ei:03d}",
        pre_explored=pre,
    )
    return idx, strategy, outcome


def collect_dataset(
    bundles: list[tuple[SceneSpec, list[EpisodeSpec]]],
    mix: list[tuple[Strategy, float]],
    seed: int,
    *,
    noise: NoiseParams = NoiseParams(),
    sensor: SensorConfig = SensorConfig(),
    epsilon: float = 0.25,
    pre_explored_frac: float = 0.0,
    jobs: int = 1,
) -> tuple[list[DecisionRecord], dict]:
    """Run every episode under a strategy drawn from the weighted mix.

    Returns (records, manifest). Episode order, strategy assignment, and
    record contents are all deterministic under the seed; workers only
    parallelize independent episodes.
    """
    weights = np.array([w for _, w in mix], dtype=float)
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("strategy mix weights must sum to 1")
    tasks = []
    idx = 0
    for bi, (scene, episodes) in enumerate(bundles):
        for ei, episode in enumerate(episodes):
            draw = substream("mix", seed, idx)
            strategy = mix[int(draw.choice(len(mix), p=weights))][0]
            pre = bool(draw.random() < pre_explored_frac)
            tasks.append(
                (idx, bi, ei, scene, episode, strategy, pre, seed, noise, sensor, epsilon)
            )
            idx += 1

    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_collect_task, tasks, chunksize=4))
    else:
        results = [_collect_task(t) for t in tasks]
    results.sort(key=lambda r: r[0])

    records: list[DecisionRecord] = []
    status_counts = {s: 0 for s in STATUSES}
    strategy_counts: dict[str, int] = {}
    for _, strategy, outcome in results:
        records.extend(outcome.decisions)
        status_counts[outcome.status] += 1
        strategy_counts[strategy.name] = strategy_counts.get(strategy.name, 0) + 1
    manifest = {
        "format_version": 1,
        "feature_spec_version": FEATURE_SPEC_VERSION,
        "records": len(records),
        "episodes": len(tasks),
        "status_counts": status_counts,
        "strategy_counts": dict(sorted(strategy_counts.items())),
    }
    return records, manifest


def write_dataset(records: list[DecisionRecord], manifest: dict, out_dir) -> None:
    import os

    os.makedirs(out_dir, exist_ok=True)
    shards = []
    for si in range(0, max(1, math.ceil(len(records) / RECORDS_PER_SHARD))):
        chunk = records[si * RECORDS_PER_SHARD:(si + 1) * RECORDS_PER_SHARD]
        name = f"records_{si:04d}.jsonl"
        shards.append({"file": name, "records": len(chunk)})
        with open(os.path.join(out_dir, name), "w") as fh:
            for rec in chunk:
                fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
    manifest = dict(manifest)
    manifest["shards"] = shards
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_dataset(data_dir) -> tuple[list[DecisionRecord], dict]:
    import os

    with open(os.path.join(data_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    if manifest.get("feature_spec_version") != FEATURE_SPEC_VERSION:
        raise ValueError(
            f"dataset feature spec {manifest.get('feature_spec_version')} does not "
            f"match this build ({FEATURE_SPEC_VERSION})"
        )
    records = []
    for shard in manifest["shards"]:
        with open(os.path.join(data_dir, shard["file"])) as fh:
            for line in fh:
                records.append(DecisionRecord.from_dict(json.loads(line)))
    return records, manifest
