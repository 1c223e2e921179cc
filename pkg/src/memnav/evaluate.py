"""Episode evaluation and navigation metrics.

run_episode drives a policy through the perception-action loop, one
sub-episode per goal (or sequence step), and measures per-sub-episode
success, agent path length, and ground-truth shortest length. SR and SPL
aggregate over sub-episodes; s-SR / t-SR cover ordered sequence tasks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .decide import (
    EXPLORE,
    GROUND,
    TERMINATE,
    Decision,
    ScorerModel,
    assemble_candidates,
    decide_step,
    heuristic_nearest_frontier,
)
from .driver import ARRIVED, BUDGET, EpisodeDriver, expand_goals
from .mapping import mark_visited
from .percept import NoiseParams
from .rng import substream
from .scene import EpisodeSpec, SceneSpec
from .sim import STEP_LENGTH, SensorConfig


@dataclass(frozen=True)
class EvalOptions:
    noise: NoiseParams = NoiseParams()
    sensor: SensorConfig = SensorConfig()
    epsilon: float = 0.25
    decision_budget: int = 12
    success_radius: float = 1.0
    min_score: float = 0.0
    reset_memory_per_goal: bool = False
    seed: int = 0


@dataclass
class GoalResult:
    """One sub-episode: a single goal or one sequence step."""

    success: bool
    path_length: float      # meters of executed forward motion
    shortest_length: float  # ground-truth geodesic to the success region
    steps: int
    decisions_used: int
    goal_kind: str
    ended_by: str           # ground | terminate | budget | decisions | skipped
    attempted: bool = True


@dataclass
class EpisodeResult:
    success: bool
    path_length: float
    shortest_length: float
    steps: int
    per_goal: list[GoalResult] = field(default_factory=list)
    decisions: list[list[tuple[str, int]]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "path_length": self.path_length,
            "shortest_length": self.shortest_length,
            "steps": self.steps,
            "per_goal": [
                {
                    "success": g.success,
                    "path_length": g.path_length,
                    "shortest_length": g.shortest_length,
                    "steps": g.steps,
                    "decisions_used": g.decisions_used,
                    "goal_kind": g.goal_kind,
                    "ended_by": g.ended_by,
                    "attempted": g.attempted,
                }
                for g in self.per_goal
            ],
            "decisions": [[list(d) for d in sub] for sub in self.decisions],
        }


# -- policies -------------------------------------------------------------------


class LearnedPolicy:
    name = "learned"

    def __init__(self, model: ScorerModel):
        self.model = model

    def decide(self, candidates) -> Decision:
        return decide_step(candidates, self.model)


class HeuristicPolicy:
    """Nearest-frontier exploration with a fixed grounding threshold."""

    name = "heuristic"

    def __init__(self, tau_ground: float = 0.85):
        self.tau_ground = tau_ground

    def decide(self, candidates) -> Decision:
        return heuristic_nearest_frontier(candidates, self.tau_ground)


class ScriptedPolicy:
    """Replays a stored decision sequence (kind, index) pairs per sub-episode."""

    name = "scripted"

    def __init__(self, decisions: list[list[tuple[str, int]]]):
        self._subs = [list(sub) for sub in decisions]
        self._sub = -1

    def start_sub_episode(self):
        self._sub += 1

    def decide(self, candidates) -> Decision:
        if self._sub >= len(self._subs) or not self._subs[self._sub]:
            return Decision(TERMINATE, -1, np.zeros(len(candidates)))
        kind, index = self._subs[self._sub].pop(0)
        return Decision(kind, int(index), np.zeros(len(candidates)))


# -- episode runner ---------------------------------------------------------------


def run_episode(
    scene: SceneSpec,
    episode: EpisodeSpec,
    policy,
    options: EvalOptions = EvalOptions(),
    episode_seed: int = 0,
    trace: list | None = None,
    driver_sink: list | None = None,
) -> EpisodeResult:
    """Drive the policy through every goal of one episode.

    Sub-episode loop: spin to refresh memory and map, assemble candidates,
    let the policy choose; ground ends the sub-episode at the chosen
    object, explore walks to the chosen frontier and repeats. Success is
    positional: the sub-episode succeeds iff the agent ends inside the
    goal's ground-truth success region. Memory persists across goals unless
    reset_memory_per_goal is set. Sequence steps after a failed step are
    skipped (and count as failures).
    """
    driver = EpisodeDriver(
        scene,
        episode,
        noise=options.noise,
        seed=episode_seed,
        epsilon=options.epsilon,
        sensor=options.sensor,
        success_radius=options.success_radius,
        trace=trace,
    )
    if driver_sink is not None:
        driver_sink.append(driver)
    goals = expand_goals(episode.goals)
    budget = episode.max_steps
    failed_sequences: set[int] = set()
    per_goal: list[GoalResult] = []
    all_decisions: list[list[tuple[str, int]]] = []

    for gi, goal in enumerate(goals):
        if goal.is_sequence_step and goal.goal_index in failed_sequences:
            per_goal.append(
                GoalResult(
                    success=False, path_length=0.0, shortest_length=STEP_LENGTH,
                    steps=0, decisions_used=0, goal_kind=goal.kind,
                    ended_by="skipped", attempted=False,
                )
            )
            all_decisions.append([])
            continue
        if options.reset_memory_per_goal and gi > 0:
            driver.reset_memory()
        if hasattr(policy, "start_sub_episode"):
            policy.start_sub_episode()

        pose = driver.state.pose
        shortest = driver.goal_shortest_length((pose.x, pose.y), goal.target_ids)
        start_moves = driver.state.moves
        start_steps = driver.state.step_count
        decisions: list[tuple[str, int]] = []
        ended_by = "decisions"

        for _ in range(options.decision_budget):
            ok, _seen = driver.spin(budget)
            if not ok:
                ended_by = "budget"
                break
            pose = driver.state.pose
            cs = assemble_candidates(
                driver.bank, driver.frontiers(), goal.kind, goal.embedding,
                pose, driver.grid, scene.diameter, options.min_score,
            )
            decision = policy.decide(cs)
            if decision.kind == TERMINATE:
                decisions.append((TERMINATE, -1))
                ended_by = "terminate"
                break
            decisions.append((decision.kind, decision.index))
            if decision.kind == GROUND:
                target = cs.objects[decision.index]
                outcome = driver.goto_believed_box(target.box.footprint(), budget)
                ended_by = "budget" if outcome == BUDGET else "ground"
                break
            frontier = cs.frontiers[decision.index]
            outcome = driver.goto_frontier(frontier, budget)
            driver.visited.append(mark_visited(frontier))
            if outcome == BUDGET:
                ended_by = "budget"
                break

        final = driver.state.pose
        success = driver.success_at((final.x, final.y), goal.target_ids)
        per_goal.append(
            GoalResult(
                success=success,
                path_length=(driver.state.moves - start_moves) * STEP_LENGTH,
                shortest_length=shortest,
                steps=driver.state.step_count - start_steps,
                decisions_used=len(decisions),
                goal_kind=goal.kind,
                ended_by=ended_by,
            )
        )
        all_decisions.append(decisions)
        if goal.is_sequence_step and not success:
            failed_sequences.add(goal.goal_index)

    return EpisodeResult(
        success=all(g.success for g in per_goal),
        path_length=sum(g.path_length for g in per_goal),
        shortest_length=sum(g.shortest_length for g in per_goal if math.isfinite(g.shortest_length)),
        steps=driver.state.step_count,
        per_goal=per_goal,
        decisions=all_decisions,
    )


# -- metrics ----------------------------------------------------------------------


def flatten_sub_results(results: list[EpisodeResult]) -> list[GoalResult]:
    return [g for r in results for g in r.per_goal]


def compute_sr(sub_results: list[GoalResult]) -> float:
    if not sub_results:
        return 0.0
    return sum(1.0 for g in sub_results if g.success) / len(sub_results)


def compute_spl(sub_results: list[GoalResult]) -> float:
    """Mean of S_i * l_i / max(p_i, l_i); failed sub-episodes contribute 0.

    Sub-episodes with a non-positive shortest length are degenerate; they
    are excluded (with a warning) rather than polluting the mean.
    """
    terms = []
    for g in sub_results:
        if not g.attempted:
            terms.append(0.0)
            continue
        if not (g.shortest_length > 0.0) or not math.isfinite(g.shortest_length):
            warnings.warn(
                f"degenerate sub-episode (l={g.shortest_length}); excluded from SPL"
            )
            continue
        if g.success:
            terms.append(g.shortest_length / max(g.path_length, g.shortest_length))
        else:
            terms.append(0.0)
    if not terms:
        return 0.0
    return float(sum(terms) / len(terms))


def compute_task_metrics(results: list[EpisodeResult]) -> tuple[float, float]:
    """(s-SR, t-SR) over episodes carrying task_steps goals.

    s-SR is the fraction of all steps succeeded (skipped steps count as
    failures); t-SR the fraction of episodes with every step succeeded.
    """
    seq_results = [
        r for r in results if any(g.goal_kind == "task_steps" for g in r.per_goal)
    ]
    if not seq_results:
        return 0.0, 0.0
    total_steps = 0
    good_steps = 0
    full = 0
    for r in seq_results:
        steps = [g for g in r.per_goal if g.goal_kind == "task_steps"]
        total_steps += len(steps)
        good_steps += sum(1 for g in steps if g.success)
        full += int(all(g.success for g in steps))
    return good_steps / total_steps, full / len(seq_results)


def bootstrap_ci(values, seed: int = 0, n_resamples: int = 1000, alpha: float = 0.05):
    """Percentile bootstrap CI for the mean of a 0/1 (or real) sample."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0, 0.0
    rng = substream("bootstrap", seed)
    idx = rng.integers(0, values.size, size=(n_resamples, values.size))
    means = values[idx].mean(axis=1)
    lo, hi = np.quantile(means, [alpha / 2.0, 1.0 - alpha / 2.0])
    return float(lo), float(hi)


@dataclass
class BenchmarkReport:
    sr: float
    spl: float
    s_sr: float
    t_sr: float
    per_step_curve: list[dict]
    episodes: int
    sub_episodes: int
    config_hash: str = ""

    def to_dict(self) -> dict:
        return {
            "sr": self.sr,
            "spl": self.spl,
            "s_sr": self.s_sr,
            "t_sr": self.t_sr,
            "per_step_curve": self.per_step_curve,
            "episodes": self.episodes,
            "sub_episodes": self.sub_episodes,
            "config_hash": self.config_hash,
        }


def evaluate_policy(
    pairs: list[tuple[SceneSpec, EpisodeSpec]],
    policy,
    options: EvalOptions = EvalOptions(),
    budgets: tuple[int, ...] = (),
    jobs: int = 1,
    config_hash: str = "",
) -> tuple[BenchmarkReport, list[EpisodeResult]]:
    """Run a policy over (scene, episode) pairs and aggregate the metrics."""
    results = _run_all(pairs, policy, options, jobs)
    subs = flatten_sub_results(results)
    curve = [
        {"budget": b, **_curve_point(subs, b)}
        for b in sorted(budgets)
    ]
    s_sr, t_sr = compute_task_metrics(results)
    report = BenchmarkReport(
        sr=compute_sr(subs),
        spl=compute_spl(subs),
        s_sr=s_sr,
        t_sr=t_sr,
        per_step_curve=curve,
        episodes=len(results),
        sub_episodes=len(subs),
        config_hash=config_hash,
    )
    return report, results


def _run_all(pairs, policy, options, jobs=1) -> list[EpisodeResult]:
    tasks = [
        (i, scene, episode, policy, options) for i, (scene, episode) in enumerate(pairs)
    ]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    return [r for _, r in sorted(results, key=lambda t: t[0])]


def _run_one(task):
    i, scene, episode, policy, options = task
    result = run_episode(
        scene, episode, policy, options,
        episode_seed=int(options.seed) * 1_000_003 + i,
    )
    return i, result


def _successes_at_budget(subs: list[GoalResult], budget: int) -> np.ndarray:
    return np.array(
        [1.0 if (g.success and g.decisions_used <= budget) else 0.0 for g in subs]
    )


def _curve_point(subs: list[GoalResult], budget: int) -> dict:
    wins = _successes_at_budget(subs, budget)
    spl_terms = [
        (g.shortest_length / max(g.path_length, g.shortest_length)) if w else 0.0
        for g, w in zip(subs, wins)
        if g.shortest_length > 0 and math.isfinite(g.shortest_length)
    ]
    return {
        "sr": float(wins.mean()) if wins.size else 0.0,
        "spl": float(np.mean(spl_terms)) if spl_terms else 0.0,
    }


def compare_scorers(
    pairs: list[tuple[SceneSpec, EpisodeSpec]],
    policy_a,
    policy_b,
    budgets: tuple[int, ...],
    options: EvalOptions = EvalOptions(),
    seed: int = 0,
    jobs: int = 1,
) -> list[dict]:
    """Paired per-budget comparison with bootstrap 95% CIs on SR.

    Both policies see identical episodes (and identical observation noise);
    the curve at budget b counts a sub-episode as a success iff it
    succeeded using at most b decisions.
    """
    opts = replace(options, decision_budget=max(max(budgets), options.decision_budget))
    rows = []
    subs = {}
    for tag, policy in (("a", policy_a), ("b", policy_b)):
        _, results = evaluate_policy(pairs, policy, opts, jobs=jobs)
        subs[tag] = flatten_sub_results(results)
    for b in sorted(budgets):
        row = {"budget": b}
        for tag in ("a", "b"):
            wins = _successes_at_budget(subs[tag], b)
            point = _curve_point(subs[tag], b)
            lo, hi = bootstrap_ci(wins, seed=seed * 97 + b)
            row[f"sr_{tag}"] = point["sr"]
            row[f"spl_{tag}"] = point["spl"]
            row[f"sr_{tag}_lo"] = lo
            row[f"sr_{tag}_hi"] = hi
        rows.append(row)
    return rows


def memory_ablation(
    pairs: list[tuple[SceneSpec, EpisodeSpec]],
    policy,
    options: EvalOptions = EvalOptions(),
    jobs: int = 1,
) -> list[dict]:
    """Run each multi-goal episode with memory preserved vs reset per goal;
    report SR by goal kind for both arms (plus an 'all' row)."""
    arms = {}
    for tag, reset in (("with_memory", False), ("reset_memory", True)):
        opts = replace(options, reset_memory_per_goal=reset)
        _, results = evaluate_policy(pairs, policy, opts, jobs=jobs)
        arms[tag] = flatten_sub_results(results)
    kinds = sorted({g.goal_kind for g in arms["with_memory"]})
    rows = []
    for kind in kinds + ["all"]:
        row = {"goal_kind": kind}
        for tag, subs in arms.items():
            sel = [g for g in subs if kind == "all" or g.goal_kind == kind]
            row[f"sr_{tag}"] = compute_sr(sel)
            row[f"n_{tag}"] = len(sel)
        rows.append(row)
    return rows
