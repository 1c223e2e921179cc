"""Unified ground-vs-explore decision layer.

Every stored object and every unvisited frontier becomes one candidate row
of a fixed 6-feature vector; a two-layer tanh scorer maps rows to scalar
scores and the argmax picks the action. The same scorer handles category,
description, image, and task-step goals; only the goal embedding differs.

Feature layout (FEATURE_DIM = 6):
    0  cos(vocab embedding, goal)           objects; 0 for frontiers
    1  cos(feature, goal)                   objects; 0 for frontiers
    2  confidence (objects) or mean goal-cos of globals within
       NEIGHBOR_RADIUS of the frontier (frontiers)
    3  geodesic distance to the agent on the agent's grid, / scene diameter
    4  type flag: 1 object, 0 frontier
    5  cluster size * resolution / scene diameter; 0 for objects
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mapping import FrontierQuery, OccupancyGrid
from .memory import MemoryBank
from .percept import ObjectQuery
from .plan import distance_field, region_distance
from .rng import substream
from .sim import AgentPose

FEATURE_DIM = 6
FEATURE_SPEC_VERSION = 1
NEIGHBOR_RADIUS = 2.0  # meters; globals this close to a frontier vote on it

GROUND = "ground"
EXPLORE = "explore"
TERMINATE = "terminate"


@dataclass
class CandidateSet:
    """Candidates for one decision: memory objects then unvisited frontiers,
    with the feature matrix rows in the same order."""

    objects: list[ObjectQuery]
    frontiers: list[FrontierQuery]
    goal_kind: str
    goal_embedding: np.ndarray
    pose: AgentPose
    features: np.ndarray  # (n_objects + n_frontiers, FEATURE_DIM)

    def __len__(self) -> int:
        return len(self.objects) + len(self.frontiers)

    def split_index(self, candidate_idx: int) -> tuple[str, int]:
        if candidate_idx < len(self.objects):
            return GROUND, candidate_idx
        return EXPLORE, candidate_idx - len(self.objects)


@dataclass
class Decision:
    kind: str  # ground | explore | terminate
    index: int  # into objects or frontiers depending on kind; -1 for terminate
    scores: np.ndarray

    @property
    def candidate_index(self) -> int:
        return self.index


def candidate_features(
    objects: list[ObjectQuery],
    frontiers: list[FrontierQuery],
    goal_embedding: np.ndarray,
    pose: AgentPose,
    grid: OccupancyGrid,
    diameter: float,
) -> np.ndarray:
    """Feature matrix over objects then frontiers; distances use a single
    BFS field from the agent's cell on the (partial) agent grid."""
    n = len(objects) + len(frontiers)
    feats = np.zeros((n, FEATURE_DIM))
    if n == 0:
        return feats
    fieldm = distance_field(grid, grid.cell_of((pose.x, pose.y)))

    def norm_dist(meters: float) -> float:
        if not math.isfinite(meters):
            return 1.0
        return min(1.0, meters / diameter)

    for i, q in enumerate(objects):
        d = region_distance(fieldm, grid, q.box.footprint())
        feats[i, 0] = float(np.dot(q.vocab_embedding, goal_embedding))
        feats[i, 1] = float(np.dot(q.feature, goal_embedding))
        feats[i, 2] = q.score
        feats[i, 3] = norm_dist(d)
        feats[i, 4] = 1.0
    if frontiers:
        centers = (
            np.stack([np.asarray(q.box.center[:2]) for q in objects])
            if objects
            else np.zeros((0, 2))
        )
        vocab = (
            np.stack([q.vocab_embedding for q in objects])
            if objects
            else np.zeros((0, goal_embedding.shape[0]))
        )
        goal_cos = vocab @ goal_embedding if objects else np.zeros(0)
        for k, f in enumerate(frontiers):
            i = len(objects) + k
            fx, fy, _ = f.position
            if centers.shape[0]:
                near = np.hypot(centers[:, 0] - fx, centers[:, 1] - fy) <= NEIGHBOR_RADIUS
                feats[i, 2] = float(goal_cos[near].mean()) if near.any() else 0.0
            cell = grid.cell_of((fx, fy))
            d = fieldm[cell[1], cell[0]] if grid.in_bounds(cell) else math.inf
            feats[i, 3] = norm_dist(float(d))
            feats[i, 5] = f.cluster_size * grid.resolution / diameter
    return feats


def assemble_candidates(
    bank: MemoryBank,
    frontiers: list[FrontierQuery],
    goal_kind: str,
    goal_embedding: np.ndarray,
    pose: AgentPose,
    grid: OccupancyGrid,
    diameter: float,
    min_score: float = 0.0,
) -> CandidateSet:
    """Deterministic candidate ordering: bank objects in registration order
    (score floor applied), then unvisited frontiers by descending cluster
    size (position breaks ties)."""
    objects = [q for q in bank.globals if q.score >= min_score]
    fresh = [f for f in frontiers if not f.visited]
    fresh.sort(key=lambda f: (-f.cluster_size, f.position[0], f.position[1]))
    feats = candidate_features(objects, fresh, goal_embedding, pose, grid, diameter)
    return CandidateSet(
        objects=objects,
        frontiers=fresh,
        goal_kind=goal_kind,
        goal_embedding=goal_embedding,
        pose=pose,
        features=feats,
    )


# -- scorer model -------------------------------------------------------------


@dataclass
class ScorerModel:
    """Two affine layers with a tanh in between: FEATURE_DIM -> hidden -> 1."""

    w1: np.ndarray  # (hidden, FEATURE_DIM)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float

    @staticmethod
    def init(seed: int = 0, hidden: int = 16, feature_dim: int = FEATURE_DIM) -> "ScorerModel":
        rng = substream("model-init", seed)
        return ScorerModel(
            w1=rng.standard_normal((hidden, feature_dim)) / math.sqrt(feature_dim),
            b1=np.zeros(hidden),
            w2=rng.standard_normal(hidden) / math.sqrt(hidden),
            b2=0.0,
        )

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    @property
    def n_params(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + 1

    def raw_scores(self, features: np.ndarray) -> np.ndarray:
        a = np.tanh(features @ self.w1.T + self.b1)
        return a @ self.w2 + self.b2

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "feature_spec_version": FEATURE_SPEC_VERSION,
            "feature_dim": self.w1.shape[1],
            "hidden": self.hidden,
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2,
        }

    @staticmethod
    def from_dict(data: dict) -> "ScorerModel":
        if data.get("feature_spec_version") != FEATURE_SPEC_VERSION:
            raise ValueError(
                f"model feature spec {data.get('feature_spec_version')} does not "
                f"match this build ({FEATURE_SPEC_VERSION})"
            )
        return ScorerModel(
            w1=np.array(data["w1"], dtype=float),
            b1=np.array(data["b1"], dtype=float),
            w2=np.array(data["w2"], dtype=float),
            b2=float(data["b2"]),
        )


def score(candidates: CandidateSet, model: ScorerModel) -> np.ndarray:
    return model.raw_scores(candidates.features)


def decide_step(candidates: CandidateSet, model: ScorerModel) -> Decision:
    """Argmax over candidate scores; ties go to the lowest index, and the
    candidate order puts objects before frontiers."""
    if len(candidates) == 0:
        return Decision(TERMINATE, -1, np.zeros(0))
    scores = score(candidates, model)
    best = int(np.argmax(scores))
    kind, index = candidates.split_index(best)
    return Decision(kind, index, scores)


def heuristic_nearest_frontier(candidates: CandidateSet, tau_ground: float = 0.85) -> Decision:
    """Frontier-exploration baseline: ground when some object's goal cosine
    clears tau_ground, otherwise walk to the nearest unvisited frontier."""
    n_obj = len(candidates.objects)
    feats = candidates.features
    scores = np.zeros(len(candidates))
    if n_obj:
        # max of the two cosine channels handles image goals too
        obj_cos = np.maximum(feats[:n_obj, 0], feats[:n_obj, 1])
        scores[:n_obj] = obj_cos
    if len(candidates.frontiers):
        # distance feature is normalized to [0, 1]; 2 - d ranks nearest first
        scores[n_obj:] = 2.0 - feats[n_obj:, 3]
    if n_obj and np.max(scores[:n_obj]) >= tau_ground:
        scores[:n_obj][np.argmax(scores[:n_obj])] += 10.0
        best = int(np.argmax(scores))
        kind, index = candidates.split_index(best)
        return Decision(kind, index, scores)
    if len(candidates.frontiers):
        best = n_obj + int(np.argmax(scores[n_obj:]))
        kind, index = candidates.split_index(best)
        return Decision(kind, index, scores)
    return Decision(TERMINATE, -1, scores)


# -- loss and training --------------------------------------------------------

_P_MIN = 1e-7


def bce_loss(raw_scores: np.ndarray, labels: np.ndarray, ignore=()) -> tuple[float, np.ndarray]:
    """Mean sigmoid-BCE over non-ignored candidates and its exact gradient
    with respect to the raw scores. Probabilities are clamped to
    [1e-7, 1 - 1e-7]; clamped entries get zero gradient."""
    raw_scores = np.asarray(raw_scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if raw_scores.shape != labels.shape:
        raise ValueError("scores and labels must have equal length")
    keep = np.ones(raw_scores.shape[0], dtype=bool)
    for i in ignore:
        keep[i] = False
    m = int(keep.sum())
    if m == 0:
        return 0.0, np.zeros_like(raw_scores)
    p = 1.0 / (1.0 + np.exp(-raw_scores))
    clamped = (p < _P_MIN) | (p > 1.0 - _P_MIN)
    pc = np.clip(p, _P_MIN, 1.0 - _P_MIN)
    per = -(labels * np.log(pc) + (1.0 - labels) * np.log(1.0 - pc))
    loss = float(per[keep].mean())
    grad = np.where(keep & ~clamped, (p - labels) / m, 0.0)
    return loss, grad


def record_loss_and_grads(model: ScorerModel, features: np.ndarray, label_idx: int, ignore=()):
    """Loss and parameter gradients for one decision record."""
    labels = np.zeros(features.shape[0])
    labels[label_idx] = 1.0
    z = features @ model.w1.T + model.b1
    a = np.tanh(z)
    raw = a @ model.w2 + model.b2
    loss, d_raw = bce_loss(raw, labels, ignore)
    d_w2 = a.T @ d_raw
    d_b2 = float(d_raw.sum())
    d_a = np.outer(d_raw, model.w2)
    d_z = d_a * (1.0 - a * a)
    d_w1 = d_z.T @ features
    d_b1 = d_z.sum(axis=0)
    return loss, {"w1": d_w1, "b1": d_b1, "w2": d_w2, "b2": d_b2}


def dataset_loss(model: ScorerModel, dataset) -> float:
    total = 0.0
    for rec in dataset:
        labels = np.zeros(rec.features.shape[0])
        labels[rec.label_idx] = 1.0
        raw = model.raw_scores(rec.features)
        loss, _ = bce_loss(raw, labels, rec.ignore)
        total += loss
    return total / len(dataset)


@dataclass(frozen=True)
class TrainParams:
    batch_size: int = 64
    learning_rate: float = 1e-3
    epochs: int = 10
    hidden: int = 16


def train(dataset, hyper: TrainParams = TrainParams(), seed: int = 0):
    """Minibatch gradient descent on the BCE objective.

    dataset rows must expose .features (n, FEATURE_DIM), .label_idx, and
    .ignore. Returns (model, log) where the log carries the pre-training
    loss and one mean training loss per epoch.
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("empty training dataset")
    model = ScorerModel.init(seed=seed, hidden=hyper.hidden)
    log = {"initial_loss": dataset_loss(model, dataset), "epoch_loss": []}
    n = len(dataset)
    for epoch in range(hyper.epochs):
        order = substream("train-shuffle", seed, epoch).permutation(n)
        epoch_losses = []
        for lo in range(0, n, hyper.batch_size):
            batch = [dataset[int(i)] for i in order[lo:lo + hyper.batch_size]]
            grads = {
                "w1": np.zeros_like(model.w1),
                "b1": np.zeros_like(model.b1),
                "w2": np.zeros_like(model.w2),
                "b2": 0.0,
            }
            batch_loss = 0.0
            for rec in batch:
                loss, g = record_loss_and_grads(model, rec.features, rec.label_idx, rec.ignore)
                batch_loss += loss
                for k in grads:
                    grads[k] = grads[k] + g[k]
            scale = 1.0 / len(batch)
            model.w1 = model.w1 - hyper.learning_rate * scale * grads["w1"]
            model.b1 = model.b1 - hyper.learning_rate * scale * grads["b1"]
            model.w2 = model.w2 - hyper.learning_rate * scale * grads["w2"]
            model.b2 = model.b2 - hyper.learning_rate * scale * grads["b2"]
            epoch_losses.append(batch_loss * scale)
        log["epoch_loss"].append(float(np.mean(epoch_losses)))
    log["final_loss"] = dataset_loss(model, dataset)
    return model, log
