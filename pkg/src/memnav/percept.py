"""Perception oracle: turns sensor frames into noisy object queries.

Stands in for a trained detector. Each visible object yields one query with
a jittered global box, noisy unit embeddings, a distance-decaying confidence,
and the grid cells of the box face toward the agent as its mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Box3
from .rng import substream
from .scene import SceneSpec
from .sim import SensorFrame

SCORE_FLOOR = 0.05


@dataclass(frozen=True)
class NoiseParams:
    sigma_center: float = 0.05  # meters, box center jitter
    sigma_size: float = 0.05    # log-size jitter
    sigma_vocab: float = 0.05   # vocabulary embedding noise
    sigma_feature: float = 0.05  # instance feature noise

    @staticmethod
    def zero() -> "NoiseParams":
        return NoiseParams(0.0, 0.0, 0.0, 0.0)


@dataclass
class ObjectQuery:
    """Object hypothesis: global box, observed-cell mask, feature and
    vocabulary embeddings, confidence, and how many observations merged."""

    box: Box3
    mask: frozenset[int]
    feature: np.ndarray
    vocab_embedding: np.ndarray
    score: float
    merge_count: int = 1
    source_id: int | None = None  # simulation-only; hidden from the policy

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must be in [0,1], got {self.score}")
        if self.merge_count < 1:
            raise ValueError("merge_count must be >= 1")

    def copy(self) -> "ObjectQuery":
        return replace(
            self,
            feature=self.feature.copy(),
            vocab_embedding=self.vocab_embedding.copy(),
        )


def _unit(v: np.ndarray) -> np.ndarray:
    return v / float(np.linalg.norm(v))


def visible_face_cells(scene: SceneSpec, obj, agent_xy) -> frozenset[int]:
    """Global flat ids of the footprint cells on the side facing the agent."""
    res = scene.resolution
    nx, _ = scene.cells
    rect = obj.box.footprint()
    ix0 = int(math.floor(rect[0] / res + 1e-9))
    iy0 = int(math.floor(rect[1] / res + 1e-9))
    ix1 = int(math.ceil(rect[2] / res - 1e-9))
    iy1 = int(math.ceil(rect[3] / res - 1e-9))
    dx = agent_xy[0] - obj.box.center[0]
    dy = agent_xy[1] - obj.box.center[1]
    if abs(dx) >= abs(dy):
        col = ix1 - 1 if dx > 0 else ix0
        cells = [(col, iy) for iy in range(iy0, iy1)]
    else:
        row = iy1 - 1 if dy > 0 else iy0
        cells = [(ix, row) for ix in range(ix0, ix1)]
    return frozenset(iy * nx + ix for ix, iy in cells)


def observe(
    frame: SensorFrame,
    scene: SceneSpec,
    noise: NoiseParams = NoiseParams(),
    seed: int = 0,
) -> list[ObjectQuery]:
    """One noisy query per visible object, ordered by object id.

    Noise draws come from a stream keyed by (seed, frame timestamp, object
    id) in a fixed order (center, size, vocab, feature), so the same inputs
    reproduce the same queries.
    """
    queries: list[ObjectQuery] = []
    for oid in frame.visible_ids:
        obj = scene.object_by_id(oid)
        rng = substream("percept", seed, frame.timestamp, oid)
        center = np.asarray(obj.box.center) + noise.sigma_center * rng.standard_normal(3)
        size = np.asarray(obj.box.size) * np.exp(noise.sigma_size * rng.standard_normal(3))
        vocab = obj.category_embedding + noise.sigma_vocab * rng.standard_normal(
            obj.category_embedding.shape
        )
        feat = obj.instance_embedding + noise.sigma_feature * rng.standard_normal(
            obj.instance_embedding.shape
        )
        d = math.hypot(obj.box.center[0] - frame.pose.x, obj.box.center[1] - frame.pose.y)
        score = min(1.0, max(SCORE_FLOOR, 1.0 - d / frame.max_range))
        queries.append(
            ObjectQuery(
                box=Box3(tuple(center), tuple(size)),
                mask=visible_face_cells(scene, obj, (frame.pose.x, frame.pose.y)),
                feature=_unit(feat),
                vocab_embedding=_unit(vocab),
                score=score,
                merge_count=1,
                source_id=oid,
            )
        )
    return queries


def exact_query(scene: SceneSpec, object_id: int) -> ObjectQuery:
    """Noise-free query straight from ground truth (pre-explored setups)."""
    obj = scene.object_by_id(object_id)
    res = scene.resolution
    nx, _ = scene.cells
    rect = obj.box.footprint()
    ix0 = int(math.floor(rect[0] / res + 1e-9))
    iy0 = int(math.floor(rect[1] / res + 1e-9))
    ix1 = int(math.ceil(rect[2] / res - 1e-9))
    iy1 = int(math.ceil(rect[3] / res - 1e-9))
    mask = frozenset(
        iy * nx + ix for iy in range(iy0, iy1) for ix in range(ix0, ix1)
    )
    return ObjectQuery(
        box=Box3(obj.box.center, obj.box.size),
        mask=mask,
        feature=obj.instance_embedding.copy(),
        vocab_embedding=obj.category_embedding.copy(),
        score=1.0,
        merge_count=1,
        source_id=object_id,
    )
