"""Dynamic spatial memory bank.

Local queries from the current frame are matched to stored global queries
by 3D box IoU (entries below the threshold are dropped), matched pairs are
fused with a count-weighted running average, and unmatched locals register
as new globals. Matching is greedy in descending IoU with a lexicographic
tie-break, which is deterministic and one-to-one.
"""

from __future__ import annotations

import numpy as np

from .geometry import Box3
from .percept import ObjectQuery

DEFAULT_EPSILON = 0.25


def box_iou(a: Box3, b: Box3) -> float:
    """Intersection-over-union of two axis-aligned 3D boxes."""
    lo = np.maximum(a.lo, b.lo)
    hi = np.minimum(a.hi, b.hi)
    edges = np.maximum(0.0, hi - lo)
    inter = float(edges.prod())
    union = a.volume + b.volume - inter
    return inter / union if union > 0 else 0.0


def iou_matrix(locals_: list[ObjectQuery], globals_: list[ObjectQuery], epsilon: float) -> np.ndarray:
    """(M, N) IoU matrix with entries below epsilon set to -inf."""
    m, n = len(locals_), len(globals_)
    if m == 0 or n == 0:
        return np.full((m, n), -np.inf)
    lo_a = np.stack([q.box.lo for q in locals_])
    hi_a = np.stack([q.box.hi for q in locals_])
    lo_b = np.stack([q.box.lo for q in globals_])
    hi_b = np.stack([q.box.hi for q in globals_])
    lo = np.maximum(lo_a[:, None, :], lo_b[None, :, :])
    hi = np.minimum(hi_a[:, None, :], hi_b[None, :, :])
    inter = np.clip(hi - lo, 0.0, None).prod(axis=2)
    vol_a = (hi_a - lo_a).prod(axis=1)
    vol_b = (hi_b - lo_b).prod(axis=1)
    union = vol_a[:, None] + vol_b[None, :] - inter
    iou = np.where(union > 0, inter / union, 0.0)
    return np.where(iou >= epsilon, iou, -np.inf)


class MemoryBank:
    """Lifelong store of global object queries; no eviction or decay."""

    def __init__(self, epsilon: float = DEFAULT_EPSILON):
        if not (0.0 < epsilon < 1.0):
            raise ValueError("epsilon must be in (0, 1)")
        self.epsilon = epsilon
        self.globals: list[ObjectQuery] = []

    def __len__(self) -> int:
        return len(self.globals)


def match(
    locals_: list[ObjectQuery], bank: MemoryBank
) -> tuple[list[tuple[int, int]], list[int]]:
    """Greedy one-to-one assignment in descending IoU order.

    Ties on IoU break by (local index, global index). Returns matched
    (local, global) pairs and the unmatched local indices, in ascending
    local order.
    """
    c = iou_matrix(locals_, bank.globals, bank.epsilon)
    candidates = [
        (-c[i, j], i, j)
        for i in range(c.shape[0])
        for j in range(c.shape[1])
        if np.isfinite(c[i, j])
    ]
    candidates.sort()
    used_local: set[int] = set()
    used_global: set[int] = set()
    pairs: list[tuple[int, int]] = []
    for _, i, j in candidates:
        if i in used_local or j in used_global:
            continue
        pairs.append((i, j))
        used_local.add(i)
        used_global.add(j)
    pairs.sort()
    unmatched = [i for i in range(len(locals_)) if i not in used_local]
    return pairs, unmatched


def fuse(local: ObjectQuery, global_: ObjectQuery) -> ObjectQuery:
    """Count-weighted running average of the matched pair.

    With n observations already merged into the global, the update keeps
    n/(n+1) of the global and adds 1/(n+1) of the local, for box, feature,
    vocabulary embedding, and score. Embeddings are renormalized, masks are
    unioned, and the merge count increments.
    """
    n = global_.merge_count
    w_old = n / (n + 1.0)
    w_new = 1.0 / (n + 1.0)
    center = w_old * np.asarray(global_.box.center) + w_new * np.asarray(local.box.center)
    size = w_old * np.asarray(global_.box.size) + w_new * np.asarray(local.box.size)
    feature = w_old * global_.feature + w_new * local.feature
    vocab = w_old * global_.vocab_embedding + w_new * local.vocab_embedding
    score = w_old * global_.score + w_new * local.score
    return ObjectQuery(
        box=Box3(tuple(center), tuple(size)),
        mask=global_.mask | local.mask,
        feature=feature / float(np.linalg.norm(feature)),
        vocab_embedding=vocab / float(np.linalg.norm(vocab)),
        score=float(score),
        merge_count=n + 1,
        source_id=global_.source_id if global_.source_id is not None else local.source_id,
    )


def _merge_globals(a: ObjectQuery, b: ObjectQuery) -> ObjectQuery:
    """Merge two overlapping globals, weighting by their merge counts."""
    na, nb = a.merge_count, b.merge_count
    wa, wb = na / (na + nb), nb / (na + nb)
    center = wa * np.asarray(a.box.center) + wb * np.asarray(b.box.center)
    size = wa * np.asarray(a.box.size) + wb * np.asarray(b.box.size)
    feature = wa * a.feature + wb * b.feature
    vocab = wa * a.vocab_embedding + wb * b.vocab_embedding
    return ObjectQuery(
        box=Box3(tuple(center), tuple(size)),
        mask=a.mask | b.mask,
        feature=feature / float(np.linalg.norm(feature)),
        vocab_embedding=vocab / float(np.linalg.norm(vocab)),
        score=float(wa * a.score + wb * b.score),
        merge_count=na + nb,
        source_id=a.source_id if a.source_id is not None else b.source_id,
    )


def _consolidate(bank: MemoryBank) -> None:
    """Restore the pairwise-separation invariant after registration.

    Registration of several same-frame locals can leave two globals with
    IoU >= epsilon; repeatedly merge the most-overlapping pair (ties by
    index) until none remain.
    """
    while len(bank.globals) > 1:
        c = iou_matrix(bank.globals, bank.globals, bank.epsilon)
        np.fill_diagonal(c, -np.inf)
        best = np.unravel_index(int(np.argmax(c)), c.shape)
        if not np.isfinite(c[best]):
            return
        i, j = sorted((int(best[0]), int(best[1])))
        merged = _merge_globals(bank.globals[i], bank.globals[j])
        bank.globals[i] = merged
        del bank.globals[j]


def ingest(frame_queries: list[ObjectQuery], bank: MemoryBank) -> MemoryBank:
    """Match, fuse matched pairs, register unmatched locals (in place)."""
    pairs, unmatched = match(frame_queries, bank)
    for i, j in pairs:
        bank.globals[j] = fuse(frame_queries[i], bank.globals[j])
    for i in unmatched:
        bank.globals.append(frame_queries[i].copy())
    _consolidate(bank)
    return bank


def bank_to_dict(bank: MemoryBank) -> dict:
    return {
        "epsilon": bank.epsilon,
        "globals": [
            {
                "center": list(q.box.center),
                "size": list(q.box.size),
                "mask": sorted(q.mask),
                "feature": q.feature.tolist(),
                "vocab_embedding": q.vocab_embedding.tolist(),
                "score": q.score,
                "merge_count": q.merge_count,
                "source_id": q.source_id,
            }
            for q in bank.globals
        ],
    }


def bank_from_dict(data: dict) -> MemoryBank:
    bank = MemoryBank(epsilon=data["epsilon"])
    for row in data["globals"]:
        bank.globals.append(
            ObjectQuery(
                box=Box3(tuple(row["center"]), tuple(row["size"])),
                mask=frozenset(row["mask"]),
                feature=np.array(row["feature"]),
                vocab_embedding=np.array(row["vocab_embedding"]),
                score=row["score"],
                merge_count=row["merge_count"],
                source_id=row["source_id"],
            )
        )
    return bank
