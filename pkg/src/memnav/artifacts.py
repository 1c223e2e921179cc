"""On-disk artifact formats.

Every file is self-describing JSON: a format_version, the config hash of
the run that produced it, and enough structure for `memnav inspect` to
validate invariants. Floats round-trip exactly (shortest-repr JSON), so
re-serializing a loaded artifact reproduces identical bytes.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .geometry import Box3
from .scene import EpisodeSpec, GoalSpec, GroundTruthObject, SceneSpec, WallSegment

FORMAT_VERSION = 1


class ArtifactError(ValueError):
    """Unreadable, corrupt, or version-mismatched artifact file."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _check_version(data: dict, path: str, expected_kind: str | None = None) -> None:
    if data.get("format_version") != FORMAT_VERSION:
        raise ArtifactError(
            f"{path}: format_version {data.get('format_version')} "
            f"(this build reads {FORMAT_VERSION})"
        )
    if expected_kind and data.get("kind") != expected_kind:
        raise ArtifactError(f"{path}: expected kind {expected_kind!r}, got {data.get('kind')!r}")


def scene_to_dict(scene: SceneSpec) -> dict:
    return {
        "bounds": list(scene.bounds),
        "resolution": scene.resolution,
        "seed": scene.seed,
        "walls": [
            {"x1": w.x1, "y1": w.y1, "x2": w.x2, "y2": w.y2, "transparent": w.transparent}
            for w in scene.walls
        ],
        "objects": [
            {
                "id": o.id,
                "center": list(o.box.center),
                "size": list(o.box.size),
                "category": o.category,
                "instance_embedding": o.instance_embedding.tolist(),
            }
            for o in scene.objects
        ],
        "categories": {k: v.tolist() for k, v in sorted(scene.categories.items())},
        "rooms": [list(r) for r in scene.rooms],
    }


def scene_from_dict(data: dict) -> SceneSpec:
    categories = {k: np.array(v) for k, v in data["categories"].items()}
    objects = [
        GroundTruthObject(
            id=o["id"],
            box=Box3(tuple(o["center"]), tuple(o["size"])),
            category=o["category"],
            category_embedding=categories[o["category"]],
            instance_embedding=np.array(o["instance_embedding"]),
        )
        for o in data["objects"]
    ]
    return SceneSpec(
        bounds=tuple(data["bounds"]),
        walls=[
            WallSegment(w["x1"], w["y1"], w["x2"], w["y2"], w["transparent"])
            for w in data["walls"]
        ],
        objects=objects,
        seed=data["seed"],
        resolution=data["resolution"],
        categories=categories,
        rooms=[tuple(r) for r in data.get("rooms", [])],
    )


def goal_to_dict(goal: GoalSpec) -> dict:
    return {
        "kind": goal.kind,
        "embedding": goal.embedding.tolist(),
        "target_ids": [list(ids) for ids in goal.target_ids]
        if goal.kind == "task_steps"
        else list(goal.target_ids),
    }


def goal_from_dict(data: dict) -> GoalSpec:
    if data["kind"] == "task_steps":
        ids = tuple(tuple(step) for step in data["target_ids"])
    else:
        ids = tuple(data["target_ids"])
    return GoalSpec(data["kind"], np.array(data["embedding"]), ids)


def episode_to_dict(episode: EpisodeSpec) -> dict:
    return {
        "start_pose": list(episode.start_pose),
        "max_steps": episode.max_steps,
        "phantom_ids": list(episode.phantom_ids),
        "goals": [goal_to_dict(g) for g in episode.goals],
    }


def episode_from_dict(data: dict) -> EpisodeSpec:
    return EpisodeSpec(
        start_pose=tuple(data["start_pose"]),
        goals=[goal_from_dict(g) for g in data["goals"]],
        max_steps=data["max_steps"],
        phantom_ids=tuple(data["phantom_ids"]),
    )


def write_scene_bundle(path, scene: SceneSpec, episodes: list[EpisodeSpec], config_hash: str = "") -> None:
    data = {
        "format_version": FORMAT_VERSION,
        "kind": "scene_bundle",
        "config_hash": config_hash,
        "scene": scene_to_dict(scene),
        "episodes": [episode_to_dict(e) for e in episodes],
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_scene_bundle(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"{path}: {exc}") from exc
    _check_version(data, str(path), "scene_bundle")
    scene = scene_from_dict(data["scene"])
    episodes = [episode_from_dict(e) for e in data["episodes"]]
    return scene, episodes, data


def read_scene_dir(scenes_dir) -> list[tuple[SceneSpec, list[EpisodeSpec]]]:
    bundles = []
    names = sorted(
        n for n in os.listdir(scenes_dir) if n.startswith("scene_") and n.endswith(".json")
    )
    if not names:
        raise ArtifactError(f"{scenes_dir}: no scene_*.json bundles found")
    for name in names:
        scene, episodes, _ = read_scene_bundle(os.path.join(scenes_dir, name))
        bundles.append((scene, episodes))
    return bundles


def write_model(path, model, config_hash: str = "", train_log: dict | None = None) -> None:
    data = model.to_dict()
    data["kind"] = "scorer_model"
    data["config_hash"] = config_hash
    if train_log is not None:
        data["train_log"] = train_log
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_model(path):
    from .decide import ScorerModel

    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"{path}: {exc}") from exc
    _check_version(data, str(path), "scorer_model")
    return ScorerModel.from_dict(data), data


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"{path}: {exc}") from exc
