"""Command-line surface and pipeline orchestration.

Subcommands: gen-scenes, collect, train, eval, compare, ablate-memory,
replay, inspect. One YAML config file feeds every stage; flags override
file values; the resolved config's hash is stamped into every artifact.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import artifacts, config as cfg
from .collect import collect_dataset, write_dataset, read_dataset
from .decide import FEATURE_DIM, FEATURE_SPEC_VERSION, train
from .evaluate import (
    EvalOptions,
    HeuristicPolicy,
    LearnedPolicy,
    ScriptedPolicy,
    compare_scorers,
    evaluate_policy,
    memory_ablation,
    run_episode,
)
from .mapping import extract_frontiers, frontier_to_dict, write_pgm
from .report import write_ablation_report, write_compare_report, write_eval_report
from .scene import GenerationError, generate_episodes, generate_scene


def _out_path(path: str) -> str:
    root = os.environ.get("MEMNAV_OUT")
    if root and not os.path.isabs(path):
        return os.path.join(root, path)
    return path


def _default_jobs() -> int:
    return int(os.environ.get("MEMNAV_JOBS", "1"))


def _load(args) -> dict:
    overrides: dict = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return cfg.load_config(getattr(args, "config", None), overrides)


def cmd_gen_scenes(args) -> int:
    conf = _load(args)
    chash = cfg.config_hash(conf)
    params = cfg.scene_params(conf)
    epi = conf["episodes"]
    out_dir = _out_path(args.out)
    os.makedirs(out_dir, exist_ok=True)
    for i in range(conf["scenes"]["count"]):
        scene = generate_scene(params, seed=conf["seed"] * 10_007 + i)
        episodes = generate_episodes(
            scene,
            count=epi["per_scene"],
            goals_per_episode=epi["goals_per_episode"],
            seed=conf["seed"],
            goal_kinds=tuple(epi["goal_kinds"]),
            description_sigma=epi["description_sigma"],
            sequential=epi["sequential"],
            revisit_heavy=epi["revisit_heavy"],
            max_steps=epi["max_steps"],
        )
        artifacts.write_scene_bundle(
            os.path.join(out_dir, f"scene_{i:04d}.json"), scene, episodes, chash
        )
    print(f"wrote {conf['scenes']['count']} scene bundles to {out_dir}")
    return 0


def cmd_collect(args) -> int:
    conf = _load(args)
    if args.mix:
        conf["collect"]["mix"] = {s.name: w for s, w in cfg.parse_mix(args.mix)}
    chash = cfg.config_hash(conf)
    bundles = artifacts.read_scene_dir(_out_path(args.scenes))
    records, manifest = collect_dataset(
        bundles,
        cfg.strategy_mix(conf),
        seed=conf["seed"],
        noise=cfg.noise_params(conf),
        sensor=cfg.sensor_config(conf),
        epsilon=conf["memory"]["epsilon"],
        pre_explored_frac=conf["collect"]["pre_explored_frac"],
        jobs=args.jobs,
    )
    manifest["config_hash"] = chash
    out_dir = _out_path(args.out)
    write_dataset(records, manifest, out_dir)
    print(
        f"collected {manifest['records']} records from {manifest['episodes']} episodes "
        f"-> {out_dir} (statuses: {manifest['status_counts']})"
    )
    return 0


def cmd_train(args) -> int:
    conf = _load(args)
    chash = cfg.config_hash(conf)
    records, _manifest = read_dataset(_out_path(args.data))
    if not records:
        print("error: dataset contains no records", file=sys.stderr)
        return 2
    model, log = train(records, cfg.train_params(conf), seed=conf["seed"])
    out = _out_path(args.out)
    artifacts.write_model(out, model, chash, log)
    print(
        f"trained on {len(records)} records: loss {log['initial_loss']:.4f} -> "
        f"{log['final_loss']:.4f}; wrote {out}"
    )
    return 0


def _policy_from_args(args, conf):
    spec = getattr(args, "policy", None) or "learned"
    if spec == "heuristic":
        return HeuristicPolicy(conf["eval"]["heuristic_tau"])
    if spec != "learned":
        raise cfg.ConfigError(f"unknown policy {spec!r}")
    if not getattr(args, "model", None):
        raise cfg.ConfigError("--model is required for the learned policy")
    model, _ = artifacts.read_model(_out_path(args.model))
    return LearnedPolicy(model)


def _policy_from_spec(spec: str, conf):
    if spec == "heuristic":
        return HeuristicPolicy(conf["eval"]["heuristic_tau"]), "heuristic"
    model, _ = artifacts.read_model(_out_path(spec))
    return LearnedPolicy(model), os.path.basename(spec)


def _pairs(bundles):
    return [(scene, ep) for scene, episodes in bundles for ep in episodes]


def cmd_eval(args) -> int:
    conf = _load(args)
    chash = cfg.config_hash(conf)
    bundles = artifacts.read_scene_dir(_out_path(args.episodes))
    pairs = _pairs(bundles)
    policy = _policy_from_args(args, conf)
    budgets = tuple(
        int(b) for b in (args.budgets.split(",") if args.budgets else conf["eval"]["budgets"])
    )
    options = cfg.eval_options(conf)
    report, results = evaluate_policy(
        pairs, policy, options, budgets=budgets, jobs=args.jobs, config_hash=chash
    )
    out_csv = _out_path(args.out)
    os.makedirs(os.path.dirname(out_csv) or ".", exist_ok=True)
    write_eval_report(out_csv, report, results)
    if args.trace_dir:
        _write_traces(args, conf, bundles, results, chash)
    if args.dump_maps:
        _dump_maps(args, conf, bundles, policy, options)
    print(
        f"evaluated {report.sub_episodes} sub-episodes: SR {report.sr:.3f} "
        f"SPL {report.spl:.3f} -> {out_csv}"
    )
    return 0


def _write_traces(args, conf, bundles, results, chash) -> None:
    trace_dir = _out_path(args.trace_dir)
    os.makedirs(trace_dir, exist_ok=True)
    names = sorted(
        n for n in os.listdir(_out_path(args.episodes))
        if n.startswith("scene_") and n.endswith(".json")
    )
    idx = 0
    for bi, (scene, episodes) in enumerate(bundles):
        for ei, _ep in enumerate(episodes):
            result = results[idx]
            artifacts.write_json(
                os.path.join(trace_dir, f"trace_{idx:04d}.json"),
                {
                    "format_version": artifacts.FORMAT_VERSION,
                    "kind": "episode_trace",
                    "config_hash": chash,
                    "scene_file": names[bi],
                    "episode_index": ei,
                    "pair_index": idx,
                    "decisions": [[list(d) for d in sub] for sub in result.decisions],
                    "result": result.to_dict(),
                },
            )
            idx += 1


def _dump_maps(args, conf, bundles, policy, options) -> None:
    from .driver import EpisodeDriver  # local: only used for map dumps

    dump_dir = _out_path(args.dump_maps)
    os.makedirs(dump_dir, exist_ok=True)
    idx = 0
    for scene, episodes in bundles:
        for ep in episodes:
            sink: list = []
            run_episode(scene, ep, policy, options,
                        episode_seed=int(options.seed) * 1_000_003 + idx,
                        driver_sink=sink)
            driver = sink[0]
            write_pgm(driver.grid, os.path.join(dump_dir, f"grid_{idx:04d}.pgm"))
            artifacts.write_json(
                os.path.join(dump_dir, f"frontiers_{idx:04d}.json"),
                {
                    "format_version": artifacts.FORMAT_VERSION,
                    "kind": "frontier_dump",
                    "frontiers": [
                        frontier_to_dict(f)
                        for f in extract_frontiers(driver.grid, driver.visited)
                    ],
                },
            )
            idx += 1


def cmd_compare(args) -> int:
    conf = _load(args)
    bundles = artifacts.read_scene_dir(_out_path(args.episodes))
    pairs = _pairs(bundles)
    policy_a, label_a = _policy_from_spec(args.model_a, conf)
    policy_b, label_b = _policy_from_spec(args.model_b, conf)
    budgets = tuple(
        int(b) for b in (args.budgets.split(",") if args.budgets else conf["eval"]["budgets"])
    )
    rows = compare_scorers(
        pairs, policy_a, policy_b, budgets, cfg.eval_options(conf),
        seed=conf["seed"], jobs=args.jobs,
    )
    out_dir = _out_path(args.out)
    write_compare_report(out_dir, rows, label_a, label_b)
    print(f"compared {label_a} vs {label_b} over {len(pairs)} episodes -> {out_dir}")
    return 0


def cmd_ablate_memory(args) -> int:
    conf = _load(args)
    bundles = artifacts.read_scene_dir(_out_path(args.episodes))
    pairs = _pairs(bundles)
    policy = _policy_from_args(args, conf)
    rows = memory_ablation(pairs, policy, cfg.eval_options(conf), jobs=args.jobs)
    out_dir = _out_path(args.out)
    write_ablation_report(out_dir, rows)
    print(f"memory ablation over {len(pairs)} episodes -> {out_dir}")
    return 0


def cmd_replay(args) -> int:
    conf = _load(args)
    trace = artifacts.read_json(_out_path(args.trace))
    if trace.get("kind") != "episode_trace":
        raise artifacts.ArtifactError(f"{args.trace}: not an episode trace")
    scene, episodes, _ = artifacts.read_scene_bundle(
        os.path.join(_out_path(args.episodes), trace["scene_file"])
    )
    episode = episodes[trace["episode_index"]]
    policy = ScriptedPolicy([[tuple(d) for d in sub] for sub in trace["decisions"]])
    options = cfg.eval_options(conf)
    result = run_episode(
        scene, episode, policy, options,
        episode_seed=int(options.seed) * 1_000_003 + trace["pair_index"],
    )
    replayed = result.to_dict()
    if args.out:
        artifacts.write_json(_out_path(args.out), replayed)
    if replayed != trace["result"]:
        print("replay mismatch: stored and recomputed results differ", file=sys.stderr)
        return 1
    print("replay matches the stored result")
    return 0


def _inspect_violations(path: str) -> tuple[str, dict, list[str]]:
    """Returns (summary, meta, violations) for any known artifact."""
    import json

    if os.path.isdir(path):
        path = os.path.join(path, "manifest.json")
    data = artifacts.read_json(path)
    if "format_version" in data and data["format_version"] != artifacts.FORMAT_VERSION:
        raise artifacts.ArtifactError(
            f"{path}: format_version {data['format_version']} "
            f"(this build reads {artifacts.FORMAT_VERSION})"
        )
    violations: list[str] = []

    if data.get("kind") == "scene_bundle":
        scene, episodes, _ = artifacts.read_scene_bundle(path)
        free = scene.free_mask()
        for o in scene.objects:
            fp = o.box.footprint()
            if not (
                scene.bounds[0] <= fp[0] and fp[2] <= scene.bounds[2]
                and scene.bounds[1] <= fp[1] and fp[3] <= scene.bounds[3]
            ):
                violations.append(f"object {o.id} outside bounds")
            for n, emb in (("category", o.category_embedding), ("instance", o.instance_embedding)):
                if abs(float(np.linalg.norm(emb)) - 1.0) > 1e-6:
                    violations.append(f"object {o.id} {n} embedding not unit norm")
        wall_rects = scene.wall_rects()
        for o in scene.objects:
            fp = o.box.footprint()
            overlap = (
                (wall_rects[:, 0] < fp[2]) & (fp[0] < wall_rects[:, 2])
                & (wall_rects[:, 1] < fp[3]) & (fp[1] < wall_rects[:, 3])
            )
            if overlap.any():
                violations.append(f"object {o.id} intersects a wall")
        ids = {o.id for o in scene.objects}
        for ei, ep in enumerate(episodes):
            cell = (
                int((ep.start_pose[0] - scene.bounds[0]) / scene.resolution),
                int((ep.start_pose[1] - scene.bounds[1]) / scene.resolution),
            )
            if not free[cell[1], cell[0]]:
                violations.append(f"episode {ei} start pose not in free space")
            for g in ep.goals:
                flat = (
                    [t for step in g.target_ids for t in step]
                    if g.kind == "task_steps"
                    else list(g.target_ids)
                )
                missing = [t for t in flat if t not in ids]
                if missing:
                    violations.append(f"episode {ei} goal targets missing: {missing}")
        summary = (
            f"scene bundle: {len(scene.objects)} objects, {len(scene.walls)} walls, "
            f"{len(episodes)} episodes"
        )
        return summary, data, violations

    if data.get("kind") == "scorer_model":
        h, f = data["hidden"], data["feature_dim"]
        expect = f * h + 2 * h + 1
        got = (
            len(data["w1"]) * len(data["w1"][0]) + len(data["b1"]) + len(data["w2"]) + 1
        )
        if got != expect:
            violations.append(f"parameter count {got} != {expect}")
        if f != FEATURE_DIM:
            violations.append(f"feature_dim {f} != {FEATURE_DIM}")
        return f"scorer model: {f}->{h}->1, {got} parameters", data, violations

    if "shards" in data:  # dataset manifest
        base = os.path.dirname(path)
        count = 0
        for shard in data["shards"]:
            with open(os.path.join(base, shard["file"])) as fh:
                for line in fh:
                    rec = json.loads(line)
                    n = len(rec["candidates"])
                    if not (0 <= rec["label"] < n):
                        violations.append(
                            f"{shard['file']}: record {count} label {rec['label']} "
                            f"out of range (candidates {n})"
                        )
                    bad_ign = [i for i in rec["ignore"] if not 0 <= i < n or i == rec["label"]]
                    if bad_ign:
                        violations.append(
                            f"{shard['file']}: record {count} bad ignore indices {bad_ign}"
                        )
                    for c in rec["candidates"]:
                        if len(c["features"]) != FEATURE_DIM:
                            violations.append(
                                f"{shard['file']}: record {count} feature dim "
                                f"{len(c['features'])} != {FEATURE_DIM}"
                            )
                            break
                    count += 1
        if count != data.get("records"):
            violations.append(f"record count {count} != manifest {data.get('records')}")
        if data.get("feature_spec_version") != FEATURE_SPEC_VERSION:
            violations.append("feature spec version mismatch")
        summary = f"dataset: {count} records in {len(data['shards'])} shards"
        return summary, data, violations

    if "sr" in data and "spl" in data:  # benchmark report
        if data["spl"] > data["sr"] + 1e-12:
            violations.append(f"SPL {data['spl']} exceeds SR {data['sr']}")
        return (
            f"report: SR {data['sr']:.3f} SPL {data['spl']:.3f} over "
            f"{data.get('sub_episodes')} sub-episodes"
        ), data, violations

    if data.get("kind") == "episode_trace":
        n = sum(len(sub) for sub in data["decisions"])
        return f"episode trace: {n} decisions", data, violations

    raise artifacts.ArtifactError(f"{path}: unrecognized artifact")


def cmd_inspect(args) -> int:
    summary, meta, violations = _inspect_violations(_out_path(args.path))
    print(summary)
    if "format_version" in meta:
        print(f"format_version: {meta['format_version']}")
    if meta.get("config_hash"):
        print(f"config_hash: {meta['config_hash']}")
    for v in violations:
        print(f"violation: {v}")
    return 1 if violations else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memnav",
        description="Spatial-memory exploration agent: scenes, data, training, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, jobs=True):
        p.add_argument("--config", help="YAML run config (defaults apply if omitted)")
        p.add_argument("--seed", type=int, help="override the config seed")
        if jobs:
            p.add_argument("--jobs", type=int, default=_default_jobs(),
                           help="parallel episode workers (env MEMNAV_JOBS)")

    p = sub.add_parser("gen-scenes", help="generate scene+episode bundles")
    p.add_argument("--params", dest="config", help="YAML run config")
    common(p, jobs=False)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_scenes)

    p = sub.add_parser("collect", help="collect decision records from scenes")
    common(p)
    p.add_argument("--scenes", required=True)
    p.add_argument("--mix", help="e.g. optimal=0.5,random=0.3,hybrid:0.5=0.2")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("train", help="train the decision scorer")
    common(p, jobs=False)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a policy on episodes")
    common(p)
    p.add_argument("--model")
    p.add_argument("--policy", choices=["learned", "heuristic"], default="learned")
    p.add_argument("--episodes", required=True)
    p.add_argument("--budgets", help="comma-separated decision budgets for the curve")
    p.add_argument("--trace-dir", help="write per-episode decision traces here")
    p.add_argument("--dump-maps", help="write final occupancy PGMs and frontier dumps here")
    p.add_argument("--out", required=True, help="report CSV path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="paired comparison of two policies")
    common(p)
    p.add_argument("--model-a", required=True, help="model path or 'heuristic'")
    p.add_argument("--model-b", required=True, help="model path or 'heuristic'")
    p.add_argument("--episodes", required=True)
    p.add_argument("--budgets")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ablate-memory", help="memory kept vs reset per sub-episode")
    common(p)
    p.add_argument("--model")
    p.add_argument("--policy", choices=["learned", "heuristic"], default="learned")
    p.add_argument("--episodes", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_ablate_memory)

    p = sub.add_parser("replay", help="re-execute a stored decision trace")
    common(p, jobs=False)
    p.add_argument("--trace", required=True)
    p.add_argument("--episodes", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("inspect", help="summarize and validate an artifact")
    p.add_argument("path")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (artifacts.ArtifactError, cfg.ConfigError, GenerationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
