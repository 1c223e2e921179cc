import json
import os

import pytest

from memnav.cli import main

CONFIG = os.path.join(os.path.dirname(__file__), "..", "configs", "smoke.yaml")


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One full gen-scenes -> collect -> train -> eval run on the smoke config."""
    root = tmp_path_factory.mktemp("pipeline")
    scenes = str(root / "scenes")
    data = str(root / "data")
    model = str(root / "model.json")
    report = str(root / "report.csv")
    traces = str(root / "traces")
    assert main(["gen-scenes", "--params", CONFIG, "--out", scenes]) == 0
    assert main(["collect", "--config", CONFIG, "--scenes", scenes, "--out", data]) == 0
    assert main(["train", "--config", CONFIG, "--data", data, "--out", model]) == 0
    assert main([
        "eval", "--config", CONFIG, "--model", model, "--episodes", scenes,
        "--out", report, "--trace-dir", traces,
    ]) == 0
    return {"root": root, "scenes": scenes, "data": data, "model": model,
            "report": report, "traces": traces}


class TestPipeline:
    def test_artifacts_exist(self, pipeline):
        root = pipeline["root"]
        assert sorted(p.name for p in (root / "scenes").iterdir()) == [
            "scene_0000.json", "scene_0001.json", "scene_0002.json"
        ]
        assert (root / "data" / "manifest.json").exists()
        assert (root / "model.json").exists()
        assert (root / "report.csv").exists()
        assert (root / "report.json").exists()
        assert (root / "report_curve.csv").exists()
        assert (root / "report_curve.png").exists()

    def test_report_embeds_config_hash(self, pipeline):
        report = json.loads((pipeline["root"] / "report.json").read_text())
        scene = json.loads((pipeline["root"] / "scenes" / "scene_0000.json").read_text())
        manifest = json.loads((pipeline["root"] / "data" / "manifest.json").read_text())
        assert report["config_hash"] == scene["config_hash"] == manifest["config_hash"]
        assert len(report["config_hash"]) == 16

    def test_inspect_every_artifact(self, pipeline, capsys):
        for target in (
            str(pipeline["root"] / "scenes" / "scene_0000.json"),
            pipeline["data"],
            pipeline["model"],
            str(pipeline["root"] / "report.json"),
        ):
            assert main(["inspect", target]) == 0, target
            out = capsys.readouterr().out
            assert "violation" not in out

    def test_inspect_dataset_counts(self, pipeline, capsys):
        assert main(["inspect", pipeline["data"]]) == 0
        out = capsys.readouterr().out
        manifest = json.loads((pipeline["root"] / "data" / "manifest.json").read_text())
        assert f"{manifest['records']} records" in out

    def test_inspect_model_param_count(self, pipeline, capsys):
        assert main(["inspect", pipeline["model"]]) == 0
        out = capsys.readouterr().out
        assert "6->8->1" in out
        assert f"{6 * 8 + 2 * 8 + 1} parameters" in out

    def test_inspect_tampered_shard_flags_violation(self, pipeline, tmp_path, capsys):
        import shutil

        broken = tmp_path / "broken"
        shutil.copytree(pipeline["data"], broken)
        shard = next(p for p in broken.iterdir() if p.suffix == ".jsonl")
        lines = shard.read_text().splitlines()
        rec = json.loads(lines[0])
        rec["label"] = 10_000
        lines[0] = json.dumps(rec, sort_keys=True)
        shard.write_text("\n".join(lines) + "\n")
        assert main(["inspect", str(broken)]) == 1
        assert "violation" in capsys.readouterr().out

    def test_replay_traces_verify(self, pipeline, capsys):
        traces = sorted(os.listdir(pipeline["traces"]))
        assert traces
        code = main([
            "replay", "--config", CONFIG, "--trace",
            os.path.join(pipeline["traces"], traces[0]),
            "--episodes", pipeline["scenes"],
        ])
        assert code == 0
        assert "matches" in capsys.readouterr().out

    def test_compare_and_ablate_outputs(self, pipeline, tmp_path):
        cmp_dir = str(tmp_path / "cmp")
        code = main([
            "compare", "--config", CONFIG, "--model-a", pipeline["model"],
            "--model-b", "heuristic", "--episodes", pipeline["scenes"],
            "--budgets", "2,4", "--out", cmp_dir,
        ])
        assert code == 0
        assert {p for p in os.listdir(cmp_dir)} == {
            "compare.csv", "compare.json", "compare.png"
        }
        abl_dir = str(tmp_path / "abl")
        code = main([
            "ablate-memory", "--config", CONFIG, "--model", pipeline["model"],
            "--episodes", pipeline["scenes"], "--out", abl_dir,
        ])
        assert code == 0
        assert {p for p in os.listdir(abl_dir)} == {
            "ablation.csv", "ablation.json", "ablation.png"
        }

    def test_eval_heuristic_policy_without_model(self, pipeline, tmp_path):
        out = str(tmp_path / "h.csv")
        code = main([
            "eval", "--config", CONFIG, "--policy", "heuristic",
            "--episodes", pipeline["scenes"], "--out", out,
        ])
        assert code == 0


class TestErrors:
    def test_unknown_flag_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["eval", "--bogus-flag", "x"])
        assert exc.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_missing_file_one_line_error(self, capsys):
        code = main(["train", "--data", "/nonexistent/dir", "--out", "/tmp/x.json"])
        assert code == 2
        err = capsys.readouterr().err
        assert err.startswith("error:")
        assert len(err.strip().splitlines()) == 1

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("sceness:\n  count: 3\n")
        code = main(["gen-scenes", "--params", str(bad), "--out", str(tmp_path / "s")])
        assert code == 2
        assert "unknown config key" in capsys.readouterr().err

    def test_schema_version_mismatch_rejected(self, tmp_path, capsys):
        model = tmp_path / "m.json"
        model.write_text(json.dumps({"format_version": 99, "kind": "scorer_model"}))
        code = main(["inspect", str(model)])
        assert code == 2
        assert "format_version" in capsys.readouterr().err

    def test_corrupt_artifact_reported(self, tmp_path, capsys):
        bad = tmp_path / "broken.json"
        bad.write_text("{not json")
        assert main(["inspect", str(bad)]) == 2
        assert capsys.readouterr().err.startswith("error:")
