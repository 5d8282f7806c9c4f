import filecmp
import json

import numpy as np
import pytest

from relap import data_model as dm
from relap import synth
from relap.cli import main

SPEC_TEXT = """\
seed: 11
frame_size: [480, 400]
laps_per_runner: 2
lap_gap: 900
runner_stagger: 120
distractors: 1
body_size: [48, 120]
noise: 0.02
runners:
  - {runner_id: amber, body_color: [224, 96, 32], shoe_color: [240, 220, 40], stride_period: 12, speed: 9.0}
  - {runner_id: blue, body_color: [32, 96, 224], shoe_color: [250, 250, 250], stride_period: 10, speed: 9.0}
"""


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds")
    spec = root / "spec.yaml"
    spec.write_text(SPEC_TEXT)
    data = root / "data"
    assert main(["synth", "--spec", str(spec), "--out", str(data)]) == 0
    return data


def run_pipeline(dataset, out_dir, extra=()):
    return main([
        "pipeline", "--detections", str(dataset / "detections.jsonl"),
        "--frame-width", "480", "--labels", str(dataset / "labels.json"),
        "--data-root", str(dataset), "--out-dir", str(out_dir), *extra,
    ])


class TestExitCodes:
    def test_missing_required_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["track"])
        assert exc.value.code == 2

    def test_unknown_command_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["transmogrify"])
        assert exc.value.code == 2

    def test_lambda_out_of_range_is_domain_error(self, dataset, tmp_path, capsys):
        out = tmp_path / "o"
        assert run_pipeline(dataset, out) == 0
        code = main([
            "reid", "--scenes", str(out / "scenes.json"),
            "--features", str(out / "features.json"),
            "--lambda", "1.5", "--out", str(tmp_path / "sim.json"),
        ])
        assert code == 1
        err = capsys.readouterr().err.strip().splitlines()[-1]
        assert err.startswith("error: LambdaOutOfRange:")

    def test_missing_input_file_is_domain_error(self, tmp_path, capsys):
        code = main(["track", "--detections", str(tmp_path / "nope.jsonl"),
                     "--out", str(tmp_path / "t.json")])
        assert code == 1
        assert "error: MissingFile:" in capsys.readouterr().err


class TestPipeline:
    def test_end_to_end_metrics(self, dataset, tmp_path):
        out = tmp_path / "out"
        assert run_pipeline(dataset, out) == 0
        rep = dm.read_eval(out / "eval.json")
        assert rep.map_score >= 0.99
        assert rep.rank1 == 1.0
        assert (out / "eval_table.txt").read_text().splitlines()[0].startswith("Method")

    def test_pipeline_equals_stage_sequence(self, dataset, tmp_path):
        a = tmp_path / "a"
        assert run_pipeline(dataset, a) == 0
        b = tmp_path / "b"
        b.mkdir()
        dets = str(dataset / "detections.jsonl")
        assert main(["track", "--detections", dets, "--out", str(b / "tracks.json")]) == 0
        assert main(["scenes", "--tracks", str(b / "tracks.json"), "--frame-width", "480",
                     "--data-root", str(dataset), "--out", str(b / "scenes.json")]) == 0
        assert main(["featurize", "--scenes", str(b / "scenes.json"),
                     "--data-root", str(dataset), "--out", str(b / "features.json")]) == 0
        assert main(["reid", "--scenes", str(b / "scenes.json"),
                     "--features", str(b / "features.json"),
                     "--out", str(b / "similarity.json")]) == 0
        assert main(["eval", "--similarity", str(b / "similarity.json"),
                     "--labels", str(dataset / "labels.json"),
                     "--scenes", str(b / "scenes.json"),
                     "--out", str(b / "eval.json")]) == 0
        for name in ("tracks.json", "scenes.json", "features.json",
                     "similarity.json", "eval.json"):
            assert filecmp.cmp(a / name, b / name, shallow=False), name

    def test_embedding_methods_from_external_files(self, dataset, tmp_path):
        out = tmp_path / "o"
        assert run_pipeline(dataset, out) == 0
        scenes = dm.read_scenes(out / "scenes.json")
        labels = dm.read_labels(dataset / "labels.json").resolve(scenes)
        rng = np.random.default_rng(5)
        anchors = {rid: rng.normal(size=32) for rid in set(labels.values())}
        emb_dir = tmp_path / "emb"
        for name in ("gruae", "hhcl_runner", "hhcl_shoe"):
            vectors = {
                s.scene_id: tuple(anchors[labels[s.scene_id]] + rng.normal(0, 0.05, size=32))
                for s in scenes
            }
            dm.write_embeddings(emb_dir / f"{name}.json", name, vectors)
        assert main(["featurize", "--scenes", str(out / "scenes.json"),
                     "--data-root", str(dataset), "--embeddings", str(emb_dir),
                     "--out", str(tmp_path / "features.json")]) == 0
        for method in ("embed_only(gruae)", "embed_with_color(gruae)",
                       "hhcl_with_shoes(hhcl_runner,hhcl_shoe)"):
            assert main(["reid", "--scenes", str(out / "scenes.json"),
                         "--features", str(tmp_path / "features.json"),
                         "--method", method, "--out", str(tmp_path / "sim.json")]) == 0
            m = dm.read_similarity(tmp_path / "sim.json")
            assert m.method_tag.startswith(method.split("(")[0])

    def test_sweep_and_report(self, dataset, tmp_path):
        out = tmp_path / "o"
        assert run_pipeline(dataset, out) == 0
        scenes = dm.read_scenes(out / "scenes.json")
        labels = dm.read_labels(dataset / "labels.json").resolve(scenes)
        rng = np.random.default_rng(6)
        anchors = {rid: rng.normal(size=16) for rid in set(labels.values())}
        emb_path = tmp_path / "gruae.json"
        dm.write_embeddings(emb_path, "gruae", {
            s.scene_id: tuple(anchors[labels[s.scene_id]]) for s in scenes
        })
        features = tmp_path / "features.json"
        assert main(["featurize", "--scenes", str(out / "scenes.json"),
                     "--data-root", str(dataset), "--embeddings", str(emb_path),
                     "--out", str(features)]) == 0
        sweep_path = tmp_path / "sweep.json"
        assert main(["sweep", "--scenes", str(out / "scenes.json"),
                     "--features", str(features), "--embed", "gruae",
                     "--grid", "0:1:0.25", "--labels", str(dataset / "labels.json"),
                     "--out", str(sweep_path)]) == 0
        doc = json.loads(sweep_path.read_text())
        assert len(doc["curve"]) == 5 and 0.0 <= doc["best_lambda"] <= 1.0

        report_dir = tmp_path / "report"
        assert main(["report", "--eval", str(out / "eval.json"),
                     "--similarity", str(out / "similarity.json"),
                     "--sweep", str(sweep_path), "--out-dir", str(report_dir)]) == 0
        for name in ("eval_summary.csv", "per_query_ap.csv", "per_query_ap.png",
                     "similarity_matrix.png", "sweep.csv", "sweep_curve.png",
                     "eval_table.txt"):
            assert (report_dir / name).is_file(), name

    def test_report_without_inputs_fails(self, tmp_path):
        assert main(["report", "--out-dir", str(tmp_path)]) == 1


class TestConfigPrecedence:
    def test_flag_overrides_file(self, dataset, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("lap:\n  th: 50\nfusion:\n  lam: 0.5\n")
        out = tmp_path / "o"
        assert run_pipeline(dataset, out, extra=["--config", str(cfg), "--th", "70"]) == 0
        echoed = json.loads((out / "similarity.json").read_text())["config"]
        assert echoed["lap"]["th"] == 70          # flag wins
        assert echoed["fusion"]["lam"] == 0.5     # file survives where no flag

    def test_env_overrides_file_but_not_flag(self, dataset, tmp_path, monkeypatch):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("lap:\n  th: 50\n")
        monkeypatch.setenv("RELAP_LAP__TH", "60")
        monkeypatch.setenv("RELAP_TRACKER__HIGH_THRESH", "0.65")
        out = tmp_path / "env_only"
        assert run_pipeline(dataset, out, extra=["--config", str(cfg)]) == 0
        echoed = json.loads((out / "similarity.json").read_text())["config"]
        assert echoed["lap"]["th"] == 60
        assert echoed["tracker"]["high_thresh"] == 0.65

        out2 = tmp_path / "flag_wins"
        assert run_pipeline(dataset, out2, extra=["--config", str(cfg), "--th", "70"]) == 0
        echoed2 = json.loads((out2 / "similarity.json").read_text())["config"]
        assert echoed2["lap"]["th"] == 70

    def test_unknown_config_key_rejected(self, dataset, tmp_path, capsys):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("tracker:\n  frobnicate: 3\n")
        out = tmp_path / "o"
        assert run_pipeline(dataset, out, extra=["--config", str(cfg)]) == 1
        assert "error: ConfigError:" in capsys.readouterr().err

    def test_workers_flag_does_not_change_artifacts(self, dataset, tmp_path):
        a, b = tmp_path / "w1", tmp_path / "w4"
        assert run_pipeline(dataset, a, extra=["--workers", "1"]) == 0
        assert run_pipeline(dataset, b, extra=["--workers", "4"]) == 0
        for name in ("tracks.json", "scenes.json", "features.json", "similarity.json"):
            a_doc = json.loads((a / name).read_text())
            b_doc = json.loads((b / name).read_text())
            a_doc.get("config", {}).pop("workers", None)
            b_doc.get("config", {}).pop("workers", None)
            assert a_doc == b_doc, name
