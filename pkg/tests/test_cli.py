import json

import pytest

pytest.importorskip("faiss")

from src.app.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main  # noqa: E402
from src.core.dataset import load_dataset  # noqa: E402
from src.core.layout import BiosignalGroup, BiosignalLayout  # noqa: E402
from src.synthgen.generator import SynthSpec  # noqa: E402

SMALL = SynthSpec(
    classes=3,
    trials_per_class=4,
    layout=BiosignalLayout(groups=(BiosignalGroup("emg", 3, 129.0), BiosignalGroup("imu", 2, 33.0))),
    active_channels_per_class=3,
    participants=2,
    variation_trials=2,
    variation_classes=1,
)

RECOGNIZER_FLAGS = ["--n", "16", "--npc", "3"]


def stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


@pytest.fixture
def spec_file(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(SMALL.to_dict()))
    return path


@pytest.fixture
def dataset(tmp_path, spec_file, capsys):
    out = tmp_path / "synth"
    assert main(["synth", "--spec", str(spec_file), "--seed", "7", "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    return out


class TestSynth:
    def test_writes_dataset_and_audit(self, tmp_path, spec_file, capsys):
        out = tmp_path / "synth"
        code = main(["synth", "--spec", str(spec_file), "--seed", "7", "--classes", "2", "--out", str(out)])
        assert code == EXIT_OK
        data = stdout_json(capsys)
        assert data["spec"]["seed"] == 7
        assert data["spec"]["classes"] == 2
        assert sorted(data["audit"]) == ["P001", "P002"]
        assert data["gestures"] == len(load_dataset(out).gestures)

    def test_same_seed_same_bytes(self, tmp_path, spec_file, capsys):
        for name in ("a", "b"):
            assert main(["synth", "--spec", str(spec_file), "--seed", "7", "--out", str(tmp_path / name)]) == EXIT_OK
        capsys.readouterr()
        assert (tmp_path / "a" / "gestures.jsonl").read_bytes() == (tmp_path / "b" / "gestures.jsonl").read_bytes()

    def test_seed_is_required(self, tmp_path, capsys):
        assert main(["synth", "--out", str(tmp_path / "x")]) == EXIT_USAGE
        assert "--seed" in capsys.readouterr().err

    def test_unknown_spec_field(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"shape": "circle"}))
        assert main(["synth", "--spec", str(bad), "--seed", "1", "--out", str(tmp_path / "x")]) == EXIT_DATA
        assert "shape" in capsys.readouterr().err


class TestPipeline:
    def test_segment(self, tmp_path, dataset, capsys):
        out = tmp_path / "cropped"
        assert main(["segment", "--dataset", str(dataset), "--out", str(out)]) == EXIT_OK
        data = stdout_json(capsys)
        bounds = json.loads((out / "bounds.json").read_text())
        assert len(bounds) == data["gestures"] == len(load_dataset(out).gestures)
        assert all(0.0 <= b["start_s"] < b["stop_s"] for b in bounds)

    def test_preprocess(self, tmp_path, dataset, capsys):
        out = tmp_path / "env"
        assert main(["preprocess", "--dataset", str(dataset), "--out", str(out)]) == EXIT_OK
        data = stdout_json(capsys)
        assert data["emg_groups"] == ["emg"]
        assert load_dataset(out).layout.group("emg").sample_rate_hz == pytest.approx(129.0 / 6)

    def test_preprocess_unknown_group(self, tmp_path, dataset, capsys):
        code = main(["preprocess", "--dataset", str(dataset), "--out", str(tmp_path / "env"), "--emg-groups", "eeg"])
        assert code == EXIT_DATA
        assert "eeg" in capsys.readouterr().err

    def test_enroll_then_recognize(self, tmp_path, dataset, capsys):
        store = tmp_path / "templates.json"
        code = main(["enroll", "--dataset", str(dataset), "--out", str(store),
                     "--participant", "P001", "--condition", "personalized", *RECOGNIZER_FLAGS])
        assert code == EXIT_OK
        assert stdout_json(capsys)["templates"] == 12

        assert main(["recognize", "--templates", str(store), "--dataset", str(dataset), "--index", "0"]) == EXIT_OK
        result = stdout_json(capsys)
        # gesture 0 is itself one of the templates
        assert result["matched_template_index"] == 0
        assert result["distance"] == pytest.approx(0.0, abs=1e-9)
        assert len(result["all_distances"]) == 12

    def test_recognize_without_templates(self, tmp_path, dataset, capsys):
        store = tmp_path / "empty.json"
        assert main(["enroll", "--dataset", str(dataset), "--out", str(store), "--participant", "P999",
                     *RECOGNIZER_FLAGS]) == EXIT_OK
        capsys.readouterr()
        assert main(["recognize", "--templates", str(store), "--dataset", str(dataset)]) == EXIT_DATA
        assert "no templates" in capsys.readouterr().err

    def test_recognize_index_out_of_range(self, tmp_path, dataset, capsys):
        store = tmp_path / "templates.json"
        main(["enroll", "--dataset", str(dataset), "--out", str(store), "--participant", "P001", *RECOGNIZER_FLAGS])
        capsys.readouterr()
        assert main(["recognize", "--templates", str(store), "--dataset", str(dataset), "--index", "9999"]) == EXIT_DATA

    def test_recognize_with_malformed_store(self, tmp_path, dataset, capsys):
        store = tmp_path / "templates.json"
        main(["enroll", "--dataset", str(dataset), "--out", str(store), "--participant", "P001", *RECOGNIZER_FLAGS])
        capsys.readouterr()
        raw = json.loads(store.read_text())
        del raw["templates"][0]["label"]
        store.write_text(json.dumps(raw))
        assert main(["recognize", "--templates", str(store), "--dataset", str(dataset)]) == EXIT_DATA
        assert "template 0 is malformed" in capsys.readouterr().err


class TestEvaluate:
    def test_user_dependent_report(self, tmp_path, dataset, capsys):
        out = tmp_path / "reports" / "ud.json"
        code = main(["evaluate", "--protocol", "ud", "--dataset", str(dataset), "--seed", "3",
                     "--T", "1", "2", "--reps", "2", "--out", str(out), *RECOGNIZER_FLAGS])
        assert code == EXIT_OK
        data = stdout_json(capsys)
        assert [row["T"] for row in data["summary"]] == [1, 2]
        report = json.loads(out.read_text())
        assert report["config"]["repetitions"] == 2
        assert out.with_suffix(".csv").exists()

    def test_reports_are_reproducible(self, tmp_path, dataset, capsys):
        args = ["evaluate", "--protocol", "ui", "--dataset", str(dataset), "--seed", "3",
                "--T", "1", "--reps", "2", *RECOGNIZER_FLAGS]
        assert main([*args, "--out", str(tmp_path / "a.json")]) == EXIT_OK
        assert main([*args, "--out", str(tmp_path / "b.json")]) == EXIT_OK
        capsys.readouterr()
        assert (tmp_path / "a.json").read_text() == (tmp_path / "b.json").read_text()

    def test_config_file_supplies_options(self, tmp_path, dataset, capsys):
        cfg = tmp_path / "eval.json"
        cfg.write_text(json.dumps({"protocol": "var", "T": [1], "reps": 1, "n": 16, "npc": 3, "seed": 0}))
        out = tmp_path / "var.json"
        code = main(["evaluate", "--config", str(cfg), "--dataset", str(dataset), "--out", str(out), "--reps", "2"])
        assert code == EXIT_OK
        report = json.loads(out.read_text())
        assert report["protocol"] == "articulation_variability"
        # explicit flags win over the file
        assert report["config"]["repetitions"] == 2

    def test_config_file_unknown_key(self, tmp_path, dataset, capsys):
        cfg = tmp_path / "eval.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        code = main(["evaluate", "--config", str(cfg), "--dataset", str(dataset), "--out", str(tmp_path / "x.json")])
        assert code == EXIT_USAGE
        assert "bogus" in capsys.readouterr().err

    def test_missing_dataset(self, tmp_path, capsys):
        code = main(["evaluate", "--protocol", "ud", "--dataset", str(tmp_path / "nope"), "--seed", "1",
                     "--out", str(tmp_path / "x.json")])
        assert code == EXIT_DATA


@pytest.mark.slow
def test_default_corpus_end_to_end(tmp_path, capsys):
    data = tmp_path / "d"
    assert main(["synth", "--seed", "7", "--classes", "10", "--trials", "10", "--participants", "1",
                 "--out", str(data)]) == EXIT_OK
    capsys.readouterr()
    out = tmp_path / "ud.json"
    code = main(["evaluate", "--protocol", "ud", "--dataset", str(data), "--T", "9", "--reps", "20",
                 "--seed", "7", "--out", str(out)])
    assert code == EXIT_OK
    assert stdout_json(capsys)["summary"][0]["mean_error_rate"] <= 0.05


class TestUsage:
    def test_unknown_flag(self, capsys):
        assert main(["bench", "--frobnicate"]) == EXIT_USAGE
        assert "❌" in capsys.readouterr().err

    def test_flag_prefixes_are_not_expanded(self, tmp_path, capsys):
        code = main(["evaluate", "--protocol", "ud", "--dataset", str(tmp_path), "--seed", "1",
                     "--out", str(tmp_path / "x.json"), "--rep", "2"])
        assert code == EXIT_USAGE
        assert "--rep" in capsys.readouterr().err

    def test_unknown_command(self):
        assert main(["train"]) == EXIT_USAGE

    def test_help_exits_cleanly(self, capsys):
        assert main(["--help"]) == EXIT_OK
        assert "evaluate" in capsys.readouterr().out

    def test_bench_on_dataset(self, dataset, capsys):
        code = main(["bench", "--dataset", str(dataset), "--seed", "0", "--templates-count", "3",
                     "--runs", "2", "--warmup", "0", *RECOGNIZER_FLAGS])
        assert code == EXIT_OK
        data = stdout_json(capsys)
        assert data["source"] == "dataset"
        assert data["runs"] == 2
