import json

import numpy as np
import pytest

from lesionscreen.cli import build_parser, main
from lesionscreen.reporting import (
    ReportingError,
    emit_exploration_plot_data,
    summary_table,
)

SUBCOMMANDS = ["validate", "folds", "cv", "stats", "xai", "quantize", "bench",
               "embed", "serve", "report"]


@pytest.mark.parametrize("command", SUBCOMMANDS)
def test_help_exits_zero_and_documents_flags(command, capsys):
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args([command, "--help"])
    assert excinfo.value.code == 0
    assert "--" in capsys.readouterr().out


def test_unknown_subcommand_exit_code():
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args(["frobnicate"])
    assert excinfo.value.code == 1


def test_validate_happy_path(mcsi_like_manifest_path, tmp_path, capsys):
    code = main(["validate", "--manifest", str(mcsi_like_manifest_path),
                 "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "validation_report.json").read_text())
    assert report["passed"] is True
    out = capsys.readouterr().out
    assert out.count("PASS") == 4


def test_validate_failing_dataset_exit_two(tmp_path, capsys):
    from conftest import build_dataset

    manifest_path = build_dataset(tmp_path / "ds", per_class=2)
    next((tmp_path / "ds" / "acne").iterdir()).unlink()
    code = main(["validate", "--manifest", str(manifest_path), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "FAIL" in capsys.readouterr().out


def test_missing_manifest_is_config_error(tmp_path):
    assert main(["validate", "--manifest", str(tmp_path / "nope.csv")]) == 1
    assert main(["folds"]) == 1


def test_folds_deterministic_bytes(mcsi_like_manifest_path, tmp_path):
    for sub in ("a", "b"):
        code = main(["folds", "--manifest", str(mcsi_like_manifest_path),
                     "--k", "10", "--seed", "42", "--out", str(tmp_path / sub)])
        assert code == 0
    assert (tmp_path / "a" / "fold_plan.json").read_bytes() == \
        (tmp_path / "b" / "fold_plan.json").read_bytes()


def test_config_file_with_flag_override(mcsi_like_manifest_path, tmp_path):
    config = tmp_path / "config.yaml"
    config.write_text(f"manifest: {mcsi_like_manifest_path}\nk: 5\nseed: 3\n")
    code = main(["folds", "--config", str(config), "--k", "4",
                 "--out", str(tmp_path / "out")])
    assert code == 0
    plan = json.loads((tmp_path / "out" / "fold_plan.json").read_text())
    assert plan["k"] == 4 and plan["seed"] == 3


def test_unknown_config_field_rejected(tmp_path):
    config = tmp_path / "config.yaml"
    config.write_text("manifst: typo.csv\n")
    assert main(["folds", "--config", str(config)]) == 1


def test_quantize_and_bench_cli(tmp_path):
    from lesionscreen.artifacts import save_artifact
    from lesionscreen.heads import HeadConfig
    from lesionscreen.labels import Task
    from lesionscreen.models import build_model

    model = build_model("mobilenetv3small", HeadConfig(1, (8,), (0.0,), 1e-3),
                        Task.BINARY, seed=41, image_size=32)
    save_artifact(model, tmp_path / "fp32")

    assert main(["quantize", "--model", str(tmp_path / "fp32"),
                 "--out", str(tmp_path / "fp16")]) == 0
    meta = json.loads((tmp_path / "fp16" / "meta.json").read_text())
    assert meta["precision"] == "fp16"

    report_path = tmp_path / "bench.json"
    assert main(["bench", "--model", str(tmp_path / "fp16"), "--runs", "3",
                 "--threads", "1", "--warmup", "1", "--out", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert report["n_runs"] == 3 and len(report["timings"]) == 3


def test_cv_stats_and_report_cli(tmp_path, small_manifest_path, monkeypatch):
    """End-to-end through the CLI with the stub trainer."""
    import lesionscreen.crossval as cv
    from test_crossval import ColorStubTrainer

    captured = {}
    original = cv.run_cross_validation

    def patched(manifest, backbone, task, **kwargs):
        kwargs["trainer"] = ColorStubTrainer(task.n_classes)
        kwargs["preprocess"] = None
        report = original(manifest, backbone, task, **kwargs)
        captured["report"] = report
        return report

    monkeypatch.setattr(cv, "run_cross_validation", patched)

    out = tmp_path / "run"
    code = main(["cv", "--manifest", str(small_manifest_path), "--backbone",
                 "mobilenetv3small", "--task", "binary", "--no-augment",
                 "--r", "2", "--eta", "2", "--k", "3", "--seed", "5",
                 "--out", str(out)])
    assert code == 0
    report_path = out / "cv_report_binary_mobilenetv3small.json"
    assert report_path.is_file()
    data = json.loads(report_path.read_text())
    assert set(data["mean"]) >= {"accuracy", "sensitivity", "specificity", "f1"}
    trial_log = out / "trials_binary_mobilenetv3small_fold0.jsonl"
    assert trial_log.is_file()

    # three reports for the omnibus comparison: reuse the same one
    reports = [str(report_path)] * 3
    stats_out = tmp_path / "stats"
    assert main(["stats", "--reports", *reports, "--out", str(stats_out)]) == 0
    comparison = json.loads((stats_out / "comparison_report.json").read_text())
    assert comparison["omnibus"]["p_value"] == pytest.approx(1.0)

    pair_out = tmp_path / "pair"
    assert main(["stats", "--pair", "--reports", str(report_path), str(report_path),
                 "--out", str(pair_out)]) == 0
    pair = json.loads((pair_out / "augmentation_comparison.json").read_text())
    assert pair["chosen"]["p_value"] == pytest.approx(1.0)

    report_out = tmp_path / "summary"
    assert main(["report", "--reports", str(report_path),
                 "--comparison", str(stats_out / "comparison_report.json"),
                 "--trial-logs", str(trial_log),
                 "--out", str(report_out)]) == 0
    summary = (report_out / "summary.md").read_text()
    assert "Accuracy" in summary
    exploration = json.loads(
        (report_out / "exploration_trials_binary_mobilenetv3small_fold0.json").read_text()
    )
    assert exploration["n_trials"] >= 1


def test_exploration_plot_data_contract():
    rows = [
        {"trial_id": 0, "bracket": 0, "rung": 0, "resource": 1, "score": 0.7,
         "failed": False, "learning_rate": 1e-4, "n_layers": 1, "dense_1": 256,
         "dropout_1": 0.1, "dense_2": 0, "dropout_2": 0.0, "dense_3": 0,
         "dropout_3": 0.0},
        {"trial_id": 1, "bracket": 0, "rung": 0, "resource": 1, "score": 0.9,
         "failed": False, "learning_rate": 2e-4, "n_layers": 2, "dense_1": 512,
         "dropout_1": 0.2, "dense_2": 256, "dropout_2": 0.1, "dense_3": 0,
         "dropout_3": 0.0},
        {"trial_id": 2, "bracket": 0, "rung": 1, "resource": 3, "score": 0.9,
         "failed": False, "learning_rate": 2e-4, "n_layers": 2, "dense_1": 512,
         "dropout_1": 0.2, "dense_2": 256, "dropout_2": 0.1, "dense_3": 0,
         "dropout_3": 0.0},
    ]
    data = emit_exploration_plot_data(rows)
    assert data["n_trials"] == 3
    assert all(len(series) == 3 for series in data["series"].values())
    # ties broken toward the lowest trial id
    assert data["best"]["trial_id"] == 1
    assert data["best"]["accuracy"] == 0.9

    single = emit_exploration_plot_data(rows[:1])
    assert single["best"]["trial_id"] == 0
    assert all(len(s) == 1 for s in single["series"].values())

    with pytest.raises(ReportingError, match="empty"):
        emit_exploration_plot_data([])


def test_summary_table_shape(small_manifest):
    from lesionscreen.crossval import run_cross_validation
    from lesionscreen.hpo import HyperbandConfig
    from lesionscreen.labels import Task
    from lesionscreen.preprocess import PreprocessConfig
    from test_crossval import ColorStubTrainer

    report = run_cross_validation(
        small_manifest, "stub", Task.BINARY, augment=False,
        hb=HyperbandConfig(1, 2, seed=0), k=2, seed=1,
        trainer=ColorStubTrainer(2),
        preprocess=PreprocessConfig(16, 16),
    )
    table = summary_table([report])
    assert "| binary | stub | no |" in table
    assert "(±" in table


def test_embed_cli(tmp_path, small_manifest_path):
    out = tmp_path / "embed"
    code = main(["embed", "--manifest", str(small_manifest_path),
                 "--backbone", "mobilenetv3small", "--task", "multiclass",
                 "--out", str(out)])
    assert code == 0
    data = np.load(out / "embeddings_mobilenetv3small.npz")
    assert data["embeddings"].shape == (32, 576)
    pca = json.loads((out / "pca_mobilenetv3small.json").read_text())
    assert len(pca["coordinates"]) == 32
    assert len(pca["coordinates"][0]) == 3
    assert len(pca["explained_variance"]) == 3
