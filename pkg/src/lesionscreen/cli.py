"""Command-line entry point.

Subcommands: validate, folds, cv, stats, xai, quantize, bench, embed,
serve, report. Shared settings may come from a YAML config file
(``--config``); explicit flags always win. Exit codes: 0 success,
1 usage/config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, PipelineConfig, apply_overrides, load_config

USAGE_ERROR, RUNTIME_ERROR = 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _out_dir(args, config: PipelineConfig) -> Path:
    out = Path(args.out) if getattr(args, "out", None) else config.run_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _merged_config(args, require_manifest: bool) -> PipelineConfig:
    config = load_config(getattr(args, "config", None))
    overrides = {
        key: getattr(args, key, None)
        for key in ("manifest", "task", "k", "seed", "output_dir")
    }
    if getattr(args, "r", None) is not None:
        overrides["hyperband_r"] = args.r
    if getattr(args, "eta", None) is not None:
        overrides["hyperband_eta"] = args.eta
    if getattr(args, "augment", None) is not None:
        overrides["augment"] = args.augment
    if getattr(args, "backbone", None):
        overrides["backbones"] = [args.backbone]
    config = apply_overrides(config, overrides)
    config.validate(require_manifest=require_manifest)
    return config


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_validate(args) -> int:
    from .manifest import load_manifest, validate_manifest

    config = _merged_config(args, require_manifest=True)
    manifest = load_manifest(config.manifest)
    report = validate_manifest(manifest)
    out = _out_dir(args, config)
    (out / "validation_report.json").write_text(
        json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"
    )
    for check in report.checks:
        print(f"{'PASS' if check.passed else 'FAIL'}  {check.name}")
        for line in check.details[:20]:
            print(f"      {line}")
    print(f"report written to {out / 'validation_report.json'}")
    return 0 if report.passed else RUNTIME_ERROR


def cmd_folds(args) -> int:
    from .folds import make_stratified_folds, save_fold_plan
    from .manifest import load_manifest

    config = _merged_config(args, require_manifest=True)
    manifest = load_manifest(config.manifest)
    plan = make_stratified_folds(manifest, k=config.k, seed=config.seed)
    out = _out_dir(args, config)
    path = out / "fold_plan.json"
    save_fold_plan(plan, path)
    print(f"fold plan ({config.k} folds, seed {config.seed}) written to {path}")
    return 0


def cmd_cv(args) -> int:
    from .crossval import run_cross_validation, save_cv_report
    from .hpo import HyperbandConfig, save_trial_log
    from .labels import Task

    config = _merged_config(args, require_manifest=True)
    from .manifest import load_manifest

    manifest = load_manifest(config.manifest)
    task = Task(config.task)
    hb = HyperbandConfig(config.hyperband_r, config.hyperband_eta, seed=config.seed)
    out = _out_dir(args, config)

    for backbone in config.backbones:
        report = run_cross_validation(
            manifest, backbone, task,
            augment=config.augment, hb=hb, k=config.k, seed=config.seed,
            weights=config.weights.get(backbone) or None,
            jobs=args.jobs,
        )
        label = report.label.replace("+", "_")
        save_cv_report(report, out / f"cv_report_{task.value}_{label}.json")
        for fold, records in enumerate(report.trial_records):
            save_trial_log(records, out / f"trials_{task.value}_{label}_fold{fold}.jsonl")
        print(f"{backbone}: accuracy {report.mean.accuracy:.3f} (±{report.std.accuracy:.3f})")

        if args.save_models:
            from .artifacts import save_artifact
            from .crossval import DataProvider, KerasFoldTrainer
            from .folds import make_stratified_folds
            from .manifest import relabel_binary

            run_manifest = relabel_binary(manifest) if task is Task.BINARY else manifest
            plan = make_stratified_folds(run_manifest, config.k, config.seed)
            provider = DataProvider(run_manifest)
            trainer = KerasFoldTrainer(backbone, task,
                                       weights=config.weights.get(backbone) or None)
            for fold, best in enumerate(report.per_fold_best):
                tx, ty = provider.load(plan.train_ids(fold), f"fold{fold}:train")
                vx, vy = provider.load(plan.val_ids(fold), f"fold{fold}:val")
                model = trainer.train_final(best, tx, ty, vx, vy,
                                            epochs=hb.max_resource,
                                            seed=config.seed * 10_000 + fold)
                model.fold_id = fold
                save_artifact(model, out / "models" / f"{task.value}_{label}_fold{fold}")
            print(f"fold models saved under {out / 'models'}")
    print(f"outputs in {out}")
    return 0


def cmd_stats(args) -> int:
    from .crossval import load_cv_report
    from .reporting import comparison_table
    from . import stats

    reports = [load_cv_report(p) for p in args.reports]
    out = _out_dir(args, _merged_config(args, require_manifest=False))
    if args.pair:
        if len(reports) != 2:
            raise ConfigError("--pair needs exactly two reports (without/with augmentation)")
        comparison = stats.compare_augmentation(
            list(reports[0].fold_accuracies), list(reports[1].fold_accuracies)
        )
        (out / "augmentation_comparison.json").write_text(
            json.dumps(comparison.as_dict(), indent=2, sort_keys=True) + "\n"
        )
        print(f"branch: {comparison.branch}, p={comparison.chosen.p_value:.4f}")
    else:
        comparison = stats.compare_models(reports)
        (out / "comparison_report.json").write_text(
            json.dumps(comparison.as_dict(), indent=2, sort_keys=True) + "\n"
        )
        print(comparison_table(comparison))
    return 0


def cmd_xai(args) -> int:
    from .gradcam import grad_cam, overlay, save_heatmap_png, save_overlay_png
    from .artifacts import load_artifact
    from .manifest import load_manifest
    from .preprocess import preprocess_file

    config = _merged_config(args, require_manifest=True)
    manifest = load_manifest(config.manifest)
    model = load_artifact(args.model)
    out = _out_dir(args, config)
    records = manifest.records[: args.limit] if args.limit else manifest.records
    for record in records:
        tensor = preprocess_file(record.path)
        probs = model.predict_proba(tensor)[0]
        top = int(probs.argmax())
        result = grad_cam(model, tensor, top)
        save_heatmap_png(result, out / f"{record.id}_heatmap.png")
        save_overlay_png(overlay(tensor, result, alpha=args.alpha),
                         out / f"{record.id}_overlay.png")
    print(f"explanations for {len(records)} images written to {out}")
    return 0


def cmd_quantize(args) -> int:
    from .artifacts import artifact_info, quantize_fp16

    source = artifact_info(args.model)
    artifact = quantize_fp16(args.model, args.out)
    ratio = artifact.meta["size_ratio_fp32_over_fp16"]
    print(f"fp32 {source.byte_size} B -> fp16 {artifact.byte_size} B "
          f"(ratio {ratio:.2f}x), artifact at {artifact.directory}")
    return 0


def cmd_bench(args) -> int:
    from .benchmark import benchmark_inference, save_benchmark_report

    report = benchmark_inference(
        args.model, n_runs=args.runs, threads=args.threads, warmup=args.warmup
    )
    out = Path(args.out) if args.out else Path("benchmark_report.json")
    save_benchmark_report(report, out)
    print(f"{report.model_id}: {report.mean * 1000:.2f} ms (±{report.std * 1000:.2f} ms) "
          f"over {report.n_runs} runs, {report.threads_effective} threads; report at {out}")
    return 0


def cmd_embed(args) -> int:
    import numpy as np

    from .heads import HeadConfig
    from .labels import Task
    from .manifest import load_manifest
    from .models import build_model, extract_embeddings
    from .preprocess import preprocess_file
    from .projection import pca_project

    config = _merged_config(args, require_manifest=True)
    manifest = load_manifest(config.manifest)
    backbone = config.backbones[0]
    model = build_model(
        backbone,
        HeadConfig(n_layers=1, dense=(256,), dropout=(0.0,), learning_rate=1e-4),
        Task(config.task),
        weights=config.weights.get(backbone) or None,
        seed=config.seed,
    )
    images = np.stack([preprocess_file(r.path) for r in manifest.records])
    embeddings = extract_embeddings(model, images)
    projection = pca_project(embeddings, dims=3)
    out = _out_dir(args, config)
    np.savez(out / f"embeddings_{backbone}.npz", embeddings=embeddings)
    payload = {
        "backbone": backbone,
        "ids": [r.id for r in manifest.records],
        "labels": [r.label for r in manifest.records],
        "coordinates": projection.coordinates.tolist(),
        "explained_variance": projection.explained_variance.tolist(),
    }
    (out / f"pca_{backbone}.json").write_text(json.dumps(payload, indent=2) + "\n")
    print(f"{embeddings.shape[0]}x{embeddings.shape[1]} embeddings and 3-D projection "
          f"written to {out}")
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    artifact_dirs = {}
    for item in args.models:
        if "=" not in item:
            raise ConfigError(f"--models entries must be id=directory, got {item!r}")
        model_id, directory = item.split("=", 1)
        artifact_dirs[model_id] = directory
    config = _merged_config(args, require_manifest=False)
    serve(artifact_dirs, host=args.host or config.host, port=args.port or config.port)
    return 0


def cmd_report(args) -> int:
    from .crossval import load_cv_report
    from .hpo import load_trial_log
    from .reporting import (
        comparison_table,
        render_exploration_plot,
        save_exploration_plot_data,
        summary_table,
    )

    out = _out_dir(args, _merged_config(args, require_manifest=False))
    sections = []
    if args.reports:
        reports = [load_cv_report(p) for p in args.reports]
        sections += ["## Cross-validation summary", "", summary_table(reports)]
    if args.comparison:
        from .stats import ComparisonReport  # noqa: F401  (shape documented there)

        data = json.loads(Path(args.comparison).read_text())
        sections += ["## Model comparison", "",
                     f"Omnibus p={data['omnibus']['p_value']:.4f}", ""]
        for pair in data["pairwise"]:
            sections.append(
                f"- {pair['group_a']} vs {pair['group_b']}: "
                f"Δ={pair['mean_diff_pp']:+.2f}pp, p={pair['p_value']:.4f}"
                f"{' (significant)' if pair['significant'] else ''}"
            )
        sections.append("")
    for log_path in args.trial_logs or []:
        rows = load_trial_log(log_path)
        stem = Path(log_path).stem
        save_exploration_plot_data(rows, out / f"exploration_{stem}.json")
        if args.plots:
            render_exploration_plot(rows, out / f"exploration_{stem}.png")
        sections.append(f"- exploration data for {stem} written")
    if not sections:
        raise ConfigError("nothing to report: pass --reports, --comparison, or --trial-logs")
    (out / "summary.md").write_text("\n".join(sections) + "\n")
    print(f"report written to {out / 'summary.md'}")
    return 0


# --------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="lesionscreen",
                     description="Skin-lesion screening pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, manifest=True):
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--out", help="output directory (default: outputs/<config digest>)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--output-dir", dest="output_dir", default=None)
        if manifest:
            p.add_argument("--manifest", help="dataset manifest CSV")

    p = sub.add_parser("validate", help="check manifest integrity and class balance")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("folds", help="build the stratified fold plan")
    common(p)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(func=cmd_folds)

    p = sub.add_parser("cv", help="cross-validated training with per-fold tuning")
    common(p)
    p.add_argument("--backbone", help="backbone architecture name")
    p.add_argument("--task", choices=["binary", "multiclass"], default=None)
    p.add_argument("--augment", dest="augment", action="store_true", default=None)
    p.add_argument("--no-augment", dest="augment", action="store_false")
    p.add_argument("--r", type=int, default=None, help="Hyperband max resource (epochs)")
    p.add_argument("--eta", type=int, default=None, help="Hyperband downsampling rate")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1, help="parallel fold workers")
    p.add_argument("--save-models", action="store_true")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("stats", help="statistical comparison of CV reports")
    common(p, manifest=False)
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--pair", action="store_true",
                   help="two-sample augmentation comparison instead of omnibus")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("xai", help="batch-export Grad-CAM heatmaps and overlays")
    common(p)
    p.add_argument("--model", required=True, help="model artifact directory")
    p.add_argument("--limit", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.4)
    p.set_defaults(func=cmd_xai)

    p = sub.add_parser("quantize", help="produce the fp16 deployment artifact")
    p.add_argument("--model", required=True, help="fp32 model artifact directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("bench", help="timed single-image inference benchmark")
    p.add_argument("--model", required=True)
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--threads", type=int, default=4)
    p.add_argument("--warmup", type=int, default=5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("embed", help="backbone embeddings + 3-D PCA projection")
    common(p)
    p.add_argument("--backbone")
    p.add_argument("--task", choices=["binary", "multiclass"], default=None)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("serve", help="run the HTTP inference service")
    common(p, manifest=False)
    p.add_argument("--models", nargs="+", required=True,
                   help="model catalog entries as id=artifact_dir")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("report", help="collate CV reports, comparisons, trial logs")
    common(p, manifest=False)
    p.add_argument("--reports", nargs="*")
    p.add_argument("--comparison")
    p.add_argument("--trial-logs", nargs="*")
    p.add_argument("--plots", action="store_true")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
