"""Collation of run outputs: summary tables and search-exploration plot data."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .crossval import CVReport
from .stats import ComparisonReport


class ReportingError(ValueError):
    pass


def emit_exploration_plot_data(trial_rows: Sequence[dict]) -> dict:
    """Per-hyperparameter (value, accuracy) series from a trial log, plus the
    best-trial marker (argmax accuracy, ties to the lowest trial id).

    Input rows are trial-log records (``hpo.load_trial_log`` output or
    ``TrialRecord.as_dict()``); every series has one point per trial.
    """
    rows = list(trial_rows)
    if not rows:
        raise ReportingError("trial log is empty")
    bookkeeping = {"trial_id", "bracket", "rung", "resource", "score", "failed"}
    param_names = sorted(set(rows[0]) - bookkeeping)

    best = min(rows, key=lambda r: (-float(r["score"]), int(r["trial_id"])))
    series = {
        name: [
            {"value": row[name], "accuracy": float(row["score"]),
             "trial_id": int(row["trial_id"])}
            for row in rows
        ]
        for name in param_names
    }
    return {
        "series": series,
        "n_trials": len(rows),
        "best": {
            "trial_id": int(best["trial_id"]),
            "accuracy": float(best["score"]),
            "params": {name: best[name] for name in param_names},
        },
    }


def save_exploration_plot_data(trial_rows: Sequence[dict], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(emit_exploration_plot_data(trial_rows),
                               indent=2, sort_keys=True) + "\n")


def render_exploration_plot(trial_rows: Sequence[dict], path: str | Path) -> None:
    """Optional static panel figure: one scatter per hyperparameter with the
    best trial marked."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = emit_exploration_plot_data(trial_rows)
    names = sorted(data["series"])
    cols = 4
    rows = -(-len(names) // cols)
    fig, axes = plt.subplots(rows, cols, figsize=(4 * cols, 3 * rows), squeeze=False)
    for ax in axes.ravel()[len(names):]:
        ax.axis("off")
    for name, ax in zip(names, axes.ravel()):
        points = data["series"][name]
        xs = [p["value"] for p in points]
        ys = [p["accuracy"] for p in points]
        ax.scatter(xs, ys, s=12, alpha=0.6)
        best = data["best"]
        ax.scatter([best["params"][name]], [best["accuracy"]],
                   marker="+", s=120, color="red")
        ax.set_title(f"{name} = {best['params'][name]}", fontsize=9)
        ax.set_ylabel("accuracy")
        if name == "learning_rate":
            ax.set_xscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _fmt(mean: float, std: float) -> str:
    return f"{mean:.3f} (±{std:.3f})"


def summary_table(reports: Sequence[CVReport]) -> str:
    """Markdown table of per-run mean±std for the four headline metrics."""
    if not reports:
        raise ReportingError("no cross-validation reports to summarize")
    lines = [
        "| Task | Base model | Augmentation | Accuracy | Sensitivity | Specificity | F-1 Score |",
        "|---|---|---|---|---|---|---|",
    ]
    for r in sorted(reports, key=lambda r: (r.task.value, r.backbone, r.augmentation)):
        lines.append(
            "| {task} | {bb} | {aug} | {acc} | {sen} | {spe} | {f1} |".format(
                task=r.task.value,
                bb=r.backbone,
                aug="yes" if r.augmentation else "no",
                acc=_fmt(r.mean.accuracy, r.std.accuracy),
                sen=_fmt(r.mean.sensitivity, r.std.sensitivity),
                spe=_fmt(r.mean.specificity, r.std.specificity),
                f1=_fmt(r.mean.f1, r.std.f1),
            )
        )
    return "\n".join(lines) + "\n"


def comparison_table(report: ComparisonReport) -> str:
    lines = [
        f"Omnibus (repeated-measures ANOVA): F={report.omnibus.statistic:.4f}, "
        f"p={report.omnibus.p_value:.4f}, "
        f"{'significant' if report.omnibus.significant else 'not significant'}",
        "",
        "| Model A | Model B | Δ mean (pp) | p | Significant |",
        "|---|---|---|---|---|",
    ]
    for pair in report.pairwise:
        lines.append(
            f"| {pair.group_a} | {pair.group_b} | {100 * pair.mean_diff:+.2f} "
            f"| {pair.result.p_value:.4f} | {'yes' if pair.result.significant else 'no'} |"
        )
    if report.notes:
        lines += ["", *(f"- {note}" for note in report.notes)]
    return "\n".join(lines) + "\n"
