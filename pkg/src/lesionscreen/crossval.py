"""The evaluation protocol: stratified k-fold cross-validation with a
per-fold Hyperband search.

For every fold: the remaining development records are split 75/25 into
train/val; Hyperband tunes the head (and, when enabled, augmentation)
against validation accuracy; the winning configuration is retrained on the
train split at the full resource budget and evaluated exactly once on the
held-out fold. Augmentation only ever touches training batches, and every
record access is logged so test-fold isolation is checked, not assumed.

Folds are independent: with ``jobs > 1`` they run in separate spawned
processes (each worker loads its own TensorFlow runtime).
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .folds import FoldPlan, make_stratified_folds
from .heads import head_to_dict
from .hpo import (
    HpoError,
    HyperbandConfig,
    SearchSpace,
    TrialConfig,
    TrialRecord,
    run_hyperband,
)
from .labels import Task, class_code
from .manifest import DatasetManifest, relabel_binary
from .metrics import ConfusionMatrix, MetricSet, aggregate, compute_metrics, confusion
from .preprocess import PreprocessConfig, preprocess_file


class CrossValError(RuntimeError):
    pass


class DataProvider:
    """Loads and preprocesses records on demand, logging every access."""

    def __init__(self, manifest: DatasetManifest, config: PreprocessConfig | None = None):
        self.manifest = manifest
        self.config = config or PreprocessConfig()
        self.access_log: list[tuple[str, str]] = []
        self._by_id = manifest.by_id()
        self._cache: dict[str, np.ndarray] = {}

    def load(self, ids: Sequence[str], phase: str) -> tuple[np.ndarray, np.ndarray]:
        images, codes = [], []
        for rid in ids:
            record = self._by_id[rid]
            self.access_log.append((phase, rid))
            if rid not in self._cache:
                self._cache[rid] = preprocess_file(record.path, self.config)
            images.append(self._cache[rid])
            codes.append(class_code(record.label, self.manifest.task))
        if not images:
            shape = (0, self.config.target_height, self.config.target_width, 3)
            return np.zeros(shape, dtype=np.float32), np.zeros(0, dtype=np.int64)
        return np.stack(images), np.asarray(codes, dtype=np.int64)

    def touched(self, phase: str) -> set[str]:
        return {rid for p, rid in self.access_log if p == phase}


class FoldTrainer(Protocol):
    """Strategy for fitting one configuration on one fold's data."""

    def evaluate(self, config: TrialConfig, train_x, train_y, val_x, val_y,
                 epochs: int, seed: int) -> float:
        """Train for up to ``epochs`` and return the best validation accuracy."""
        ...

    def train_final(self, config: TrialConfig, train_x, train_y, val_x, val_y,
                    epochs: int, seed: int):
        """Train and return a predictor exposing ``predict_proba(images)``."""
        ...


@dataclass
class KerasFoldTrainer:
    """Default trainer: frozen-backbone transfer learning via the models module.

    ``image_size`` must match the preprocessing target (224 for the standard
    pipeline; smaller for smoke runs)."""

    backbone: str
    task: Task
    weights: str | None = None
    batch_size: int = 32
    patience: int = 10
    image_size: int = 224

    def _fit(self, config, train_x, train_y, val_x, val_y, epochs, seed):
        from .models import build_model, train as train_model

        model = build_model(self.backbone, config.head, self.task,
                            weights=self.weights, seed=seed,
                            image_size=self.image_size)
        train_model(
            model, train_x, train_y, val_x, val_y,
            max_epochs=epochs, batch_size=self.batch_size,
            augment_config=config.augment, seed=seed, patience=self.patience,
        )
        return model

    def evaluate(self, config, train_x, train_y, val_x, val_y, epochs, seed):
        model = self._fit(config, train_x, train_y, val_x, val_y, epochs, seed)
        return max(model.history["val_accuracy"])

    def train_final(self, config, train_x, train_y, val_x, val_y, epochs, seed):
        return self._fit(config, train_x, train_y, val_x, val_y, epochs, seed)


@dataclass(frozen=True)
class FoldResult:
    fold: int
    metrics: MetricSet
    cm: ConfusionMatrix
    best_config: TrialConfig
    best_score: float
    records: tuple[TrialRecord, ...]


@dataclass(frozen=True)
class CVReport:
    backbone: str
    task: Task
    augmentation: bool
    k: int
    seed: int
    hyperband: dict
    fold_metrics: tuple[MetricSet, ...]
    mean: MetricSet
    std: MetricSet
    pooled_confusion: ConfusionMatrix
    per_fold_best: tuple[TrialConfig, ...]
    fold_plan_digest: str
    notes: tuple[str, ...] = ()
    trial_records: tuple[tuple[TrialRecord, ...], ...] = field(default=(), repr=False)

    @property
    def label(self) -> str:
        return f"{self.backbone}{'+aug' if self.augmentation else ''}"

    @property
    def fold_accuracies(self) -> tuple[float, ...]:
        return tuple(m.accuracy for m in self.fold_metrics)

    def as_dict(self) -> dict:
        def config_dict(cfg: TrialConfig) -> dict:
            return {
                "head": head_to_dict(cfg.head),
                "augment": cfg.augment.flat() if cfg.augment else None,
            }

        return {
            "backbone": self.backbone,
            "task": self.task.value,
            "augmentation": self.augmentation,
            "k": self.k,
            "seed": self.seed,
            "hyperband": self.hyperband,
            "fold_metrics": [m.as_dict() for m in self.fold_metrics],
            "mean": self.mean.as_dict(),
            "std": self.std.as_dict(),
            "pooled_confusion": self.pooled_confusion.counts.tolist(),
            "per_fold_best": [config_dict(c) for c in self.per_fold_best],
            "fold_plan_digest": self.fold_plan_digest,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class _FoldTask:
    manifest: DatasetManifest
    plan: FoldPlan
    fold: int
    trainer: FoldTrainer
    space: SearchSpace
    hb: HyperbandConfig
    seed: int
    preprocess: PreprocessConfig


def _run_single_fold(task: _FoldTask) -> FoldResult:
    provider = DataProvider(task.manifest, task.preprocess)
    fold = task.fold
    train_x, train_y = provider.load(task.plan.train_ids(fold), f"fold{fold}:train")
    val_x, val_y = provider.load(task.plan.val_ids(fold), f"fold{fold}:val")
    if len(train_x) == 0 or len(val_x) == 0:
        raise CrossValError(
            f"fold {fold}: empty train or validation split; the dataset is too "
            f"small for k={task.plan.k}"
        )

    fold_seed = task.seed * 10_000 + fold

    def objective(config: TrialConfig, resource: int) -> float:
        return task.trainer.evaluate(config, train_x, train_y, val_x, val_y,
                                     epochs=resource, seed=fold_seed)

    rng = np.random.default_rng([task.hb.seed, task.seed, fold])
    try:
        hb_result = run_hyperband(task.space, objective, task.hb, rng)
    except HpoError as exc:
        raise CrossValError(f"fold {fold}: {exc}") from exc

    model = task.trainer.train_final(
        hb_result.best_config, train_x, train_y, val_x, val_y,
        epochs=task.hb.max_resource, seed=fold_seed,
    )

    test_ids = task.plan.fold_ids(fold)
    test_x, test_y = provider.load(test_ids, f"fold{fold}:test")
    probs = model.predict_proba(test_x)
    preds = probs.argmax(axis=1)
    cm = confusion(test_y, preds, task.manifest.task.n_classes)

    held_out = set(test_ids)
    leaked = (provider.touched(f"fold{fold}:train") | provider.touched(f"fold{fold}:val")) & held_out
    if leaked:
        raise CrossValError(f"fold {fold}: held-out records read during development: {sorted(leaked)}")

    return FoldResult(
        fold=fold,
        metrics=compute_metrics(cm, task.manifest.task),
        cm=cm,
        best_config=hb_result.best_config,
        best_score=hb_result.best_score,
        records=hb_result.records,
    )


def run_cross_validation(
    manifest: DatasetManifest,
    backbone: str,
    task: Task,
    augment: bool,
    hb: HyperbandConfig,
    k: int = 10,
    seed: int = 0,
    weights: str | None = None,
    trainer: FoldTrainer | None = None,
    space: SearchSpace | None = None,
    preprocess: PreprocessConfig | None = None,
    jobs: int = 1,
) -> CVReport:
    """Run the full protocol and aggregate per-fold metrics as mean and
    sample standard deviation. The held-out fold is never read during the
    search or the final retraining (verified via access logs)."""
    if task is Task.BINARY:
        manifest = relabel_binary(manifest)
    plan = make_stratified_folds(manifest, k, seed)
    space = space or SearchSpace(augmentation=augment)
    if space.augmentation != augment:
        raise CrossValError("search space augmentation flag disagrees with run setting")
    preprocess = preprocess or PreprocessConfig()
    if preprocess.target_height != preprocess.target_width:
        raise CrossValError("model inputs are square; preprocess target must be too")
    trainer = trainer or KerasFoldTrainer(backbone, task, weights=weights,
                                          image_size=preprocess.target_height)

    tasks = [
        _FoldTask(manifest, plan, fold, trainer, space, hb, seed, preprocess)
        for fold in range(k)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs, mp_context=get_context("spawn")) as pool:
            results = list(pool.map(_run_single_fold, tasks))
    else:
        results = [_run_single_fold(t) for t in tasks]

    results.sort(key=lambda r: r.fold)
    fold_metrics = tuple(r.metrics for r in results)
    mean, std = aggregate(fold_metrics)
    pooled = results[0].cm
    for r in results[1:]:
        pooled = pooled + r.cm

    notes = ["augmentation applied to training batches only" if augment
             else "augmentation disabled"]
    return CVReport(
        backbone=backbone,
        task=task,
        augmentation=augment,
        k=k,
        seed=seed,
        hyperband={"max_resource": hb.max_resource, "eta": hb.eta, "seed": hb.seed},
        fold_metrics=fold_metrics,
        mean=mean,
        std=std,
        pooled_confusion=pooled,
        per_fold_best=tuple(r.best_config for r in results),
        fold_plan_digest=plan.digest(),
        notes=tuple(notes),
        trial_records=tuple(r.records for r in results),
    )


def save_cv_report(report: CVReport, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")


def load_cv_report(path: str | Path) -> CVReport:
    from .augment import AugmentConfig
    from .heads import head_from_dict

    data = json.loads(Path(path).read_text())

    def metric_set(d: dict) -> MetricSet:
        return MetricSet(
            accuracy=d["accuracy"], sensitivity=d["sensitivity"],
            specificity=d["specificity"], f1=d["f1"], precision=d["precision"],
            degenerate=frozenset(d.get("degenerate", ())),
        )

    def config(d: dict) -> TrialConfig:
        aug = d.get("augment")
        augment_config = None
        if aug is not None:
            augment_config = AugmentConfig(
                rotation=aug["rotation"], zoom=aug["zoom"], contrast=aug["contrast"],
                brightness=aug["brightness"], tr_width=aug["tr_width"],
                tr_height=aug["tr_height"], flip_type=int(aug["flip_type"]),
            )
        return TrialConfig(head=head_from_dict(d["head"]), augment=augment_config)

    return CVReport(
        backbone=data["backbone"],
        task=Task(data["task"]),
        augmentation=data["augmentation"],
        k=data["k"],
        seed=data["seed"],
        hyperband=data["hyperband"],
        fold_metrics=tuple(metric_set(m) for m in data["fold_metrics"]),
        mean=metric_set(data["mean"]),
        std=metric_set(data["std"]),
        pooled_confusion=ConfusionMatrix(np.asarray(data["pooled_confusion"])),
        per_fold_best=tuple(config(c) for c in data["per_fold_best"]),
        fold_plan_digest=data["fold_plan_digest"],
        notes=tuple(data.get("notes", ())),
    )
