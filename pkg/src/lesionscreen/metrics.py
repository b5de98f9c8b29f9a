"""Confusion matrices and classification metrics.

Conventions, fixed across the project:
- Matrix rows are true labels, columns predicted labels, using the canonical
  integer codes (binary: Mpox=0 is the positive class).
- Multiclass sensitivity/specificity/precision/F1 are computed one-vs-all per
  class and macro-averaged. Specificity per class is TN / (TN + FP).
- A zero denominator yields metric 0 and an entry in ``degenerate`` rather
  than an exception, so aggregation over folds is always defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .labels import Task


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"confusion matrix must be square, got shape {arr.shape}")
        if (arr < 0).any():
            raise ValueError("confusion matrix entries must be non-negative")
        object.__setattr__(self, "counts", arr)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)


def confusion(
    true_labels: Sequence[int], predicted_labels: Sequence[int], n_classes: int
) -> ConfusionMatrix:
    """Count (true, predicted) pairs into an n_classes x n_classes matrix."""
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape:
        raise ValueError(f"label sequences differ in length: {t.shape} vs {p.shape}")
    if t.size and (t.min() < 0 or t.max() >= n_classes or p.min() < 0 or p.max() >= n_classes):
        raise ValueError(f"label codes must lie in [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    sensitivity: float
    specificity: float
    f1: float
    precision: float
    degenerate: frozenset[str] = field(default_factory=frozenset)

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "f1": self.f1,
            "precision": self.precision,
            "degenerate": sorted(self.degenerate),
        }


def _ratio(num: float, den: float, name: str, flags: set[str]) -> float:
    if den == 0:
        flags.add(name)
        return 0.0
    return num / den


def compute_metrics(cm: ConfusionMatrix, task: Task) -> MetricSet:
    """Accuracy, sensitivity, specificity, precision, and F1 for ``cm``.

    Binary uses the positive class directly (code 0); multiclass macro-averages
    the one-vs-all values over classes.
    """
    counts = cm.counts.astype(np.float64)
    n = counts.sum()
    if n < 1:
        raise ValueError("confusion matrix is empty")
    flags: set[str] = set()
    accuracy = float(np.trace(counts) / n)

    if task is Task.BINARY:
        if cm.n_classes != 2:
            raise ValueError("binary metrics need a 2x2 matrix")
        tp, fn = counts[0, 0], counts[0, 1]
        fp, tn = counts[1, 0], counts[1, 1]
        sens = _ratio(tp, tp + fn, "sensitivity", flags)
        spec = _ratio(tn, tn + fp, "specificity", flags)
        prec = _ratio(tp, tp + fp, "precision", flags)
        f1 = _ratio(2 * prec * sens, prec + sens, "f1", flags)
        return MetricSet(accuracy, sens, spec, f1, prec, frozenset(flags))

    names = task.class_names
    sens_all, spec_all, prec_all, f1_all = [], [], [], []
    for c in range(cm.n_classes):
        tp = counts[c, c]
        fn = counts[c].sum() - tp
        fp = counts[:, c].sum() - tp
        tn = n - tp - fn - fp
        s = _ratio(tp, tp + fn, f"sensitivity:{names[c]}", flags)
        sp = _ratio(tn, tn + fp, f"specificity:{names[c]}", flags)
        p = _ratio(tp, tp + fp, f"precision:{names[c]}", flags)
        f = _ratio(2 * p * s, p + s, f"f1:{names[c]}", flags)
        sens_all.append(s)
        spec_all.append(sp)
        prec_all.append(p)
        f1_all.append(f)
    return MetricSet(
        accuracy,
        float(np.mean(sens_all)),
        float(np.mean(spec_all)),
        float(np.mean(f1_all)),
        float(np.mean(prec_all)),
        frozenset(flags),
    )


def aggregate(per_fold: Sequence[MetricSet]) -> tuple[MetricSet, MetricSet]:
    """Mean and sample standard deviation (n-1) of per-fold metrics.

    A single fold yields std 0 with a ``std`` degeneracy flag.
    """
    if not per_fold:
        raise ValueError("no fold metrics to aggregate")
    fields = ("accuracy", "sensitivity", "specificity", "f1", "precision")
    values = {f: np.array([getattr(m, f) for m in per_fold], dtype=np.float64) for f in fields}
    mean = {f: float(v.mean()) for f, v in values.items()}
    if len(per_fold) == 1:
        std = {f: 0.0 for f in fields}
        std_flags = frozenset({"std"})
    else:
        std = {f: float(v.std(ddof=1)) for f, v in values.items()}
        std_flags = frozenset()
    carried = frozenset().union(*(m.degenerate for m in per_fold))
    return (
        MetricSet(**mean, degenerate=carried),
        MetricSet(**std, degenerate=std_flags),
    )
