"""Deterministic stratified k-fold planning with per-fold train/val splits.

Fold assignment: per class, record ids are sorted, shuffled with a seeded
PCG64 stream, and dealt round-robin into the k folds — every fold gets an
equal share per class (within one record when counts do not divide evenly).

For each held-out fold, the remaining development records are split 75/25
into train/val per class by dealing shuffled ids 3-train:1-val.

The plan is a pure function of (manifest ids per class, k, seed): identical
inputs always produce identical plans.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .labels import Task, class_code
from .manifest import DatasetManifest

TRAIN, VAL = "train", "val"


class FoldError(ValueError):
    pass


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    assignment: Mapping[str, int]
    dev_split: Mapping[int, Mapping[str, str]]

    def fold_ids(self, fold: int) -> list[str]:
        return sorted(rid for rid, f in self.assignment.items() if f == fold)

    def train_ids(self, fold: int) -> list[str]:
        return sorted(r for r, role in self.dev_split[fold].items() if role == TRAIN)

    def val_ids(self, fold: int) -> list[str]:
        return sorted(r for r, role in self.dev_split[fold].items() if role == VAL)

    def as_dict(self) -> dict:
        records = {}
        for rid in sorted(self.assignment):
            records[rid] = {
                "fold": self.assignment[rid],
                "dev_role": {
                    str(f): self.dev_split[f][rid]
                    for f in range(self.k)
                    if rid in self.dev_split[f]
                },
            }
        return {"k": self.k, "seed": self.seed, "records": records}

    def digest(self) -> str:
        payload = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()


def _dealt(ids: list[str], rng: np.random.Generator) -> list[str]:
    order = rng.permutation(len(ids))
    return [ids[i] for i in order]


def make_stratified_folds(manifest: DatasetManifest, k: int, seed: int) -> FoldPlan:
    """Build a FoldPlan for ``manifest``.

    Stratification uses each record's original 4-class label, so plans built
    before and after binary relabeling are identical for the same seed.
    """
    if k < 2:
        raise FoldError(f"k must be >= 2, got {k}")

    by_class: dict[str, list[str]] = {}
    for r in manifest.records:
        by_class.setdefault(r.source_label, []).append(r.id)
    for name, ids in sorted(by_class.items()):
        if len(ids) < k:
            raise FoldError(f"class {name} has {len(ids)} records, fewer than k={k}")

    assignment: dict[str, int] = {}
    for name, ids in sorted(by_class.items()):
        code = class_code(name, Task.MULTICLASS)
        rng = np.random.default_rng([seed, k, code])
        for i, rid in enumerate(_dealt(sorted(ids), rng)):
            assignment[rid] = i % k

    dev_split: dict[int, dict[str, str]] = {}
    for fold in range(k):
        roles: dict[str, str] = {}
        for name, ids in sorted(by_class.items()):
            code = class_code(name, Task.MULTICLASS)
            dev_ids = sorted(rid for rid in ids if assignment[rid] != fold)
            rng = np.random.default_rng([seed, k, 1000 + fold, code])
            for i, rid in enumerate(_dealt(dev_ids, rng)):
                roles[rid] = VAL if i % 4 == 3 else TRAIN
        dev_split[fold] = roles

    return FoldPlan(k=k, seed=seed, assignment=assignment, dev_split=dev_split)


def save_fold_plan(plan: FoldPlan, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(plan.as_dict(), indent=2, sort_keys=True) + "\n")


def load_fold_plan(path: str | Path) -> FoldPlan:
    data = json.loads(Path(path).read_text())
    assignment = {rid: rec["fold"] for rid, rec in data["records"].items()}
    dev_split: dict[int, dict[str, str]] = {f: {} for f in range(data["k"])}
    for rid, rec in data["records"].items():
        for f, role in rec["dev_role"].items():
            dev_split[int(f)][rid] = role
    return FoldPlan(k=data["k"], seed=data["seed"], assignment=assignment, dev_split=dev_split)
