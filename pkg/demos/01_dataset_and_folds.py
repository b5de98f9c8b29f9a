"""Build a synthetic 4-class corpus, validate it, and plan stratified folds.

Run:  python demos/01_dataset_and_folds.py
"""

from pathlib import Path

import numpy as np
from PIL import Image

from lesionscreen import (
    load_manifest,
    make_stratified_folds,
    relabel_binary,
    save_fold_plan,
    validate_manifest,
    write_manifest,
)
from lesionscreen.manifest import build_manifest

OUT = Path(__file__).parent / "output" / "01_dataset"


def synthesize_corpus(root: Path, per_class: int = 20) -> None:
    rng = np.random.default_rng(0)
    for class_name in ("Acne", "Chickenpox", "Mpox", "Healthy"):
        class_dir = root / class_name.lower()
        class_dir.mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            pixels = rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)
            Image.fromarray(pixels, "RGB").save(class_dir / f"{i:03d}.png")


def main() -> None:
    corpus = OUT / "corpus"
    synthesize_corpus(corpus)

    manifest = build_manifest(corpus, sources={"Acne": "synthetic"})
    write_manifest(manifest, corpus / "manifest.csv")
    manifest = load_manifest(corpus / "manifest.csv")
    print(f"loaded {len(manifest)} records: {manifest.class_counts}")

    report = validate_manifest(manifest)
    for check in report.checks:
        print(f"  {'PASS' if check.passed else 'FAIL'} {check.name}")

    plan = make_stratified_folds(manifest, k=5, seed=42)
    save_fold_plan(plan, OUT / "fold_plan.json")
    fold0 = plan.fold_ids(0)
    print(f"fold 0: {len(fold0)} records, "
          f"train/val for fold 0: {len(plan.train_ids(0))}/{len(plan.val_ids(0))}")

    binary = relabel_binary(manifest)
    print(f"binary view: {binary.class_counts}")
    plan_binary = make_stratified_folds(binary, k=5, seed=42)
    print("binary folds identical to multiclass folds:",
          plan_binary.assignment == plan.assignment)


if __name__ == "__main__":
    main()
