import os

os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "3")
os.environ.setdefault("CUDA_VISIBLE_DEVICES", "")

import csv
import hashlib
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from lesionscreen.labels import MULTICLASS_CLASSES

MCSI_PER_CLASS = 100


def write_png(path: Path, rng: np.random.Generator, size: int = 16) -> bytes:
    """Unique small RGB image; returns the file's raw bytes."""
    data = rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
    Image.fromarray(data, "RGB").save(path)
    return path.read_bytes()


def build_dataset(root: Path, per_class: int, image_size: int = 16) -> Path:
    """Synthesize a balanced 4-class image corpus + manifest CSV; returns the
    manifest path."""
    root.mkdir(parents=True, exist_ok=True)
    rows = []
    for class_name in MULTICLASS_CLASSES:
        class_dir = root / class_name.lower()
        class_dir.mkdir(exist_ok=True)
        for i in range(per_class):
            rid = f"{class_name.lower()}{i:03d}"
            path = class_dir / f"{rid}.png"
            rng = np.random.default_rng(abs(hash((class_name, i))) % (2**32))
            raw = write_png(path, rng, image_size)
            rows.append(
                [rid, f"{class_name.lower()}/{rid}.png", class_name, "synthetic",
                 hashlib.sha256(raw).hexdigest()]
            )
    manifest_path = root / "manifest.csv"
    with open(manifest_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "path", "label", "source", "sha256"])
        writer.writerows(rows)
    return manifest_path


@pytest.fixture(scope="session")
def mcsi_like_manifest_path(tmp_path_factory) -> Path:
    """400 records, 100 per class: the shape the released corpus has."""
    return build_dataset(tmp_path_factory.mktemp("mcsi_like"), MCSI_PER_CLASS)


@pytest.fixture(scope="session")
def mcsi_like_manifest(mcsi_like_manifest_path):
    from lesionscreen.manifest import load_manifest

    return load_manifest(mcsi_like_manifest_path)


@pytest.fixture(scope="session")
def small_manifest_path(tmp_path_factory) -> Path:
    """32 records (8 per class) of tiny images for fast end-to-end runs."""
    return build_dataset(tmp_path_factory.mktemp("small_ds"), 8, image_size=16)


@pytest.fixture(scope="session")
def small_manifest(small_manifest_path):
    from lesionscreen.manifest import load_manifest

    return load_manifest(small_manifest_path)


@pytest.fixture(scope="session")
def tiny_model():
    """Session-shared untrained MobileNetV3Small classifier (multiclass).

    Read-only: tests that train or mutate weights must build their own.
    """
    from lesionscreen.heads import HeadConfig
    from lesionscreen.labels import Task
    from lesionscreen.models import build_model

    head = HeadConfig(n_layers=1, dense=(16,), dropout=(0.0,), learning_rate=1e-3)
    return build_model("mobilenetv3small", head, Task.MULTICLASS, seed=11)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
