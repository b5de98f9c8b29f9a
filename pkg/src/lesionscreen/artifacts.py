"""Deployable model artifacts: half-precision quantization and evaluation.

An artifact directory holds ``model.blob`` (npz of weight arrays, float32 or
float16) and ``meta.json`` (precision, provenance, digests, byte size).
Quantization is weight-only: fp16 blobs are upcast to fp32 at load time, so
artifacts run on any host without half-precision kernels.
"""

from __future__ import annotations

import json
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .labels import Task
from .metrics import MetricSet, compute_metrics, confusion
from .models import (
    BLOB_NAME,
    META_NAME,
    ScreeningModel,
    load_model,
    save_model,
    weights_digest,
    write_weights_blob,
)


class ArtifactError(ValueError):
    pass


@dataclass(frozen=True)
class ModelArtifact:
    directory: Path
    precision: str
    byte_size: int
    meta: dict

    @property
    def model_id(self) -> str:
        return f"{self.meta['backbone']}-{self.meta['task']}-{self.precision}"


def artifact_info(directory: str | Path) -> ModelArtifact:
    directory = Path(directory)
    meta_path = directory / META_NAME
    blob_path = directory / BLOB_NAME
    if not meta_path.is_file() or not blob_path.is_file():
        raise ArtifactError(f"{directory} is not a model artifact directory")
    meta = json.loads(meta_path.read_text())
    return ModelArtifact(
        directory=directory,
        precision=meta["precision"],
        byte_size=blob_path.stat().st_size,
        meta=meta,
    )


def save_artifact(model: ScreeningModel, directory: str | Path) -> ModelArtifact:
    """Serialize a trained model as an fp32 artifact."""
    save_model(model, directory, precision="fp32")
    return artifact_info(directory)


def load_artifact(directory: str | Path) -> ScreeningModel:
    info = artifact_info(directory)  # validates the layout first
    model = load_model(info.directory)
    return model


def quantize_fp16(
    source: ScreeningModel | str | Path, out_dir: str | Path
) -> ModelArtifact:
    """Store all floating-point weights at 16-bit precision.

    Records the source fp32 weight digest and the fp32/fp16 byte ratio; when
    the source is an in-memory model the fp32 size is measured by writing a
    temporary fp32 blob.
    """
    if isinstance(source, (str, Path)):
        src_info = artifact_info(source)
        if src_info.precision != "fp32":
            raise ArtifactError(f"can only quantize fp32 artifacts, got {src_info.precision}")
        model = load_model(src_info.directory)
        fp32_bytes = src_info.byte_size
    else:
        model = source
        with tempfile.NamedTemporaryFile(suffix=".blob") as tmp:
            write_weights_blob(model.keras_model.get_weights(), Path(tmp.name), "fp32")
            fp32_bytes = Path(tmp.name).stat().st_size

    out = save_model(model, out_dir, precision="fp16")
    meta_path = out / META_NAME
    meta = json.loads(meta_path.read_text())
    fp16_bytes = (out / BLOB_NAME).stat().st_size
    meta["quantized_from_digest"] = weights_digest(model.keras_model.get_weights())
    meta["fp32_bytes"] = fp32_bytes
    meta["blob_bytes"] = fp16_bytes
    meta["size_ratio_fp32_over_fp16"] = fp32_bytes / fp16_bytes
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return artifact_info(out)


def evaluate_artifact(
    directory: str | Path,
    images: np.ndarray,
    true_codes: Sequence[int],
    batch_size: int = 32,
) -> MetricSet:
    """Reload the artifact and compute the standard metric set on a test set."""
    info = artifact_info(directory)
    model = load_model(info.directory)
    task = Task(info.meta["task"])
    probs = model.predict_proba(images, batch_size=batch_size)
    preds = probs.argmax(axis=1)
    cm = confusion(np.asarray(true_codes, dtype=np.int64), preds, task.n_classes)
    return compute_metrics(cm, task)
