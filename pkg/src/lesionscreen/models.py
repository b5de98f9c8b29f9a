"""Transfer-learning classifiers: frozen backbone + trainable head.

The network is  input -> pixel normalization -> frozen backbone ->
global average pooling -> n x (dense+ReLU+dropout) -> linear logits ->
softmax.  Only the head trains (Adam, categorical cross-entropy); the
backbone's weight digest is identical before and after training. The
logits layer is kept separate from the softmax so gradient-based
explanation can tap pre-softmax class scores.

Inputs everywhere are float32 (H, W, 3) tensors in [0, 1]; each backbone's
published input normalization is applied inside the model.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import tensorflow as tf
import keras
from keras import layers

from .augment import AugmentConfig, augment
from .backbones import CAFFE_BGR, INPUT_SIZE, SCALE_PM1, backbone_spec, build_backbone
from .heads import HeadConfig, head_from_dict, head_to_dict
from .labels import Task

IMAGENET_BGR_MEANS = (103.939, 116.779, 123.68)
DEFAULT_BATCH_SIZE = 32
DEFAULT_MAX_EPOCHS = 50
DEFAULT_PATIENCE = 10


class TrainingError(RuntimeError):
    pass


@keras.saving.register_keras_serializable(package="lesionscreen")
class PixelNormalization(layers.Layer):
    """Map unit-range RGB input to the backbone's expected pixel scale."""

    def __init__(self, scheme: str, **kwargs):
        super().__init__(**kwargs)
        if scheme not in (SCALE_PM1, CAFFE_BGR):
            raise ValueError(f"unknown normalization scheme {scheme!r}")
        self.scheme = scheme

    def call(self, x):
        if self.scheme == SCALE_PM1:
            return x * 2.0 - 1.0
        bgr = x[..., ::-1] * 255.0
        return bgr - tf.constant(IMAGENET_BGR_MEANS, dtype=x.dtype)

    def get_config(self):
        config = super().get_config()
        config["scheme"] = self.scheme
        return config


@dataclass
class ScreeningModel:
    """A built (possibly trained) classifier with its provenance."""

    keras_model: keras.Model
    backbone: keras.Model
    backbone_name: str
    head: HeadConfig
    task: Task
    history: dict[str, list[float]] | None = None
    fold_id: int | None = None
    seed: int | None = None
    _embedder: keras.Model | None = field(default=None, repr=False)

    @property
    def class_names(self) -> tuple[str, ...]:
        return self.task.class_names

    @property
    def n_classes(self) -> int:
        return self.task.n_classes

    @property
    def input_size(self) -> int:
        return int(self.keras_model.input_shape[1])

    def predict_proba(self, images: np.ndarray, batch_size: int = DEFAULT_BATCH_SIZE) -> np.ndarray:
        x = _as_batch(images, self.input_size)
        out = []
        for start in range(0, len(x), batch_size):
            out.append(self.keras_model(x[start : start + batch_size], training=False).numpy())
        return np.concatenate(out, axis=0)

    def embeddings(self, images: np.ndarray, batch_size: int = DEFAULT_BATCH_SIZE) -> np.ndarray:
        if self._embedder is None:
            self._embedder = keras.Model(
                self.keras_model.inputs,
                self.keras_model.get_layer("embedding_pool").output,
            )
        x = _as_batch(images, self.input_size)
        out = []
        for start in range(0, len(x), batch_size):
            out.append(self._embedder(x[start : start + batch_size], training=False).numpy())
        return np.concatenate(out, axis=0)

    def backbone_digest(self) -> str:
        return weights_digest(self.backbone.get_weights())

    def head_digest(self) -> str:
        head_weights = [
            w for layer in self.keras_model.layers
            if layer.name.startswith(("head_dense", "class_logits"))
            for w in layer.get_weights()
        ]
        return weights_digest(head_weights)


def _as_batch(images: np.ndarray, input_size: int) -> np.ndarray:
    x = np.asarray(images, dtype=np.float32)
    if x.ndim == 3:
        x = x[None, ...]
    if x.ndim != 4 or x.shape[1] != input_size or x.shape[2] != input_size or x.shape[3] != 3:
        raise ValueError(
            f"expected images of shape (N, {input_size}, {input_size}, 3), got {x.shape}"
        )
    return x


def weights_digest(weights: Sequence[np.ndarray]) -> str:
    h = hashlib.sha256()
    for w in weights:
        h.update(np.ascontiguousarray(w).tobytes())
    return h.hexdigest()


def build_model(
    backbone: str,
    head: HeadConfig,
    task: Task,
    weights: str | None = None,
    seed: int | None = None,
    image_size: int = INPUT_SIZE,
) -> ScreeningModel:
    """Assemble the frozen-backbone classifier.

    ``weights`` is forwarded to the backbone builder (None, "imagenet", or a
    local weights file). ``seed`` fixes head initialization. ``image_size``
    defaults to the standard 224 input; smaller values speed up smoke runs.
    """
    if seed is not None:
        keras.utils.set_random_seed(seed)
    spec = backbone_spec(backbone)
    bb = build_backbone(backbone, weights=weights, image_size=image_size)

    inputs = keras.Input(shape=(image_size, image_size, 3), name="pixels")
    x = PixelNormalization(spec.normalization, name="pixel_norm")(inputs)
    feature_map = bb(x, training=False)
    pooled = layers.GlobalAveragePooling2D(name="embedding_pool")(feature_map)

    h = pooled
    for i in range(head.n_layers):
        h = layers.Dense(head.dense[i], activation="relu", name=f"head_dense_{i + 1}")(h)
        h = layers.Dropout(head.dropout[i], name=f"head_dropout_{i + 1}")(h)
    logits = layers.Dense(task.n_classes, name="class_logits")(h)
    probs = layers.Softmax(name="class_probs")(logits)

    model = keras.Model(inputs, probs, name=f"{spec.name}_{task.value}")
    return ScreeningModel(
        keras_model=model,
        backbone=bb,
        backbone_name=spec.name,
        head=head,
        task=task,
    )


class _BestWeights(keras.callbacks.Callback):
    """Track and restore the best-validation-accuracy epoch's weights.

    Unlike EarlyStopping's restore flag this also applies when training runs
    the full epoch budget. First best wins ties.
    """

    def __init__(self):
        super().__init__()
        self.best = -math.inf
        self.best_weights = None

    def on_epoch_end(self, epoch, logs=None):
        value = (logs or {}).get("val_accuracy")
        if value is not None and value > self.best:
            self.best = float(value)
            self.best_weights = [np.copy(w) for w in self.model.get_weights()]

    def restore(self):
        if self.best_weights is not None:
            self.model.set_weights(self.best_weights)


class _AugmentingDataset(keras.utils.PyDataset):
    """Deterministically shuffled, per-image augmented training batches.

    Each image's transform parameters come from an independent stream keyed
    by (seed, epoch, original index), so runs are reproducible and parallel
    loading would not change results.
    """

    def __init__(self, x, y, batch_size, config: AugmentConfig, seed: int, **kwargs):
        super().__init__(**kwargs)
        self.x, self.y = x, y
        self.batch_size = batch_size
        self.config = config
        self.seed = seed
        self.epoch = 0
        self._reshuffle()

    def _reshuffle(self):
        rng = np.random.default_rng([self.seed, 7919, self.epoch])
        self.order = rng.permutation(len(self.x))

    def __len__(self):
        return math.ceil(len(self.x) / self.batch_size)

    def __getitem__(self, i):
        idx = self.order[i * self.batch_size : (i + 1) * self.batch_size]
        batch = np.stack(
            [
                augment(
                    self.x[j],
                    self.config,
                    np.random.default_rng([self.seed, self.epoch, int(j)]),
                )
                for j in idx
            ]
        )
        return batch, self.y[idx]

    def on_epoch_end(self):
        self.epoch += 1
        self._reshuffle()


def one_hot(codes: Sequence[int], n_classes: int) -> np.ndarray:
    return np.eye(n_classes, dtype=np.float32)[np.asarray(codes, dtype=np.int64)]


def train(
    model: ScreeningModel,
    train_images: np.ndarray,
    train_codes: Sequence[int],
    val_images: np.ndarray,
    val_codes: Sequence[int],
    max_epochs: int = DEFAULT_MAX_EPOCHS,
    batch_size: int = DEFAULT_BATCH_SIZE,
    augment_config: AugmentConfig | None = None,
    seed: int = 0,
    patience: int = DEFAULT_PATIENCE,
    learning_rate: float | None = None,
    fold_id: int | None = None,
) -> ScreeningModel:
    """Train the head; backbone weights never change.

    Early stopping watches validation accuracy with the given patience; the
    returned model carries the best-validation-epoch weights and the full
    per-epoch history. Augmentation, when configured, touches training
    batches only.
    """
    if len(train_images) == 0:
        raise TrainingError("empty training set")
    if max_epochs < 1:
        raise TrainingError(f"max_epochs must be >= 1, got {max_epochs}")
    keras.utils.set_random_seed(seed)

    n_classes = model.n_classes
    y_train = one_hot(train_codes, n_classes)
    y_val = one_hot(val_codes, n_classes)
    lr = model.head.learning_rate if learning_rate is None else learning_rate

    model.keras_model.compile(
        optimizer=keras.optimizers.Adam(learning_rate=lr),
        loss="categorical_crossentropy",
        metrics=["accuracy"],
    )
    best = _BestWeights()
    callbacks = [
        best,
        keras.callbacks.EarlyStopping(
            monitor="val_accuracy", mode="max", patience=patience
        ),
        keras.callbacks.TerminateOnNaN(),
    ]

    if augment_config is not None:
        data = _AugmentingDataset(
            np.asarray(train_images, dtype=np.float32), y_train,
            batch_size, augment_config, seed,
        )
        history = model.keras_model.fit(
            data,
            validation_data=(val_images, y_val),
            epochs=max_epochs,
            callbacks=callbacks,
            verbose=0,
            shuffle=False,
        )
    else:
        history = model.keras_model.fit(
            np.asarray(train_images, dtype=np.float32), y_train,
            validation_data=(val_images, y_val),
            batch_size=batch_size,
            epochs=max_epochs,
            callbacks=callbacks,
            verbose=0,
        )

    hist = {k: [float(v) for v in vals] for k, vals in history.history.items()}
    for epoch, loss in enumerate(hist.get("loss", [])):
        if not math.isfinite(loss):
            raise TrainingError(f"non-finite training loss at epoch {epoch}")
    best.restore()

    model.history = hist
    model.fold_id = fold_id
    model.seed = seed
    return model


def predict(model: ScreeningModel, image: np.ndarray) -> np.ndarray:
    """Class-probability vector for one preprocessed image."""
    return model.predict_proba(image)[0]


def extract_embeddings(model: ScreeningModel, images: np.ndarray) -> np.ndarray:
    """Pooled backbone feature vectors (head excluded), one row per image."""
    return model.embeddings(images)


# --------------------------------------------------------------------------
# Serialization: directory with meta.json + model.blob (npz of weight arrays)
# --------------------------------------------------------------------------

BLOB_NAME = "model.blob"
META_NAME = "meta.json"


def write_weights_blob(arrays: Sequence[np.ndarray], path: Path, precision: str) -> None:
    if precision not in ("fp32", "fp16"):
        raise ValueError(f"precision must be fp32 or fp16, got {precision!r}")
    target = np.float16 if precision == "fp16" else np.float32
    payload = {}
    for i, arr in enumerate(arrays):
        arr = np.asarray(arr)
        payload[f"w{i:04d}"] = arr.astype(target) if np.issubdtype(arr.dtype, np.floating) else arr
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def read_weights_blob(path: Path) -> list[np.ndarray]:
    with np.load(path) as data:
        arrays = []
        for key in sorted(data.files):
            arr = data[key]
            if np.issubdtype(arr.dtype, np.floating):
                arr = arr.astype(np.float32)
            arrays.append(arr)
    return arrays


def save_model(model: ScreeningModel, directory: str | Path, precision: str = "fp32") -> Path:
    """Serialize to a directory: meta.json + fp32/fp16 weight blob."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    weights = model.keras_model.get_weights()
    blob_path = directory / BLOB_NAME
    write_weights_blob(weights, blob_path, precision)
    meta = {
        "format": "lesionscreen-model/1",
        "backbone": model.backbone_name,
        "head": head_to_dict(model.head),
        "task": model.task.value,
        "class_names": list(model.class_names),
        "image_size": model.input_size,
        "precision": precision,
        "history": model.history,
        "fold_id": model.fold_id,
        "seed": model.seed,
        "weights_digest_fp32": weights_digest(weights),
        "blob_bytes": blob_path.stat().st_size,
    }
    (directory / META_NAME).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return directory


def load_model(directory: str | Path) -> ScreeningModel:
    """Rebuild the architecture and load the stored weights (fp16 blobs are
    upcast to fp32 for computation)."""
    directory = Path(directory)
    meta = json.loads((directory / META_NAME).read_text())
    model = build_model(
        backbone=meta["backbone"],
        head=head_from_dict(meta["head"]),
        task=Task(meta["task"]),
        weights=None,
        seed=0,
        image_size=int(meta.get("image_size", INPUT_SIZE)),
    )
    arrays = read_weights_blob(directory / BLOB_NAME)
    model.keras_model.set_weights(arrays)
    model.history = meta.get("history")
    model.fold_id = meta.get("fold_id")
    model.seed = meta.get("seed")
    return model
