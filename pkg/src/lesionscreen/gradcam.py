"""Gradient-weighted class activation maps and overlay rendering.

For a target class c, the activations A^k of the chosen convolutional layer
are weighted by alpha_k, the spatial average of d(score_c)/dA^k, summed over
channels, and rectified: raw = relu(sum_k alpha_k A^k). The heatmap is the
min-max normalized raw map resized bilinearly to the input resolution; a
constant raw map normalizes to all zeros. Gradients are taken with respect
to the pre-softmax class score.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import tensorflow as tf
import keras

from .models import ScreeningModel


class GradCamError(ValueError):
    pass


@dataclass(frozen=True)
class GradCamResult:
    heatmap: np.ndarray        # (H, W) in [0, 1] at input resolution
    raw_map: np.ndarray        # (h, w) rectified class-activation map
    target_class: int
    layer: str


@dataclass(frozen=True)
class OverlayImage:
    image: np.ndarray          # (H, W, 3) float32 in [0, 1]
    alpha: float
    colormap: str


def _screening_tap(model: ScreeningModel, layer: str | None) -> tuple[keras.Model, str]:
    """Recompose the functional graph so both the conv feature map and the
    pre-softmax logits are outputs. Layers (and weights) are shared with the
    trained model."""
    km = model.keras_model
    inputs = keras.Input(shape=km.input_shape[1:], name="pixels")
    x = km.get_layer("pixel_norm")(inputs)
    if layer is None:
        conv = model.backbone(x, training=False)
        feature_map = conv
        layer_name = f"{model.backbone_name}:output"
    else:
        bb = model.backbone
        try:
            inner = bb.get_layer(layer)
        except ValueError as exc:
            raise GradCamError(f"backbone has no layer named {layer!r}") from exc
        sub = keras.Model(bb.inputs, [inner.output, bb.output])
        conv, feature_map = sub(x, training=False)
        layer_name = layer
    h = km.get_layer("embedding_pool")(feature_map)
    for i in range(model.head.n_layers):
        h = km.get_layer(f"head_dense_{i + 1}")(h)
        h = km.get_layer(f"head_dropout_{i + 1}")(h, training=False)
    logits = km.get_layer("class_logits")(h)
    return keras.Model(inputs, [conv, logits]), layer_name


def _flat_tap(model: keras.Model, layer: str | None) -> tuple[keras.Model, str]:
    """Tap a plain (non-nested) functional model; the model output itself is
    taken as the class score vector."""
    if layer is None:
        candidates = [
            l.name for l in model.layers
            if isinstance(getattr(l, "output", None), object)
            and hasattr(l, "output")
            and len(getattr(l.output, "shape", ())) == 4
        ]
        if not candidates:
            raise GradCamError("model has no convolutional (4-D output) layer")
        layer = candidates[-1]
    try:
        tapped = model.get_layer(layer)
    except ValueError as exc:
        raise GradCamError(f"model has no layer named {layer!r}") from exc
    return keras.Model(model.inputs, [tapped.output, model.output]), layer


def grad_cam(
    model: ScreeningModel | keras.Model,
    image: np.ndarray,
    target_class: int,
    layer: str | None = None,
) -> GradCamResult:
    """Compute the class-activation heatmap for one preprocessed image.

    ``layer`` defaults to the backbone's final convolutional feature map for
    ScreeningModel (any backbone layer may be named instead); for a plain
    keras model the last 4-D-output layer is used.
    """
    if isinstance(model, ScreeningModel):
        n_classes = model.n_classes
        tap, layer_name = _screening_tap(model, layer)
    else:
        n_classes = int(model.output_shape[-1])
        tap, layer_name = _flat_tap(model, layer)
    if not 0 <= target_class < n_classes:
        raise GradCamError(f"target class {target_class} out of range [0, {n_classes})")

    x = np.asarray(image, dtype=np.float32)
    if x.ndim == 3:
        x = x[None, ...]
    if x.ndim != 4 or x.shape[0] != 1:
        raise GradCamError(f"expected one (H, W, 3) image, got shape {np.shape(image)}")

    with tf.GradientTape() as tape:
        conv, scores = tap(tf.constant(x), training=False)
        class_score = scores[:, target_class]
    grads = tape.gradient(class_score, conv)
    if grads is None:
        grads = tf.zeros_like(conv)

    alpha = tf.reduce_mean(grads, axis=(0, 1, 2))
    raw = tf.nn.relu(tf.reduce_sum(conv[0] * alpha, axis=-1)).numpy()

    lo, hi = float(raw.min()), float(raw.max())
    if hi > lo:
        normalized = (raw - lo) / (hi - lo)
    else:
        normalized = np.zeros_like(raw)
    heatmap = tf.image.resize(
        normalized[..., None], (x.shape[1], x.shape[2]), method="bilinear"
    ).numpy()[..., 0]
    heatmap = np.clip(heatmap, 0.0, 1.0).astype(np.float32)
    return GradCamResult(heatmap=heatmap, raw_map=raw.astype(np.float32),
                         target_class=target_class, layer=layer_name)


def overlay(
    original: np.ndarray,
    result: GradCamResult,
    alpha: float = 0.4,
    colormap: str = "turbo",
) -> OverlayImage:
    """Alpha-blend the colormapped heatmap over the original image.

    Heatmap value 0 maps to the colormap's cold end, 1 to the warm end. The
    heatmap is resized to the original's dimensions when they differ.
    """
    if not 0.0 <= alpha <= 1.0:
        raise GradCamError(f"alpha must be in [0, 1], got {alpha}")
    img = np.asarray(original)
    if img.dtype == np.uint8:
        img = img.astype(np.float32) / 255.0
    img = np.clip(np.asarray(img, dtype=np.float32), 0.0, 1.0)
    if img.ndim != 3 or img.shape[2] != 3:
        raise GradCamError(f"original must be (H, W, 3), got {img.shape}")

    heat = result.heatmap
    if heat.shape != img.shape[:2]:
        heat = tf.image.resize(
            heat[..., None], img.shape[:2], method="bilinear"
        ).numpy()[..., 0]
        heat = np.clip(heat, 0.0, 1.0)

    from matplotlib import colormaps

    cmap = colormaps[colormap]
    colored = cmap(heat)[..., :3].astype(np.float32)
    blended = np.clip(alpha * colored + (1.0 - alpha) * img, 0.0, 1.0)
    return OverlayImage(image=blended.astype(np.float32), alpha=alpha, colormap=colormap)


def save_heatmap_png(result: GradCamResult, path: str | Path) -> None:
    """Export the heatmap as an 8-bit grayscale image."""
    from PIL import Image

    data = np.round(result.heatmap * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="L").save(Path(path))


def save_overlay_png(image: OverlayImage, path: str | Path) -> None:
    from PIL import Image

    data = np.round(image.image * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(Path(path))
