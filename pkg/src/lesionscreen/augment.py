"""Training-time image augmentation: flip, rotation, translation, zoom,
contrast, brightness.

Operates on float32 (H, W, 3) tensors in [0, 1]. Each transform factor is a
fraction of full scale in [0, 0.5]; the applied parameter is drawn uniformly
from the symmetric range. A rotation factor of 0.2 therefore means an angle
uniform in [-72, +72] degrees (0.2 of a full turn). Geometric transforms use
reflection padding so no artificial borders appear on skin images.

Augmentation is only ever applied to training batches; validation and test
tensors pass through untouched (enforced by the cross-validation runner).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

FLIP_VERTICAL, FLIP_HORIZONTAL, FLIP_BOTH = 0, 1, 2
_FACTOR_FIELDS = ("rotation", "zoom", "contrast", "brightness", "tr_width", "tr_height")


@dataclass(frozen=True)
class AugmentConfig:
    rotation: float = 0.0
    zoom: float = 0.0
    contrast: float = 0.0
    brightness: float = 0.0
    tr_width: float = 0.0
    tr_height: float = 0.0
    flip_type: int = FLIP_HORIZONTAL

    def __post_init__(self):
        for name in _FACTOR_FIELDS:
            value = getattr(self, name)
            if not 0.0 <= value <= 0.5:
                raise ValueError(f"{name} factor must be in [0, 0.5], got {value}")
        if self.flip_type not in (FLIP_VERTICAL, FLIP_HORIZONTAL, FLIP_BOTH):
            raise ValueError(f"flip_type must be 0, 1, or 2, got {self.flip_type}")

    def flat(self) -> dict[str, float]:
        out = {name: float(getattr(self, name)) for name in _FACTOR_FIELDS}
        out["flip_type"] = int(self.flip_type)
        return out


def flip(image: np.ndarray, mode: int, rng: np.random.Generator) -> np.ndarray:
    """Randomly mirror the image. Vertical/horizontal modes draw flip-or-not;
    mode 2 draws one of {none, vertical, horizontal, both} uniformly."""
    if mode == FLIP_BOTH:
        choice = rng.integers(4)
        if choice == 1:
            return image[::-1, :, :]
        if choice == 2:
            return image[:, ::-1, :]
        if choice == 3:
            return image[::-1, ::-1, :]
        return image
    if rng.integers(2) == 1:
        return image[::-1, :, :] if mode == FLIP_VERTICAL else image[:, ::-1, :]
    return image


def rotate(image: np.ndarray, angle_degrees: float) -> np.ndarray:
    """Rotate about the center with bilinear sampling and reflective fill."""
    if angle_degrees == 0.0:
        return image
    out = ndimage.rotate(
        image, angle_degrees, axes=(1, 0), reshape=False, order=1, mode="reflect"
    )
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def translate(image: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """Shift content by (dx*W, dy*H) pixels; positive dx moves content right,
    positive dy moves it down. Exposed edges are reflect-filled."""
    if dx == 0.0 and dy == 0.0:
        return image
    h, w = image.shape[:2]
    out = ndimage.shift(image, (dy * h, dx * w, 0.0), order=1, mode="reflect")
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def zoom(image: np.ndarray, factor: float) -> np.ndarray:
    """Rescale about the center: each output pixel samples the input at
    center + (1+factor)*(offset from center). Negative factors magnify the
    central region; positive factors shrink content, reflect-filling borders."""
    if factor == 0.0:
        return image
    scale = 1.0 + factor
    h, w = image.shape[:2]
    center = np.array([(h - 1) / 2.0, (w - 1) / 2.0, 0.0])
    matrix = np.diag([scale, scale, 1.0])
    offset = center - matrix @ center
    out = ndimage.affine_transform(image, matrix, offset=offset, order=1, mode="reflect")
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def adjust_contrast(image: np.ndarray, factor: float) -> np.ndarray:
    """Scale deviations from the per-channel mean by (1 + factor).

    Arithmetic runs in float64 so constant images are exact fixed points."""
    if factor == 0.0:
        return image
    x = image.astype(np.float64)
    mean = x.mean(axis=(0, 1), keepdims=True)
    out = mean + (1.0 + factor) * (x - mean)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def adjust_brightness(image: np.ndarray, factor: float) -> np.ndarray:
    """Add factor * full value range (1.0 for unit-range tensors)."""
    if factor == 0.0:
        return image
    return np.clip(image + factor, 0.0, 1.0).astype(np.float32)


def augment(image: np.ndarray, config: AugmentConfig, rng: np.random.Generator) -> np.ndarray:
    """Apply the six transforms in fixed order with parameters drawn from rng.

    Order: flip, rotation, translation, zoom, contrast, brightness. The draw
    sequence is fixed regardless of factor values, so a given seed always
    consumes the stream identically. Output shape equals input shape.
    """
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {image.shape}")
    out = flip(image, config.flip_type, rng)
    angle = rng.uniform(-config.rotation, config.rotation) * 360.0
    dx = rng.uniform(-config.tr_width, config.tr_width)
    dy = rng.uniform(-config.tr_height, config.tr_height)
    zf = rng.uniform(-config.zoom, config.zoom)
    cf = rng.uniform(-config.contrast, config.contrast)
    bf = rng.uniform(-config.brightness, config.brightness)
    out = rotate(out, angle)
    out = translate(out, dx, dy)
    out = zoom(out, zf)
    out = adjust_contrast(out, cf)
    out = adjust_brightness(out, bf)
    return out
