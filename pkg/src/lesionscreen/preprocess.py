"""Image decoding, cropping, resizing, and value normalization.

Everything downstream (augmentation, training, serving) works on float32
``(H, W, 3)`` arrays. The default ``"unit"`` value range is [0, 1]; each
backbone's own pixel normalization is applied inside the model, not here,
so one preprocessed tensor feeds every architecture.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

VALUE_RANGES = ("unit", "identity")


class PreprocessError(ValueError):
    """Undecodable bytes, out-of-bounds crop, or invalid configuration."""


@dataclass(frozen=True)
class CropRect:
    """Axis-aligned rectangle in source-pixel coordinates."""

    x: int
    y: int
    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise PreprocessError(f"crop must have positive size, got {self}")
        if self.x < 0 or self.y < 0:
            raise PreprocessError(f"crop origin must be non-negative, got {self}")


@dataclass(frozen=True)
class PreprocessConfig:
    target_height: int = 224
    target_width: int = 224
    value_range: str = "unit"
    crop: CropRect | None = None

    def __post_init__(self):
        if self.target_height <= 0 or self.target_width <= 0:
            raise PreprocessError("target dimensions must be positive")
        if self.value_range not in VALUE_RANGES:
            raise PreprocessError(
                f"unknown value_range {self.value_range!r}; expected one of {VALUE_RANGES}"
            )


def decode_image(data: bytes) -> Image.Image:
    """Decode encoded image bytes to an RGB PIL image."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise PreprocessError(f"bytes do not decode as an image: {exc}") from exc
    return img.convert("RGB")


def crop_image(img: Image.Image, rect: CropRect) -> Image.Image:
    """Extract ``rect`` from ``img``; the crop must lie within the image."""
    w, h = img.size
    if rect.x + rect.width > w or rect.y + rect.height > h:
        raise PreprocessError(
            f"crop {rect} exceeds image bounds {w}x{h}"
        )
    return img.crop((rect.x, rect.y, rect.x + rect.width, rect.y + rect.height))


def preprocess_image(data: bytes, config: PreprocessConfig = PreprocessConfig()) -> np.ndarray:
    """bytes -> float32 (target_height, target_width, 3) tensor.

    Crop (if configured) is applied before resizing. Resizing is bilinear and
    skipped entirely when the image already matches the target size, so
    already-conforming input with the "identity" range round-trips bit-exactly.
    """
    img = decode_image(data)
    if config.crop is not None:
        img = crop_image(img, config.crop)
    if img.size != (config.target_width, config.target_height):
        img = img.resize((config.target_width, config.target_height), Image.BILINEAR)
    arr = np.asarray(img, dtype=np.float32)
    if config.value_range == "unit":
        arr = arr / 255.0
    return arr


def preprocess_file(path: str | Path, config: PreprocessConfig = PreprocessConfig()) -> np.ndarray:
    return preprocess_image(Path(path).read_bytes(), config)
