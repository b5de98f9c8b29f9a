"""Visualize the six training-time augmentations on one sample image.

Run:  python demos/02_augmentations.py
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from lesionscreen import AugmentConfig, augment
from lesionscreen.augment import (
    adjust_brightness,
    adjust_contrast,
    flip,
    rotate,
    translate,
    zoom,
)

OUT = Path(__file__).parent / "output"


def sample_image(size: int = 96) -> np.ndarray:
    """A smooth blob on a gradient, stand-in for a close skin photo."""
    yy, xx = np.mgrid[0:size, 0:size] / size
    blob = np.exp(-(((xx - 0.6) ** 2 + (yy - 0.4) ** 2) / 0.02))
    image = np.stack([0.8 - 0.2 * yy, 0.6 - 0.2 * yy, 0.5 + 0.1 * xx], axis=-1)
    image[..., 0] += 0.3 * blob
    image[..., 1] -= 0.2 * blob
    return np.clip(image, 0, 1).astype(np.float32)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    image = sample_image()
    rng = np.random.default_rng(7)

    panels = {
        "original": image,
        "flip (both)": flip(image, 2, np.random.default_rng(3)),
        "rotate +40deg": rotate(image, 40.0),
        "translate (+0.2, +0.1)": translate(image, 0.2, 0.1),
        "zoom in (-0.3)": zoom(image, -0.3),
        "zoom out (+0.3)": zoom(image, 0.3),
        "contrast +0.5": adjust_contrast(image, 0.5),
        "brightness +0.25": adjust_brightness(image, 0.25),
        "full pipeline": augment(
            image,
            AugmentConfig(rotation=0.1, zoom=0.3, contrast=0.4, brightness=0.2,
                          tr_width=0.2, tr_height=0.2, flip_type=2),
            rng,
        ),
    }

    fig, axes = plt.subplots(3, 3, figsize=(9, 9))
    for ax, (title, img) in zip(axes.ravel(), panels.items()):
        ax.imshow(img)
        ax.set_title(title, fontsize=10)
        ax.axis("off")
    fig.tight_layout()
    path = OUT / "02_augmentations.png"
    fig.savefig(path, dpi=110)
    print(f"augmentation grid written to {path}")
    # seed 1 draws the no-flip branch; all factors are zero by default
    identity = augment(image, AugmentConfig(flip_type=1), np.random.default_rng(1))
    print("identity config is bit-exact:", np.array_equal(identity, image))


if __name__ == "__main__":
    main()
