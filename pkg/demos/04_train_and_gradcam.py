"""Smoke-scale transfer learning and Grad-CAM explanation export.

Trains a VGG16-backed head (random filters, 32x32 input so the demo runs in
well under a minute on CPU) on colored synthetic patches, then renders the
class-activation overlay for one test image. With pretrained weights and the
real corpus the exact same calls run the published configuration.

Run:  python demos/04_train_and_gradcam.py
"""

from pathlib import Path

import numpy as np

from lesionscreen import HeadConfig, Task
from lesionscreen.gradcam import grad_cam, overlay, save_heatmap_png, save_overlay_png
from lesionscreen.models import build_model, predict, train

OUT = Path(__file__).parent / "output"


def colored_patches(n_per_class: int, size: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    x = np.zeros((2 * n_per_class, size, size, 3), dtype=np.float32)
    x[:n_per_class, :, :, 0] = 1.0   # class 0: red-dominant
    x[n_per_class:, :, :, 2] = 1.0   # class 1: blue-dominant
    x += rng.random(x.shape, dtype=np.float32) * 0.1
    y = np.array([0] * n_per_class + [1] * n_per_class)
    return np.clip(x, 0, 1), y


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    head = HeadConfig(n_layers=1, dense=(64,), dropout=(0.1,), learning_rate=5e-3)
    model = build_model("vgg16", head, Task.BINARY, seed=3, image_size=32)
    print(f"backbone: {model.backbone_name}, trainable head params: "
          f"{sum(int(np.prod(w.shape)) for w in model.keras_model.trainable_weights)}")

    x, y = colored_patches(12, 32)
    train(model, x[4:], y[4:], x[:4], y[:4], max_epochs=30, seed=1, patience=30)
    print(f"epochs: {len(model.history['loss'])}, "
          f"best train accuracy: {max(model.history['accuracy']):.3f}")

    test_image = x[0]
    probs = predict(model, test_image)
    top = int(probs.argmax())
    print(f"prediction: class {top} with p={probs[top]:.3f}")

    result = grad_cam(model, test_image, top)
    save_heatmap_png(result, OUT / "04_heatmap.png")
    save_overlay_png(overlay(test_image, result, alpha=0.45), OUT / "04_overlay.png")
    print(f"heatmap + overlay written to {OUT}")


if __name__ == "__main__":
    main()
