"""Frozen pretrained CNN backbones used as feature extractors.

Each entry declares the keras-applications builder, the pooled feature
dimension at 224x224 input, and the pixel normalization the published
weights expect. Pretrained ImageNet weights are consumed as an opaque
artifact: pass ``weights="imagenet"`` (downloads into the keras cache),
a local ``.h5`` path, or ``None`` for randomly initialized filters (useful
for tests and plumbing work without the weight files).
"""

from __future__ import annotations

from dataclasses import dataclass

INPUT_SIZE = 224

# Pixel normalization schemes, applied to unit-range [0, 1] input tensors.
SCALE_PM1 = "scale_pm1"      # x * 2 - 1
CAFFE_BGR = "caffe_bgr"      # x * 255, RGB->BGR, subtract ImageNet BGR means


class BackboneError(ValueError):
    pass


@dataclass(frozen=True)
class BackboneSpec:
    name: str
    builder: str                 # attribute under keras.applications
    feature_dim: int             # channels of the final conv feature map
    normalization: str
    extra_kwargs: tuple[tuple[str, object], ...] = ()


BACKBONES: dict[str, BackboneSpec] = {
    spec.name: spec
    for spec in (
        BackboneSpec("vgg16", "VGG16", 512, CAFFE_BGR),
        BackboneSpec("inceptionresnetv2", "InceptionResNetV2", 1536, SCALE_PM1),
        BackboneSpec("nasnetmobile", "NASNetMobile", 1056, SCALE_PM1),
        BackboneSpec(
            "mobilenetv3small", "MobileNetV3Small", 576, SCALE_PM1,
            (("include_preprocessing", False),),
        ),
        BackboneSpec(
            "mobilenetv3large", "MobileNetV3Large", 960, SCALE_PM1,
            (("include_preprocessing", False),),
        ),
    )
}


def backbone_spec(name: str) -> BackboneSpec:
    key = name.strip().lower()
    if key not in BACKBONES:
        raise BackboneError(
            f"unknown backbone {name!r}; available: {', '.join(sorted(BACKBONES))}"
        )
    return BACKBONES[key]


def build_backbone(name: str, weights: str | None = None, image_size: int = INPUT_SIZE):
    """Instantiate the frozen feature extractor (include_top=False).

    ``image_size`` defaults to the published 224x224 input; smaller sizes are
    mainly useful for fast desk-scale smoke runs. Raises BackboneError when a
    weights artifact is requested but cannot be loaded (missing file, no
    network access to the published weights, ...).
    """
    import keras

    spec = backbone_spec(name)
    builder = getattr(keras.applications, spec.builder)
    kwargs = dict(spec.extra_kwargs)
    try:
        model = builder(
            weights=weights,
            include_top=False,
            input_shape=(image_size, image_size, 3),
            **kwargs,
        )
    except Exception as exc:
        raise BackboneError(
            f"backbone weights artifact unavailable for {spec.name} "
            f"(weights={weights!r}): {exc}"
        ) from exc
    model.trainable = False
    return model
