import base64
import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from lesionscreen.heads import HeadConfig
from lesionscreen.labels import Task
from lesionscreen.models import build_model
from lesionscreen.preprocess import CropRect, PreprocessConfig, preprocess_image
from lesionscreen.service import DISCLAIMER, create_app

SMALL = 32


@pytest.fixture(scope="module")
def served(tmp_path_factory):
    from lesionscreen.artifacts import quantize_fp16, save_artifact

    model = build_model("mobilenetv3small", HeadConfig(1, (16,), (0.0,), 1e-3),
                        Task.MULTICLASS, seed=31, image_size=SMALL)
    root = tmp_path_factory.mktemp("svc")
    save_artifact(model, root / "fp32")
    fp16 = quantize_fp16(root / "fp32", root / "fp16")
    app = create_app({"default": root / "fp32", "quantized": fp16.directory},
                     default_model="default")
    from lesionscreen.artifacts import load_artifact

    return TestClient(app), load_artifact(root / "fp32")


def encode_image(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(pixels.astype(np.uint8), "RGB").save(buf, format="PNG")
    return buf.getvalue()


def test_health(served):
    client, _ = served
    response = client.get("/api/v1/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "ok"
    assert "version" in body


def test_models_catalog(served):
    client, _ = served
    body = client.get("/api/v1/models").json()
    assert body["default"] == "default"
    by_id = {m["id"]: m for m in body["models"]}
    assert by_id["quantized"]["precision"] == "fp16"
    assert by_id["default"]["precision"] == "fp32"
    assert by_id["default"]["class_names"] == ["Acne", "Chickenpox", "Mpox", "Healthy"]
    assert all("version" in m for m in body["models"])


def test_predict_json_matches_in_process(served, rng):
    client, model = served
    pixels = rng.integers(0, 256, (64, 64, 3))
    payload = {"image_b64": base64.b64encode(encode_image(pixels)).decode()}
    response = client.post("/api/v1/predict", json=payload)
    assert response.status_code == 200
    body = response.json()

    tensor = preprocess_image(encode_image(pixels),
                              PreprocessConfig(SMALL, SMALL))
    expected = model.predict_proba(tensor)[0]
    names = model.class_names
    for name, value in body["probabilities"].items():
        assert value == pytest.approx(float(expected[names.index(name)]), abs=1e-6)
    assert body["top_label"] == names[int(expected.argmax())]
    assert body["disclaimer"] == DISCLAIMER
    assert sum(body["probabilities"].values()) == pytest.approx(1.0, abs=1e-6)
    assert body["model"]["id"] == "default"
    assert "latency_s" in body


def test_predict_with_crop_matches_cropped_preprocess(served, rng):
    client, model = served
    pixels = rng.integers(0, 256, (100, 100, 3))
    crop = {"x": 10, "y": 20, "width": 50, "height": 40}
    payload = {
        "image_b64": base64.b64encode(encode_image(pixels)).decode(),
        "crop": crop,
    }
    body = client.post("/api/v1/predict", json=payload).json()
    tensor = preprocess_image(
        encode_image(pixels),
        PreprocessConfig(SMALL, SMALL, crop=CropRect(10, 20, 50, 40)),
    )
    expected = model.predict_proba(tensor)[0]
    names = model.class_names
    for name, value in body["probabilities"].items():
        assert value == pytest.approx(float(expected[names.index(name)]), abs=1e-6)


def test_predict_multipart(served, rng):
    client, _ = served
    data = encode_image(rng.integers(0, 256, (48, 48, 3)))
    response = client.post(
        "/api/v1/predict",
        files={"image": ("photo.png", data, "image/png")},
        data={"model_id": "quantized", "explain": "true",
              "crop_x": "0", "crop_y": "0", "crop_width": "48", "crop_height": "48"},
    )
    assert response.status_code == 200
    body = response.json()
    assert body["model"]["id"] == "quantized"
    overlay = base64.b64decode(body["overlay_png_b64"])
    image = Image.open(io.BytesIO(overlay))
    assert image.size == (SMALL, SMALL)


def test_repeated_requests_identical(served, rng):
    client, _ = served
    payload = {"image_b64": base64.b64encode(
        encode_image(rng.integers(0, 256, (40, 40, 3)))).decode()}
    a = client.post("/api/v1/predict", json=payload).json()
    b = client.post("/api/v1/predict", json=payload).json()
    assert a["probabilities"] == b["probabilities"]
    assert a["top_label"] == b["top_label"]


def test_error_undecodable_payload(served):
    client, _ = served
    payload = {"image_b64": base64.b64encode(b"plain text, not an image").decode()}
    response = client.post("/api/v1/predict", json=payload)
    assert response.status_code == 400
    assert response.json()["error"] == "undecodable_image"


def test_error_bad_base64(served):
    client, _ = served
    response = client.post("/api/v1/predict", json={"image_b64": "!!!not-base64!!!"})
    assert response.status_code == 400
    assert response.json()["error"] == "invalid_base64"


def test_error_out_of_bounds_crop(served, rng):
    client, _ = served
    payload = {
        "image_b64": base64.b64encode(encode_image(rng.integers(0, 256, (30, 30, 3)))).decode(),
        "crop": {"x": 20, "y": 20, "width": 30, "height": 30},
    }
    response = client.post("/api/v1/predict", json=payload)
    assert response.status_code == 400
    assert response.json()["error"] == "crop_out_of_bounds"


def test_error_unknown_model(served, rng):
    client, _ = served
    payload = {
        "image_b64": base64.b64encode(encode_image(rng.integers(0, 256, (30, 30, 3)))).decode(),
        "model_id": "nope",
    }
    response = client.post("/api/v1/predict", json=payload)
    assert response.status_code == 404
    assert response.json()["error"] == "unknown_model"


def test_error_payload_too_large(served):
    client, _ = served
    big = base64.b64encode(b"x" * (11 * 1024 * 1024)).decode()
    response = client.post("/api/v1/predict", json={"image_b64": big})
    assert response.status_code == 413


def test_cors_headers_present(served):
    client, _ = served
    response = client.get("/api/v1/health", headers={"Origin": "http://example.test"})
    assert response.headers.get("access-control-allow-origin") == "*"


def test_openapi_export(served, tmp_path):
    from lesionscreen.service import export_openapi

    client, _ = served
    export_openapi(client.app, tmp_path / "schema.json")
    import json

    schema = json.loads((tmp_path / "schema.json").read_text())
    assert "/api/v1/predict" in schema["paths"]
