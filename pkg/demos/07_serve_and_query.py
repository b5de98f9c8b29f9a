"""Exercise the HTTP screening API end to end, in process.

Builds a small model artifact, mounts the FastAPI app on a test client, and
runs the full screening flow: upload -> crop -> probabilities + overlay.
(`lesionscreen serve --models default=<dir>` serves the same app over a
real socket.)

Run:  python demos/07_serve_and_query.py
"""

import base64
import io
from pathlib import Path

import numpy as np
from PIL import Image

from lesionscreen import HeadConfig, Task
from lesionscreen.artifacts import quantize_fp16, save_artifact
from lesionscreen.models import build_model
from lesionscreen.service import create_app

OUT = Path(__file__).parent / "output" / "07_service"


def main() -> None:
    from fastapi.testclient import TestClient

    model = build_model(
        "mobilenetv3small", HeadConfig(1, (64,), (0.0,), 1e-4), Task.MULTICLASS,
        seed=5, image_size=64,
    )
    fp32 = save_artifact(model, OUT / "fp32")
    fp16 = quantize_fp16(fp32.directory, OUT / "fp16")
    app = create_app({"screening-fp16": fp16.directory})
    client = TestClient(app)

    print("health:", client.get("/api/v1/health").json())
    catalog = client.get("/api/v1/models").json()
    print("models:", [(m["id"], m["precision"]) for m in catalog["models"]])

    rng = np.random.default_rng(1)
    pixels = rng.integers(0, 256, (200, 160, 3), dtype=np.uint8)
    buf = io.BytesIO()
    Image.fromarray(pixels, "RGB").save(buf, format="PNG")

    response = client.post("/api/v1/predict", json={
        "image_b64": base64.b64encode(buf.getvalue()).decode(),
        "crop": {"x": 20, "y": 40, "width": 120, "height": 120},
        "explain": True,
    })
    body = response.json()
    print("top label:", body["top_label"])
    for name, p in sorted(body["probabilities"].items(), key=lambda kv: -kv[1]):
        print(f"  {name:10s} {100 * p:5.1f}%")
    print("disclaimer:", body["disclaimer"][:60] + "...")

    overlay_path = OUT / "overlay.png"
    overlay_path.write_bytes(base64.b64decode(body["overlay_png_b64"]))
    print(f"overlay saved to {overlay_path}")


if __name__ == "__main__":
    main()
