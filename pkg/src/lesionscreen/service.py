"""HTTP inference API for the screening UI.

Endpoints (JSON responses, permissive CORS):

- ``POST /api/v1/predict`` — multipart upload (``image`` file field plus
  optional ``crop_x/crop_y/crop_width/crop_height``, ``model_id``,
  ``explain`` form fields) or a JSON body ``{"image_b64": ..., "crop":
  {x, y, width, height}, "model_id": ..., "explain": bool}``. Returns
  per-class probabilities, the top label, model metadata, latency, the
  screening disclaimer, and (when requested) a base64 PNG Grad-CAM overlay.
- ``GET /api/v1/models`` — catalog of loaded artifacts.
- ``GET /api/v1/health`` — liveness + version.

The server holds immutable loaded models; requests never mutate state and
uploaded images are never persisted. Uploads are limited to 10 MB.
"""

from __future__ import annotations

import base64
import binascii
import io
import time
from pathlib import Path
from typing import Mapping

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import __version__
from .preprocess import CropRect, PreprocessConfig, PreprocessError, preprocess_image

MAX_UPLOAD_BYTES = 10 * 1024 * 1024
DISCLAIMER = (
    "Preliminary screening aid only; not a medical diagnosis. "
    "Consult a physician or dermatologist about any suspicious skin lesion."
)


class _LoadedModel:
    def __init__(self, model_id: str, model, meta: dict, digest: str):
        self.model_id = model_id
        self.model = model
        self.meta = meta
        self.version = f"{__version__}+{digest[:8]}"

    def describe(self) -> dict:
        return {
            "id": self.model_id,
            "backbone": self.meta["backbone"],
            "task": self.meta["task"],
            "precision": self.meta["precision"],
            "class_names": list(self.model.class_names),
            "version": self.version,
        }


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": detail})


def load_catalog(artifact_dirs: Mapping[str, str | Path]) -> dict[str, _LoadedModel]:
    from .artifacts import artifact_info, load_artifact

    catalog: dict[str, _LoadedModel] = {}
    for model_id, directory in artifact_dirs.items():
        info = artifact_info(directory)
        model = load_artifact(directory)
        digest = info.meta.get("weights_digest_fp32", "0" * 8)
        catalog[model_id] = _LoadedModel(model_id, model, info.meta, digest)
    return catalog


def create_app(
    artifact_dirs: Mapping[str, str | Path],
    default_model: str | None = None,
    max_upload_bytes: int = MAX_UPLOAD_BYTES,
) -> FastAPI:
    """Build the API around the given {model_id: artifact directory} catalog."""
    app = FastAPI(title="lesionscreen service", version=__version__)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    catalog = load_catalog(artifact_dirs)
    if not catalog:
        raise ValueError("at least one model artifact is required")
    default_id = default_model or next(iter(catalog))
    if default_id not in catalog:
        raise ValueError(f"default model {default_id!r} not in catalog")

    @app.get("/api/v1/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/api/v1/models")
    def models():
        return {"models": [m.describe() for m in catalog.values()],
                "default": default_id}

    @app.post("/api/v1/predict")
    async def predict(request: Request):
        body = await request.body()
        if len(body) > max_upload_bytes:
            return _error(413, "payload_too_large",
                          f"request exceeds {max_upload_bytes} bytes")

        content_type = request.headers.get("content-type", "")
        crop = None
        explain = False
        model_id = default_id
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("image")
            if upload is None:
                return _error(400, "missing_image", "multipart field 'image' is required")
            image_bytes = await upload.read() if hasattr(upload, "read") else bytes(upload, "utf-8")
            fields = {k: form.get(k) for k in
                      ("crop_x", "crop_y", "crop_width", "crop_height")}
            if any(v is not None for v in fields.values()):
                if not all(v is not None for v in fields.values()):
                    return _error(400, "invalid_crop", "all four crop fields are required")
                try:
                    crop = CropRect(int(fields["crop_x"]), int(fields["crop_y"]),
                                    int(fields["crop_width"]), int(fields["crop_height"]))
                except (ValueError, PreprocessError) as exc:
                    return _error(400, "invalid_crop", str(exc))
            model_id = str(form.get("model_id") or default_id)
            explain = str(form.get("explain", "false")).lower() in ("1", "true", "yes")
        else:
            try:
                payload = await request.json()
            except Exception:
                return _error(400, "invalid_request",
                              "expected multipart/form-data or a JSON body")
            b64 = payload.get("image_b64")
            if not isinstance(b64, str):
                return _error(400, "missing_image", "JSON field 'image_b64' is required")
            try:
                image_bytes = base64.b64decode(b64, validate=True)
            except (binascii.Error, ValueError):
                return _error(400, "invalid_base64", "image_b64 is not valid base64")
            crop_data = payload.get("crop")
            if crop_data is not None:
                try:
                    crop = CropRect(int(crop_data["x"]), int(crop_data["y"]),
                                    int(crop_data["width"]), int(crop_data["height"]))
                except (KeyError, TypeError, ValueError, PreprocessError) as exc:
                    return _error(400, "invalid_crop", str(exc))
            model_id = payload.get("model_id") or default_id
            explain = bool(payload.get("explain", False))

        if model_id not in catalog:
            return _error(404, "unknown_model", f"no model with id {model_id!r}")
        loaded = catalog[model_id]

        size = loaded.model.input_size
        config = PreprocessConfig(target_height=size, target_width=size, crop=crop)
        started = time.perf_counter()
        try:
            tensor = preprocess_image(image_bytes, config)
        except PreprocessError as exc:
            code = "crop_out_of_bounds" if "crop" in str(exc) else "undecodable_image"
            return _error(400, code, str(exc))

        probs = loaded.model.predict_proba(tensor)[0]
        names = loaded.model.class_names
        top = int(np.argmax(probs))

        overlay_b64 = None
        if explain:
            from .gradcam import grad_cam, overlay as render_overlay

            result = grad_cam(loaded.model, tensor, top)
            blended = render_overlay(tensor, result)
            from PIL import Image

            buf = io.BytesIO()
            Image.fromarray(
                np.round(blended.image * 255).astype(np.uint8), mode="RGB"
            ).save(buf, format="PNG")
            overlay_b64 = base64.b64encode(buf.getvalue()).decode("ascii")

        latency = time.perf_counter() - started
        response = {
            "probabilities": {name: float(p) for name, p in zip(names, probs)},
            "top_label": names[top],
            "model": loaded.describe(),
            "latency_s": latency,
            "disclaimer": DISCLAIMER,
        }
        if overlay_b64 is not None:
            response["overlay_png_b64"] = overlay_b64
        return response

    return app


def export_openapi(app: FastAPI, path: str | Path) -> None:
    """Write the API schema file consumed by UI clients."""
    import json

    Path(path).write_text(json.dumps(app.openapi(), indent=2, sort_keys=True) + "\n")


def serve(artifact_dirs: Mapping[str, str | Path], host: str = "127.0.0.1",
          port: int = 8000, default_model: str | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(artifact_dirs, default_model), host=host, port=port)
