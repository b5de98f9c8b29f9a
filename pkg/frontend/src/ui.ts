// DOM wiring for the single-page screening client. All classification
// numbers shown here come from the service response via buildResultView.

import {
  ApiClient,
  blobToBase64,
  buildPredictBody,
  humanizeError,
  type CropRect,
} from "./api.js";
import { fullImageRect, isFullImage, rectFromDrag } from "./crop.js";
import { ScreeningSession } from "./session.js";
import { buildResultView, overlayVisibility, type ResultView } from "./view.js";

interface LoadedImage {
  blob: Blob;
  name: string;
  width: number;
  height: number;
  objectUrl: string;
}

export class ScreeningUi {
  private readonly session = new ScreeningSession();
  private image: LoadedImage | null = null;
  private crop: CropRect | null = null;
  private dragStart: { x: number; y: number } | null = null;
  private lastView: ResultView | null = null;

  constructor(private readonly root: Document, private readonly api: ApiClient) {}

  private el<T extends HTMLElement>(id: string): T {
    const found = this.root.getElementById(id);
    if (!found) throw new Error(`missing element #${id}`);
    return found as T;
  }

  async start(): Promise<void> {
    this.el<HTMLInputElement>("file-input").addEventListener("change", (e) => {
      const input = e.target as HTMLInputElement;
      const file = input.files?.[0];
      if (file) void this.loadImage(file, file.name);
    });
    this.el<HTMLButtonElement>("camera-button").addEventListener("click", () => {
      void this.captureFromCamera();
    });
    this.el<HTMLButtonElement>("submit-button").addEventListener("click", () => {
      void this.submit();
    });
    this.el<HTMLButtonElement>("reset-crop").addEventListener("click", () => {
      this.resetCrop();
    });
    this.el<HTMLInputElement>("opacity").addEventListener("input", () => {
      this.applyOverlayOpacity();
    });
    for (const id of ["crop-x", "crop-y", "crop-w", "crop-h"]) {
      this.el<HTMLInputElement>(id).addEventListener("change", () => this.cropFromInputs());
    }
    this.wireCanvasDrag();
    await this.loadCatalog();
  }

  private async loadCatalog(): Promise<void> {
    const picker = this.el<HTMLSelectElement>("model-picker");
    try {
      const catalog = await this.api.models();
      picker.innerHTML = "";
      for (const model of catalog.models) {
        const option = this.root.createElement("option");
        option.value = model.id;
        option.textContent = `${model.id} (${model.backbone}, ${model.precision})`;
        option.selected = model.id === catalog.default;
        picker.appendChild(option);
      }
      this.setStatus(`connected; ${catalog.models.length} model(s) available`);
    } catch (error) {
      this.setStatus(humanizeError(error), true);
    }
  }

  private async captureFromCamera(): Promise<void> {
    if (!navigator.mediaDevices?.getUserMedia) {
      this.setStatus("camera not available in this browser; use the file picker", true);
      return;
    }
    try {
      const stream = await navigator.mediaDevices.getUserMedia({ video: true });
      const video = this.root.createElement("video");
      video.srcObject = stream;
      await video.play();
      const canvas = this.root.createElement("canvas");
      canvas.width = video.videoWidth;
      canvas.height = video.videoHeight;
      canvas.getContext("2d")!.drawImage(video, 0, 0);
      stream.getTracks().forEach((t) => t.stop());
      const blob: Blob = await new Promise((resolve, reject) =>
        canvas.toBlob((b) => (b ? resolve(b) : reject(new Error("capture failed"))), "image/png"),
      );
      await this.loadImage(blob, "camera-capture.png");
    } catch (error) {
      this.setStatus(`camera capture failed: ${String(error)}`, true);
    }
  }

  private async loadImage(blob: Blob, name: string): Promise<void> {
    const objectUrl = URL.createObjectURL(blob);
    const probe = new Image();
    await new Promise<void>((resolve, reject) => {
      probe.onload = () => resolve();
      probe.onerror = () => reject(new Error("file does not decode as an image"));
      probe.src = objectUrl;
    });
    if (this.image) URL.revokeObjectURL(this.image.objectUrl);
    this.image = {
      blob,
      name,
      width: probe.naturalWidth,
      height: probe.naturalHeight,
      objectUrl,
    };
    this.resetCrop();
    this.drawPhoto(probe);
    this.el<HTMLButtonElement>("submit-button").disabled = false;
    this.setStatus(`${name}: ${probe.naturalWidth}x${probe.naturalHeight}px; drag on the photo to crop`);
  }

  private canvas(): HTMLCanvasElement {
    return this.el<HTMLCanvasElement>("photo-canvas");
  }

  private drawPhoto(bitmap?: CanvasImageSource): void {
    if (!this.image) return;
    const canvas = this.canvas();
    const scale = Math.min(1, 480 / this.image.width);
    canvas.width = Math.round(this.image.width * scale);
    canvas.height = Math.round(this.image.height * scale);
    canvas.dataset.scale = String(scale);
    const ctx = canvas.getContext("2d")!;
    const draw = (source: CanvasImageSource) => {
      ctx.clearRect(0, 0, canvas.width, canvas.height);
      ctx.drawImage(source, 0, 0, canvas.width, canvas.height);
      this.drawCropOutline(ctx, scale);
    };
    if (bitmap) {
      draw(bitmap);
    } else {
      const img = new Image();
      img.onload = () => draw(img);
      img.src = this.image.objectUrl;
    }
  }

  private drawCropOutline(ctx: CanvasRenderingContext2D, scale: number): void {
    if (!this.image || !this.crop) return;
    if (isFullImage(this.crop, this.image.width, this.image.height)) return;
    ctx.strokeStyle = "#ff5f5f";
    ctx.lineWidth = 2;
    ctx.strokeRect(
      this.crop.x * scale,
      this.crop.y * scale,
      this.crop.width * scale,
      this.crop.height * scale,
    );
  }

  private wireCanvasDrag(): void {
    const canvas = this.canvas();
    const toSource = (event: MouseEvent) => {
      const bounds = canvas.getBoundingClientRect();
      const scale = Number(canvas.dataset.scale || 1);
      return {
        x: (event.clientX - bounds.left) / scale,
        y: (event.clientY - bounds.top) / scale,
      };
    };
    canvas.addEventListener("mousedown", (e) => {
      this.dragStart = toSource(e);
    });
    canvas.addEventListener("mouseup", (e) => {
      if (!this.dragStart || !this.image) return;
      const end = toSource(e);
      this.setCrop(
        rectFromDrag(this.dragStart.x, this.dragStart.y, end.x, end.y,
                     this.image.width, this.image.height),
      );
      this.dragStart = null;
    });
  }

  private setCrop(rect: CropRect): void {
    this.crop = rect;
    this.el<HTMLInputElement>("crop-x").value = String(rect.x);
    this.el<HTMLInputElement>("crop-y").value = String(rect.y);
    this.el<HTMLInputElement>("crop-w").value = String(rect.width);
    this.el<HTMLInputElement>("crop-h").value = String(rect.height);
    this.drawPhoto();
  }

  private cropFromInputs(): void {
    if (!this.image) return;
    const x = Number(this.el<HTMLInputElement>("crop-x").value);
    const y = Number(this.el<HTMLInputElement>("crop-y").value);
    const w = Number(this.el<HTMLInputElement>("crop-w").value);
    const h = Number(this.el<HTMLInputElement>("crop-h").value);
    this.setCrop(rectFromDrag(x, y, x + w, y + h, this.image.width, this.image.height));
  }

  private resetCrop(): void {
    if (!this.image) return;
    this.setCrop(fullImageRect(this.image.width, this.image.height));
  }

  private async submit(): Promise<void> {
    if (!this.image || !this.crop) return;
    if (!this.session.begin()) return;
    const button = this.el<HTMLButtonElement>("submit-button");
    button.disabled = true;
    this.setStatus("screening…");
    try {
      const crop = isFullImage(this.crop, this.image.width, this.image.height)
        ? null
        : this.crop;
      const body = buildPredictBody(
        await blobToBase64(this.image.blob),
        crop,
        this.el<HTMLSelectElement>("model-picker").value || null,
        true,
      );
      const response = await this.api.predict(body);
      this.session.settle({
        imageName: this.image.name,
        crop: this.crop,
        modelId: response.model.id,
        response,
        at: new Date(),
      });
      this.renderResult(buildResultView(response));
      this.setStatus(`done in ${(response.latency_s * 1000).toFixed(0)} ms`);
    } catch (error) {
      this.session.settle();
      this.setStatus(humanizeError(error), true);
    } finally {
      button.disabled = false;
    }
  }

  renderResult(view: ResultView): void {
    this.lastView = view;
    this.el("result-panel").hidden = false;
    this.el("top-label").textContent = view.topLabel;
    this.el("model-version").textContent =
      `${view.modelId} · ${view.precision} · v${view.modelVersion}`;
    this.el("disclaimer").textContent = view.disclaimer;

    const bars = this.el("bars");
    bars.innerHTML = "";
    for (const bar of view.bars) {
      const row = this.root.createElement("div");
      row.className = "bar-row" + (bar.highlighted ? " top" : "");
      row.setAttribute("role", "listitem");
      const label = this.root.createElement("span");
      label.className = "bar-label";
      label.textContent = bar.label;
      const track = this.root.createElement("div");
      track.className = "bar-track";
      const fill = this.root.createElement("div");
      fill.className = "bar-fill";
      fill.style.width = `${Math.max(bar.percent, 1)}%`;
      track.appendChild(fill);
      const pct = this.root.createElement("span");
      pct.className = "bar-pct";
      pct.textContent = `${bar.percent}%`;
      row.append(label, track, pct);
      bars.appendChild(row);
    }

    const photo = this.el<HTMLImageElement>("result-photo");
    photo.src = this.image?.objectUrl ?? "";
    photo.alt = `uploaded photo (${this.image?.name ?? "unknown"})`;
    const overlay = this.el<HTMLImageElement>("result-overlay");
    if (view.overlayPngB64) {
      overlay.src = `data:image/png;base64,${view.overlayPngB64}`;
      overlay.alt = `model attention heatmap for ${view.topLabel}`;
    } else {
      overlay.removeAttribute("src");
    }
    this.applyOverlayOpacity();
  }

  private applyOverlayOpacity(): void {
    const slider = this.el<HTMLInputElement>("opacity");
    const overlay = this.el<HTMLImageElement>("result-overlay");
    const { showOverlay, overlayOpacity } = overlayVisibility(Number(slider.value) / 100);
    const hasOverlay = Boolean(this.lastView?.overlayPngB64);
    overlay.hidden = !showOverlay || !hasOverlay;
    overlay.style.opacity = String(overlayOpacity);
    this.el("opacity-value").textContent = `${slider.value}%`;
  }

  private setStatus(message: string, isError = false): void {
    const status = this.el("status");
    status.textContent = message;
    status.className = isError ? "status error" : "status";
  }
}
