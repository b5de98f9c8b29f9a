// Typed client for the screening service. The UI never computes its own
// classification: every displayed number comes from a PredictResponse.

export interface CropRect {
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface ModelInfo {
  id: string;
  backbone: string;
  task: string;
  precision: string;
  class_names: string[];
  version: string;
}

export interface PredictResponse {
  probabilities: Record<string, number>;
  top_label: string;
  model: ModelInfo;
  latency_s: number;
  disclaimer: string;
  overlay_png_b64?: string;
}

export interface PredictRequestBody {
  image_b64: string;
  crop?: CropRect;
  model_id?: string;
  explain?: boolean;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    detail: string,
  ) {
    super(detail);
  }
}

const ERROR_MESSAGES: Record<string, string> = {
  undecodable_image: "That file does not look like an image. Try a JPEG or PNG photo.",
  invalid_base64: "The image upload was corrupted. Please try again.",
  crop_out_of_bounds: "The crop rectangle falls outside the photo. Adjust it and retry.",
  invalid_crop: "The crop rectangle is invalid. Adjust it and retry.",
  unknown_model: "The selected model is not available on the server.",
  payload_too_large: "The photo is too large (limit 10 MB). Use a smaller image.",
  missing_image: "No image was attached to the request.",
};

export function humanizeError(error: unknown): string {
  if (error instanceof ApiError) {
    return ERROR_MESSAGES[error.code] ?? `Request failed (${error.status}): ${error.message}`;
  }
  return "Could not reach the screening service. Check the API address and that the server is running.";
}

export function buildPredictBody(
  imageB64: string,
  crop: CropRect | null,
  modelId: string | null,
  explain: boolean,
): PredictRequestBody {
  const body: PredictRequestBody = { image_b64: imageB64, explain };
  if (crop !== null) body.crop = { x: crop.x, y: crop.y, width: crop.width, height: crop.height };
  if (modelId !== null) body.model_id = modelId;
  return body;
}

export class ApiClient {
  constructor(private readonly baseUrl: string, private readonly fetchFn: typeof fetch = fetch) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ApiError(0, "network", String(err));
    }
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(
        response.status,
        (payload as { error?: string }).error ?? "unknown",
        (payload as { detail?: string }).detail ?? response.statusText,
      );
    }
    return payload as T;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request("/api/v1/health");
  }

  models(): Promise<{ models: ModelInfo[]; default: string }> {
    return this.request("/api/v1/models");
  }

  predict(body: PredictRequestBody): Promise<PredictResponse> {
    return this.request("/api/v1/predict", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}

export async function blobToBase64(blob: Blob): Promise<string> {
  const bytes = new Uint8Array(await blob.arrayBuffer());
  let binary = "";
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
}
