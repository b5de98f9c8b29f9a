// Pure view-model construction: everything the result panel displays comes
// from here, straight off the PredictResponse.

import type { PredictResponse } from "./api.js";

export interface ProbabilityBar {
  label: string;
  probability: number;
  percent: number;      // integer, all bars sum to exactly 100
  highlighted: boolean; // the top label
}

export interface ResultView {
  bars: ProbabilityBar[];
  topLabel: string;
  modelVersion: string;
  modelId: string;
  precision: string;
  latencyMs: number;
  disclaimer: string;
  overlayPngB64: string | null;
}

/** Integer percentages via largest-remainder rounding so they total 100. */
export function roundedPercentages(probabilities: number[]): number[] {
  const scaled = probabilities.map((p) => p * 100);
  const floors = scaled.map(Math.floor);
  let leftover = 100 - floors.reduce((a, b) => a + b, 0);
  const order = scaled
    .map((value, index) => ({ remainder: value - Math.floor(value), index }))
    .sort((a, b) => b.remainder - a.remainder || a.index - b.index);
  const result = [...floors];
  for (const { index } of order) {
    if (leftover <= 0) break;
    result[index] += 1;
    leftover -= 1;
  }
  return result;
}

export function buildResultView(response: PredictResponse): ResultView {
  const entries = Object.entries(response.probabilities).sort(
    (a, b) => b[1] - a[1] || a[0].localeCompare(b[0]),
  );
  const percents = roundedPercentages(entries.map(([, p]) => p));
  const bars = entries.map(([label, probability], i) => ({
    label,
    probability,
    percent: percents[i],
    highlighted: label === response.top_label,
  }));
  return {
    bars,
    topLabel: response.top_label,
    modelVersion: response.model.version,
    modelId: response.model.id,
    precision: response.model.precision,
    latencyMs: response.latency_s * 1000,
    disclaimer: response.disclaimer,
    overlayPngB64: response.overlay_png_b64 ?? null,
  };
}

/** Which bitmap the photo panel shows for a given overlay opacity: opacity 0
 * is exactly the untouched photo (the overlay image is not even stacked). */
export function overlayVisibility(opacity: number): { showOverlay: boolean; overlayOpacity: number } {
  const clamped = Math.min(Math.max(opacity, 0), 1);
  return { showOverlay: clamped > 0, overlayOpacity: clamped };
}
