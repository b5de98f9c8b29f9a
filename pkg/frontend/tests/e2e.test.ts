// End-to-end consistency against a live service. Gated on SERVICE_URL, e.g.
//   lesionscreen serve --models default=<artifact dir> --port 8123 &
//   SERVICE_URL=http://127.0.0.1:8123 vitest run tests/e2e.test.ts

import { describe, expect, it } from "vitest";

import { ApiClient, buildPredictBody } from "../src/api.js";
import { buildResultView } from "../src/view.js";

const SERVICE_URL = process.env.SERVICE_URL;

// 1x1 red-pixel PNG; the service rescales it, which is enough to exercise
// the full request/response path.
const TINY_PNG_B64 =
  "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mP8z8BQDwAE" +
  "hQGAhKmMIQAAAABJRU5ErkJggg==";

function fixtureImage(): string {
  return TINY_PNG_B64;
}

describe.skipIf(!SERVICE_URL)("live service consistency", () => {
  it("displayed numbers equal a direct API call with the identical payload", async () => {
    const client = new ApiClient(SERVICE_URL!);
    const body = buildPredictBody(fixtureImage(), null, null, false);

    const viaClient = await client.predict(body);
    const view = buildResultView(viaClient);

    const direct = await fetch(`${SERVICE_URL}/api/v1/predict`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => r.json());

    expect(view.topLabel).toBe(direct.top_label);
    for (const bar of view.bars) {
      expect(bar.probability).toBe(direct.probabilities[bar.label]);
    }
  });

  it("crop rectangles round-trip through the request payload bit-exactly", async () => {
    // the server scales any crop >= its minimum; use the fixture's full frame
    const crop = { x: 0, y: 0, width: 1, height: 1 };
    const body = buildPredictBody(fixtureImage(), crop, null, false);
    expect(JSON.parse(JSON.stringify(body)).crop).toEqual(crop);
    const client = new ApiClient(SERVICE_URL!);
    const response = await client.predict(body);
    expect(Object.values(response.probabilities).reduce((a, b) => a + b, 0))
      .toBeCloseTo(1.0, 6);
    expect(response.disclaimer.length).toBeGreaterThan(0);
  });
});
