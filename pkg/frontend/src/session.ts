// In-memory screening session: never persisted, gone when the tab closes.

import type { CropRect, PredictResponse } from "./api.js";

export interface ScreeningCheck {
  imageName: string;
  crop: CropRect;
  modelId: string;
  response: PredictResponse;
  at: Date;
}

export class ScreeningSession {
  private checks: ScreeningCheck[] = [];
  private pending = false;

  get inFlight(): boolean {
    return this.pending;
  }

  /** At most one prediction request at a time; returns false if busy. */
  begin(): boolean {
    if (this.pending) return false;
    this.pending = true;
    return true;
  }

  settle(check?: ScreeningCheck): void {
    this.pending = false;
    if (check) this.checks.push(check);
  }

  get history(): readonly ScreeningCheck[] {
    return this.checks;
  }
}
