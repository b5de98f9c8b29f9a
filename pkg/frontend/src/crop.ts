// Crop-rectangle geometry, in source-pixel coordinates of the loaded photo.

import type { CropRect } from "./api.js";

export const MIN_CROP = 32;

export function fullImageRect(width: number, height: number): CropRect {
  return { x: 0, y: 0, width, height };
}

/** Turn a drag gesture (two corners, any order, possibly outside the image)
 * into a valid crop: clamped to bounds, at least MIN_CROP on each side
 * (degenerate drags snap up, limited by the image itself). */
export function rectFromDrag(
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  imageWidth: number,
  imageHeight: number,
): CropRect {
  const clampX = (v: number) => Math.min(Math.max(v, 0), imageWidth);
  const clampY = (v: number) => Math.min(Math.max(v, 0), imageHeight);
  let left = Math.round(clampX(Math.min(x0, x1)));
  let top = Math.round(clampY(Math.min(y0, y1)));
  let right = Math.round(clampX(Math.max(x0, x1)));
  let bottom = Math.round(clampY(Math.max(y0, y1)));

  const minW = Math.min(MIN_CROP, imageWidth);
  const minH = Math.min(MIN_CROP, imageHeight);
  if (right - left < minW) {
    right = Math.min(left + minW, imageWidth);
    left = right - minW;
  }
  if (bottom - top < minH) {
    bottom = Math.min(top + minH, imageHeight);
    top = bottom - minH;
  }
  return { x: left, y: top, width: right - left, height: bottom - top };
}

export function isFullImage(rect: CropRect, width: number, height: number): boolean {
  return rect.x === 0 && rect.y === 0 && rect.width === width && rect.height === height;
}
