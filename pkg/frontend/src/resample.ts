// Bilinear upsampling from grid cells to display pixels, cell centers
// aligned. Interpolation never leaves the hull of its four corners, so
// resampled rasters stay inside [min, max] of the source.

export const bilinearResample = (
  values: Float32Array,
  width: number,
  height: number,
  outWidth: number,
  outHeight: number,
): Float32Array => {
  if (width < 1 || height < 1 || outWidth < 1 || outHeight < 1) {
    throw new Error("resample dimensions must be >= 1");
  }
  if (values.length !== width * height) {
    throw new Error(`expected ${width * height} values, got ${values.length}`);
  }
  if (outWidth === width && outHeight === height) {
    return values.slice();
  }
  const out = new Float32Array(outWidth * outHeight);
  const sx = width / outWidth;
  const sy = height / outHeight;
  for (let py = 0; py < outHeight; py++) {
    // Source coordinate of this pixel center, clamped to the center span.
    let gy = (py + 0.5) * sy - 0.5;
    if (gy < 0) gy = 0;
    if (gy > height - 1) gy = height - 1;
    const y0 = Math.floor(gy);
    const y1 = Math.min(y0 + 1, height - 1);
    const fy = gy - y0;
    for (let px = 0; px < outWidth; px++) {
      let gx = (px + 0.5) * sx - 0.5;
      if (gx < 0) gx = 0;
      if (gx > width - 1) gx = width - 1;
      const x0 = Math.floor(gx);
      const x1 = Math.min(x0 + 1, width - 1);
      const fx = gx - x0;
      const v00 = values[y0 * width + x0] as number;
      const v01 = values[y0 * width + x1] as number;
      const v10 = values[y1 * width + x0] as number;
      const v11 = values[y1 * width + x1] as number;
      // A single no-data corner poisons the pixel; no-data must not bleed
      // plausible-looking values into the map.
      out[py * outWidth + px] =
        (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
    }
  }
  return out;
};
