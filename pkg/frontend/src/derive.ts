// Ratios and differences are client-side products of the cached potential
// grids; no round trip is ever needed to produce them.

export const RATIO_FLOOR = 1e-9;

// NaN marks cells whose denominator is too small to carry a meaningful
// ratio, same relative floor as the server's derived files.
export const ratioGrid = (num: Float32Array, den: Float32Array): Float32Array => {
  if (num.length !== den.length) {
    throw new Error(`grid sizes differ: ${num.length} vs ${den.length}`);
  }
  let maxDen = 0;
  for (let i = 0; i < den.length; i++) {
    const d = den[i] as number;
    if (Number.isFinite(d) && d > maxDen) maxDen = d;
  }
  const out = new Float32Array(num.length);
  const floor = RATIO_FLOOR * maxDen;
  for (let i = 0; i < num.length; i++) {
    const d = den[i] as number;
    out[i] = maxDen > 0 && d > floor ? (num[i] as number) / d : NaN;
  }
  return out;
};

export const diffGrid = (z2: Float32Array, z1: Float32Array): Float32Array => {
  if (z2.length !== z1.length) {
    throw new Error(`grid sizes differ: ${z2.length} vs ${z1.length}`);
  }
  const out = new Float32Array(z2.length);
  for (let i = 0; i < z2.length; i++) {
    out[i] = (z2[i] as number) - (z1[i] as number);
  }
  return out;
};

export interface GridStats {
  min: number;
  max: number;
  defined: number;
}

export const gridStats = (values: ArrayLike<number>): GridStats => {
  let min = Infinity;
  let max = -Infinity;
  let defined = 0;
  for (let i = 0; i < values.length; i++) {
    const v = values[i] as number;
    if (!Number.isFinite(v)) continue;
    defined++;
    if (v < min) min = v;
    if (v > max) max = v;
  }
  return { min, max, defined };
};
