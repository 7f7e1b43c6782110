import { gridStats } from "./derive.js";
import type { Progression, StyleState } from "./types.js";

export interface Classification {
  // classIndex[i] in [0, classes) for defined cells, -1 for no-data.
  classIndex: Int16Array;
  breaks: number[];
  // Progression actually applied (geometric can fall back to linear).
  effective: Progression;
  notice: string | null;
}

export const classify = (values: ArrayLike<number>, style: StyleState): Classification => {
  if (style.classes < 2) throw new Error(`class count must be >= 2, got ${style.classes}`);
  const { min, max, defined } = gridStats(values);
  if (defined === 0) throw new Error("cannot classify a grid with no defined cells");

  const k = style.classes;
  const index = new Int16Array(values.length).fill(-1);

  if (min === max) {
    // Constant field: one class carries everything.
    for (let i = 0; i < values.length; i++) {
      if (Number.isFinite(values[i] as number)) index[i] = 0;
    }
    return { classIndex: index, breaks: [min, max], effective: style.progression, notice: null };
  }

  if (style.progression === "quantile") {
    const sorted: number[] = [];
    for (let i = 0; i < values.length; i++) {
      const v = values[i] as number;
      if (Number.isFinite(v)) sorted.push(v);
    }
    sorted.sort((a, b) => a - b);
    const n = sorted.length;
    for (let i = 0; i < values.length; i++) {
      const v = values[i] as number;
      if (!Number.isFinite(v)) continue;
      // Rank of the first occurrence keeps ties in one class.
      const rank = lowerBound(sorted, v);
      index[i] = Math.min(k - 1, Math.floor((rank * k) / n));
    }
    const breaks = [sorted[0] as number];
    for (let c = 1; c < k; c++) breaks.push(sorted[Math.min(n - 1, Math.ceil((c * n) / k))] as number);
    breaks.push(sorted[n - 1] as number);
    return { classIndex: index, breaks, effective: "quantile", notice: null };
  }

  let effective: Progression = style.progression;
  let notice: string | null = null;
  if (effective === "geometric" && min <= 0) {
    effective = "linear";
    notice = "geometric progression needs positive values; using linear classes";
  }

  const breaks: number[] = [min];
  if (effective === "geometric") {
    const q = Math.pow(max / min, 1 / k);
    for (let c = 1; c < k; c++) breaks.push(min * Math.pow(q, c));
  } else {
    const w = (max - min) / k;
    for (let c = 1; c < k; c++) breaks.push(min + c * w);
  }
  breaks.push(max);

  for (let i = 0; i < values.length; i++) {
    const v = values[i] as number;
    if (!Number.isFinite(v)) continue;
    index[i] = binOf(v, breaks, k);
  }
  return { classIndex: index, breaks, effective, notice };
};

// Upper edges exclusive except the top bin, which owns the maximum.
const binOf = (v: number, breaks: number[], k: number): number => {
  for (let c = 0; c < k - 1; c++) {
    if (v < (breaks[c + 1] as number)) return c;
  }
  return k - 1;
};

// Class of one value against precomputed breaks (resampled pixels reuse
// the grid's classification).
export const classOfValue = (v: number, breaks: number[]): number => {
  if (!Number.isFinite(v)) return -1;
  return binOf(v, breaks, breaks.length - 1);
};

const lowerBound = (sorted: number[], v: number): number => {
  let lo = 0;
  let hi = sorted.length;
  while (lo < hi) {
    const mid = (lo + hi) >> 1;
    if ((sorted[mid] as number) < v) lo = mid + 1;
    else hi = mid;
  }
  return lo;
};
