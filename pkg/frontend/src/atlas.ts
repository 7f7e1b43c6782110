import { diffGrid, ratioGrid } from "./derive.js";
import type { AnalysisState, DecodedGrid, ScaleGrids, ScaleRequest, TabId } from "./types.js";
import { canonicalJson } from "./wire.js";

// Derived grids are memoized on their input arrays: reassembling the
// atlas after a change to one scale must leave the other scale's tabs
// untouched, the same arrays, not equal copies.
const derivedMemo = new WeakMap<Float32Array, WeakMap<Float32Array, Float32Array>>();

const memoized = (
  a: Float32Array,
  b: Float32Array,
  compute: (a: Float32Array, b: Float32Array) => Float32Array,
): Float32Array => {
  let inner = derivedMemo.get(a);
  if (!inner) {
    inner = new WeakMap();
    derivedMemo.set(a, inner);
  }
  let out = inner.get(b);
  if (!out) {
    out = compute(a, b);
    inner.set(b, out);
  }
  return out;
};

// Which tabs draw from which portee. Tab 1 is boundaries only, tab 8
// needs both scales.
export const SCALE1_TABS: readonly TabId[] = [2, 3, 4];
export const SCALE2_TABS: readonly TabId[] = [5, 6, 7];

export const scaleRequest = (state: AnalysisState, scale: 1 | 2): ScaleRequest | null => {
  const portee = scale === 1 ? state.portee1Km : state.portee2Km;
  if (portee === null) return null;
  return {
    dataset: state.dataset,
    num: state.num,
    den: state.den,
    kernel: {
      kind: state.kernelKind,
      portee_km: portee,
      beta: state.kernelKind === "pareto" ? state.beta : null,
    },
    grid: {
      bbox: { ...state.viewport },
      width: state.width,
      height: state.height,
    },
    epsilon: state.epsilon,
  };
};

// The cache key is the whole canonical request: any compute-relevant
// difference yields a different key, style never enters it.
export const cacheKey = (req: ScaleRequest): string => canonicalJson(req);

export interface TabGrid {
  values: Float32Array;
  // Grid the values came from (for georeference); the difference tab
  // borrows the scale-1 numerator's spec.
  source: DecodedGrid;
}

// Tabs 2-4: potential of num, den, and their ratio at portee 1; tabs
// 5-7 the same at portee 2; tab 8 the cellwise Z2 - Z1. All products
// are derived here from the fetched potential grids, never fetched.
export const assembleTabs = (
  scale1: ScaleGrids,
  scale2: ScaleGrids | null,
): Map<TabId, TabGrid> => {
  const tabs = new Map<TabId, TabGrid>();
  tabs.set(2, { values: scale1.num.values, source: scale1.num });
  if (scale1.den) {
    tabs.set(3, { values: scale1.den.values, source: scale1.den });
    tabs.set(4, {
      values: memoized(scale1.num.values, scale1.den.values, ratioGrid),
      source: scale1.num,
    });
  }
  if (scale2) {
    tabs.set(5, { values: scale2.num.values, source: scale2.num });
    if (scale2.den) {
      tabs.set(6, { values: scale2.den.values, source: scale2.den });
      tabs.set(7, {
        values: memoized(scale2.num.values, scale2.den.values, ratioGrid),
        source: scale2.num,
      });
    }
    const z1 = tabs.get(4);
    const z2 = tabs.get(7);
    if (z1 && z2) {
      tabs.set(8, { values: memoized(z2.values, z1.values, diffGrid), source: scale1.num });
    }
  }
  return tabs;
};

// Payloads arrive in slot order (num then den per scale); regroup them.
export const groupSlots = (grids: DecodedGrid[]): ScaleGrids => {
  let num: DecodedGrid | null = null;
  let den: DecodedGrid | null = null;
  for (const g of grids) {
    const slot = g.meta["slot"];
    if (slot === "num1" || slot === "num2") num = g;
    else if (slot === "den1" || slot === "den2") den = g;
  }
  if (!num) throw new Error("response carries no numerator grid");
  return { num, den };
};
