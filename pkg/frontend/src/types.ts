export type KernelKind = "disk" | "damped-disk" | "gaussian" | "pareto";

export type Progression = "linear" | "geometric" | "quantile";

export interface BBox {
  west: number;
  south: number;
  east: number;
  north: number;
}

export interface GridSpec {
  bbox: BBox;
  width: number;
  height: number;
}

// Tab 1 is the bare study area, 2-4 the first range, 5-7 the second,
// 8 the cross-scale difference.
export type TabId = 1 | 2 | 3 | 4 | 5 | 6 | 7 | 8;

export const ALL_TABS: readonly TabId[] = [1, 2, 3, 4, 5, 6, 7, 8];

export interface AnalysisState {
  dataset: string;
  num: string;
  den: string | null;
  kernelKind: KernelKind;
  beta: number | null;
  portee1Km: number;
  portee2Km: number | null;
  width: number;
  height: number;
  viewport: BBox;
  epsilon: number | null;
  activeTab: TabId;
}

// Everything the style panel controls; none of it may cause a fetch.
export interface StyleState {
  palette: string;
  progression: Progression;
  classes: number;
}

export const DEFAULT_STYLE: StyleState = {
  palette: "heat",
  progression: "linear",
  classes: 6,
};

// One grid as the server describes it, values already decoded.
export interface DecodedGrid {
  spec: GridSpec;
  meta: Record<string, unknown>;
  warnings: string[];
  values: Float32Array;
}

// The body POSTed to /api/grid, single-scale form: the client asks for
// one portee at a time so each scale caches independently.
export interface ScaleRequest {
  dataset: string;
  num: string;
  den: string | null;
  kernel: { kind: KernelKind; portee_km: number; beta: number | null };
  grid: { bbox: BBox; width: number; height: number };
  epsilon: number | null;
}

export interface ScaleGrids {
  num: DecodedGrid;
  den: DecodedGrid | null;
}
