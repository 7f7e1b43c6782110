import { ApiClient, ApiError } from "./api.js";
import { assembleTabs, cacheKey, groupSlots, scaleRequest, type TabGrid } from "./atlas.js";
import { LruCache } from "./cache.js";
import type { AnalysisState, ScaleGrids, StyleState, TabId } from "./types.js";
import { DEFAULT_STYLE } from "./types.js";

const CACHE_CAPACITY = 16;

// Drives the eight-tab atlas: state changes fetch only the scale groups
// whose canonical request is not already cached, style changes never
// fetch at all, and responses superseded by a newer state are dropped.
export class AtlasController {
  private state: AnalysisState | null = null;
  private readonly cache = new LruCache<ScaleGrids>(CACHE_CAPACITY);
  private readonly styles = new Map<TabId, StyleState>();
  private generation = 0;
  tabs = new Map<TabId, TabGrid>();
  repaintCount = 0;
  lastError: ApiError | null = null;

  constructor(private readonly client: ApiClient) {}

  get fetchCount(): number {
    return this.client.fetchCount;
  }

  getState(): AnalysisState | null {
    return this.state;
  }

  styleOf(tab: TabId): StyleState {
    return this.styles.get(tab) ?? DEFAULT_STYLE;
  }

  // Restyling redraws from the cached grids; by contract it performs no
  // network traffic and no grid recomputation.
  setStyle(tab: TabId, style: Partial<StyleState>): void {
    this.styles.set(tab, { ...this.styleOf(tab), ...style });
    this.repaintCount++;
  }

  async setState(next: AnalysisState): Promise<void> {
    this.state = next;
    this.lastError = null;
    const gen = ++this.generation;

    const req1 = scaleRequest(next, 1);
    if (!req1) throw new Error("portee1Km is required");
    const req2 = scaleRequest(next, 2);

    const pending: Promise<void>[] = [];
    for (const req of [req1, req2]) {
      if (!req) continue;
      const key = cacheKey(req);
      if (this.cache.has(key)) continue;
      pending.push(
        this.client.grids(req).then((grids) => {
          // A stale result is still a valid compute for its key; keep it
          // for later hits even when it no longer drives the display.
          this.cache.set(key, groupSlots(grids));
        }),
      );
    }

    try {
      await Promise.all(pending);
    } catch (err) {
      if (gen === this.generation) {
        this.lastError = err instanceof ApiError ? err : new ApiError(0, String(err));
      }
      return;
    }

    if (gen !== this.generation) return;

    const scale1 = this.cache.get(cacheKey(req1));
    if (!scale1) return;
    const scale2 = req2 ? (this.cache.get(cacheKey(req2)) ?? null) : null;
    this.tabs = assembleTabs(scale1, scale2);
    this.repaintCount++;
  }

  // Nyquist flag of the grid behind a tab, for the slider warning.
  nyquistWarning(tab: TabId): boolean {
    const grid = this.tabs.get(tab);
    return grid ? grid.source.meta["nyquist_warning"] === true : false;
  }
}
