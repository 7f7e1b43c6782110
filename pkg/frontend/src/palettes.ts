// Small fixed ramps sampled to the requested class count. Tab 8 shows a
// signed difference, so it defaults to the diverging ramp.

const RAMPS: Record<string, string[]> = {
  heat: [
    "#fff5eb", "#fee6ce", "#fdd0a2", "#fdae6b",
    "#fd8d3c", "#f16913", "#d94801", "#a63603", "#7f2704",
  ],
  blues: [
    "#f7fbff", "#deebf7", "#c6dbef", "#9ecae1",
    "#6baed6", "#4292c6", "#2171b5", "#08519c", "#08306b",
  ],
  greens: [
    "#f7fcf5", "#e5f5e0", "#c7e9c0", "#a1d99b",
    "#74c476", "#41ab5d", "#238b45", "#006d2c", "#00441b",
  ],
  "red-blue": [
    "#b2182b", "#d6604d", "#f4a582", "#fddbc7",
    "#f7f7f7", "#d1e5f0", "#92c5de", "#4393c3", "#2166ac",
  ],
};

export const PALETTE_NAMES = Object.keys(RAMPS);

export const DIVERGING_DEFAULT = "red-blue";

export const NO_DATA_COLOR = "#d9d9d9";

export const palette = (name: string, count: number): string[] => {
  const ramp = RAMPS[name];
  if (!ramp) throw new Error(`unknown palette ${name}`);
  if (count < 1) throw new Error(`palette size must be >= 1, got ${count}`);
  if (count === 1) return [ramp[Math.floor(ramp.length / 2)] as string];
  const out: string[] = [];
  for (let i = 0; i < count; i++) {
    out.push(ramp[Math.round((i * (ramp.length - 1)) / (count - 1))] as string);
  }
  return out;
};
