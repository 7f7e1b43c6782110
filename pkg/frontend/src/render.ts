import { classify, classOfValue, type Classification } from "./classify.js";
import { NO_DATA_COLOR, palette } from "./palettes.js";
import { bilinearResample } from "./resample.js";
import type { BBox, StyleState } from "./types.js";
import type { TabGrid } from "./atlas.js";

const hexToRgb = (hex: string): [number, number, number] => {
  const n = parseInt(hex.slice(1), 16);
  return [(n >> 16) & 0xff, (n >> 8) & 0xff, n & 0xff];
};

export interface RenderResult {
  classification: Classification;
  colors: string[];
}

// Paint one tab's grid: values are resampled to the canvas, classified
// against breaks computed on the source grid, and colored by the tab's
// palette. Returns the classification so the legend can mirror it.
export const renderGrid = (
  canvas: HTMLCanvasElement,
  tab: TabGrid,
  style: StyleState,
): RenderResult => {
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas has no 2d context");
  const { width, height } = tab.source.spec;
  const classification = classify(tab.values, style);
  const colors = palette(style.palette, style.classes);
  const rgb = colors.map(hexToRgb);
  const noData = hexToRgb(NO_DATA_COLOR);

  const pixels = bilinearResample(tab.values, width, height, canvas.width, canvas.height);
  const image = ctx.createImageData(canvas.width, canvas.height);
  for (let i = 0; i < pixels.length; i++) {
    const cls = classOfValue(pixels[i] as number, classification.breaks);
    const [r, g, b] = cls < 0 ? noData : (rgb[Math.min(cls, rgb.length - 1)] as [number, number, number]);
    image.data[i * 4] = r;
    image.data[i * 4 + 1] = g;
    image.data[i * 4 + 2] = b;
    image.data[i * 4 + 3] = 255;
  }
  ctx.putImageData(image, 0, 0);
  return { classification, colors };
};

const project = (
  lon: number,
  lat: number,
  viewport: BBox,
  w: number,
  h: number,
): [number, number] => [
  ((lon - viewport.west) / (viewport.east - viewport.west)) * w,
  ((viewport.north - lat) / (viewport.north - viewport.south)) * h,
];

type Ring = Array<[number, number]>;

const ringsOf = (geometry: { type: string; coordinates: unknown }): Ring[] => {
  switch (geometry.type) {
    case "Polygon":
      return geometry.coordinates as Ring[];
    case "MultiPolygon":
      return (geometry.coordinates as Ring[][]).flat();
    case "LineString":
      return [geometry.coordinates as Ring];
    case "MultiLineString":
      return geometry.coordinates as Ring[];
    default:
      return [];
  }
};

// Administrative mesh above the raster; plain equirectangular mapping
// into the viewport.
export const drawBoundaries = (
  canvas: HTMLCanvasElement,
  geojson: { features?: Array<{ geometry?: { type: string; coordinates: unknown } }> },
  viewport: BBox,
): void => {
  const ctx = canvas.getContext("2d");
  if (!ctx || !geojson.features) return;
  ctx.strokeStyle = "#333333";
  ctx.lineWidth = 1;
  for (const feature of geojson.features) {
    if (!feature.geometry) continue;
    for (const ring of ringsOf(feature.geometry)) {
      ctx.beginPath();
      ring.forEach(([lon, lat], i) => {
        const [x, y] = project(lon, lat, viewport, canvas.width, canvas.height);
        if (i === 0) ctx.moveTo(x, y);
        else ctx.lineTo(x, y);
      });
      ctx.stroke();
    }
  }
};

// Tab 1: the study area alone. Frame plus a light graticule.
export const drawFrame = (canvas: HTMLCanvasElement, viewport: BBox): void => {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.fillStyle = "#fbfbf8";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#c5c9d0";
  ctx.lineWidth = 1;
  const lonStep = niceStep(viewport.east - viewport.west);
  const latStep = niceStep(viewport.north - viewport.south);
  for (let lon = Math.ceil(viewport.west / lonStep) * lonStep; lon < viewport.east; lon += lonStep) {
    const [x] = project(lon, viewport.north, viewport, canvas.width, canvas.height);
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, canvas.height);
    ctx.stroke();
  }
  for (let lat = Math.ceil(viewport.south / latStep) * latStep; lat < viewport.north; lat += latStep) {
    const [, y] = project(viewport.west, lat, viewport, canvas.width, canvas.height);
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(canvas.width, y);
    ctx.stroke();
  }
  ctx.strokeStyle = "#55585e";
  ctx.strokeRect(0.5, 0.5, canvas.width - 1, canvas.height - 1);
};

const niceStep = (span: number): number => {
  const raw = span / 6;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) return m * mag;
  }
  return 10 * mag;
};
