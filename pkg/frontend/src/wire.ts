import type { DecodedGrid, GridSpec } from "./types.js";

export const ENCODING = "f32le-rowmajor-base64";

const base64ToBytes = (b64: string): Uint8Array => {
  if (typeof atob === "function") {
    const bin = atob(b64);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
    return out;
  }
  return new Uint8Array(Buffer.from(b64, "base64"));
};

// Little-endian regardless of platform; DataView makes that explicit.
export const decodeValues = (b64: string, count: number): Float32Array => {
  const bytes = base64ToBytes(b64);
  if (bytes.length !== count * 4) {
    throw new Error(`payload holds ${bytes.length} bytes, expected ${count * 4}`);
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.length);
  const out = new Float32Array(count);
  for (let i = 0; i < count; i++) out[i] = view.getFloat32(i * 4, true);
  return out;
};

export const decodePayload = (payload: {
  spec: GridSpec;
  meta: Record<string, unknown>;
  warnings: string[];
  encoding: string;
  values: string;
}): DecodedGrid => {
  if (payload.encoding !== ENCODING) {
    throw new Error(`unsupported encoding ${payload.encoding}`);
  }
  const { width, height } = payload.spec;
  return {
    spec: payload.spec,
    meta: payload.meta,
    warnings: payload.warnings,
    values: decodeValues(payload.values, width * height),
  };
};

// Sorted keys, compact separators: equal requests stringify equal, which
// is all the cache key needs.
export const canonicalJson = (value: unknown): string => {
  if (value === null || typeof value !== "object") return JSON.stringify(value);
  if (Array.isArray(value)) return `[${value.map(canonicalJson).join(",")}]`;
  const obj = value as Record<string, unknown>;
  const keys = Object.keys(obj).sort();
  return `{${keys.map((k) => `${JSON.stringify(k)}:${canonicalJson(obj[k])}`).join(",")}}`;
};

// Shortest decimal that survives a round trip through float32, so the
// report states exactly the numbers the payload carries. Re-stringifying
// the parsed value normalizes "1e+2" style back to plain digits.
export const formatValue = (v: number): string => {
  if (Number.isNaN(v)) return "nan";
  if (v === Infinity) return "inf";
  if (v === -Infinity) return "-inf";
  for (let p = 1; p <= 17; p++) {
    const s = v.toPrecision(p);
    if (Math.fround(parseFloat(s)) === v) return String(parseFloat(s));
  }
  return v.toString();
};

export interface Cell {
  lon: number;
  lat: number;
  value: number;
}

// Row 0 sits at the northern edge; centers at half-cell offsets.
export function* gridCells(grid: DecodedGrid): Generator<Cell> {
  const { bbox, width, height } = grid.spec;
  const dlon = (bbox.east - bbox.west) / width;
  const dlat = (bbox.north - bbox.south) / height;
  for (let i = 0; i < height; i++) {
    const lat = bbox.north - (i + 0.5) * dlat;
    for (let j = 0; j < width; j++) {
      const lon = bbox.west + (j + 0.5) * dlon;
      yield { lon, lat, value: grid.values[i * width + j] as number };
    }
  }
}
