import type { FetchFn } from "../src/api.js";
import type { BBox, GridSpec, ScaleRequest } from "../src/types.js";
import { ENCODING } from "../src/wire.js";

export const BBOX: BBox = { west: 4, south: 44, east: 6, north: 46 };

export const spec = (width = 4, height = 3, bbox: BBox = BBOX): GridSpec => ({
  bbox,
  width,
  height,
});

export const encodeValues = (values: Float32Array): string => {
  const bytes = new Uint8Array(values.length * 4);
  const view = new DataView(bytes.buffer);
  for (let i = 0; i < values.length; i++) view.setFloat32(i * 4, values[i] as number, true);
  return Buffer.from(bytes).toString("base64");
};

export const makePayload = (
  slot: string,
  gridSpec: GridSpec,
  values: Float32Array,
  meta: Record<string, unknown> = {},
  warnings: string[] = [],
) => ({
  spec: gridSpec,
  meta: { slot, ...meta },
  warnings,
  encoding: ENCODING,
  values: encodeValues(values),
});

export interface RecordedCall {
  url: string;
  init: RequestInit | undefined;
  body: ScaleRequest | null;
}

// fetch stub whose /api/grid responses are synthesized from the request
// itself: values derive from the portee, so distinct requests produce
// distinct grids, and num = den requests produce identical slot pairs.
export const gridServer = (
  shape: { width: number; height: number } = { width: 4, height: 3 },
): { fetchFn: FetchFn; calls: RecordedCall[] } => {
  const calls: RecordedCall[] = [];
  const fetchFn: FetchFn = async (url, init) => {
    const body = init?.body ? (JSON.parse(init.body as string) as ScaleRequest) : null;
    calls.push({ url, init, body });
    if (!url.includes("/api/grid") || !body) {
      return new Response(JSON.stringify({ detail: `no route for ${url}` }), { status: 404 });
    }
    const gridSpec = { bbox: body.grid.bbox, width: body.grid.width, height: body.grid.height };
    const n = gridSpec.width * gridSpec.height;
    const scale = body.kernel.portee_km;
    const numValues = new Float32Array(n);
    for (let i = 0; i < n; i++) numValues[i] = scale + i;
    const slotTag = "1"; // single-scale requests; the controller asks one portee at a time
    const payloads = [makePayload(`num${slotTag}`, gridSpec, numValues)];
    if (body.den !== null) {
      const denValues = new Float32Array(n);
      for (let i = 0; i < n; i++) {
        denValues[i] = body.den === body.num ? (numValues[i] as number) : 2 + i;
      }
      payloads.push(makePayload(`den${slotTag}`, gridSpec, denValues));
    }
    return new Response(JSON.stringify(payloads), {
      status: 200,
      headers: { "content-type": "application/json" },
    });
  };
  return { fetchFn, calls };
};

export const baseRequest = (porteeKm = 100): ScaleRequest => ({
  dataset: "demo",
  num: "pop",
  den: "area",
  kernel: { kind: "gaussian", portee_km: porteeKm, beta: null },
  grid: { bbox: BBOX, width: 4, height: 3 },
  epsilon: 0.001,
});
