import type { DecodedGrid, ScaleRequest } from "./types.js";
import { decodePayload } from "./wire.js";

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

export interface FieldError {
  field: string;
  message: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly fields: FieldError[] = [],
  ) {
    super(message);
  }
}

export interface KernelInfo {
  name: string;
  params: Record<string, unknown>;
}

export interface DatasetInfo {
  id: string;
  name: string;
  n_points: number;
  variables: string[];
}

// Thin typed wrapper over the grid service. The fetch function is
// injectable so tests can count and stub network traffic.
export class ApiClient {
  fetchCount = 0;

  constructor(
    private readonly baseUrl: string,
    private token: string,
    private readonly fetchFn: FetchFn = (url, init) => fetch(url, init),
  ) {}

  setToken(token: string): void {
    this.token = token;
  }

  async kernels(): Promise<KernelInfo[]> {
    return (await this.getJson("/api/kernels")) as KernelInfo[];
  }

  async datasets(): Promise<DatasetInfo[]> {
    return (await this.getJson("/api/datasets")) as DatasetInfo[];
  }

  async stocks(datasetId: string): Promise<string[]> {
    return (await this.getJson(`/api/datasets/${encodeURIComponent(datasetId)}/stocks`)) as string[];
  }

  async grids(req: ScaleRequest): Promise<DecodedGrid[]> {
    const payloads = (await this.send("POST", "/api/grid", req)) as Array<
      Parameters<typeof decodePayload>[0]
    >;
    return payloads.map(decodePayload);
  }

  async report(req: ScaleRequest, format: "text" | "html"): Promise<string> {
    this.fetchCount++;
    const res = await this.fetchFn(`${this.baseUrl}/api/report?format=${format}`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(req),
    });
    if (!res.ok) throw await this.toError(res);
    return res.text();
  }

  private async getJson(path: string): Promise<unknown> {
    return this.send("GET", path);
  }

  private async send(method: string, path: string, body?: unknown): Promise<unknown> {
    this.fetchCount++;
    const res = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: this.headers(body !== undefined),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) throw await this.toError(res);
    return res.json();
  }

  private headers(withBody: boolean): Record<string, string> {
    const h: Record<string, string> = { Authorization: `Bearer ${this.token}` };
    if (withBody) h["Content-Type"] = "application/json";
    return h;
  }

  private async toError(res: Response): Promise<ApiError> {
    let detail = `request failed with status ${res.status}`;
    let fields: FieldError[] = [];
    try {
      const body = (await res.json()) as { detail?: string; errors?: FieldError[] };
      if (typeof body.detail === "string") detail = body.detail;
      if (Array.isArray(body.errors)) fields = body.errors;
    } catch {
      // Non-JSON error body; keep the status message.
    }
    return new ApiError(res.status, detail, fields);
  }
}
