// Typed client for the service REST API. All mutations go through these
// endpoints; the UI keeps no authoritative state of its own.

import type { TraceStepView } from "./model.js";

export interface MessageResponse {
  reply: string;
  image_url: string | null;
  trace: TraceStepView | null;
}

export interface SearchResult {
  garment_id: string;
  score: number;
  category: string | null;
  caption: string | null;
}

export interface SearchResponse {
  results: SearchResult[];
  tau: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let code = `HTTP${response.status}`;
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { error?: string; detail?: string };
    if (body.error) code = body.error;
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, code, detail);
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async createSession(): Promise<string> {
    const response = await this.fetchImpl(this.url("/v1/sessions"), { method: "POST" });
    const body = await parseOrThrow<{ session_id: string }>(response);
    return body.session_id;
  }

  async postMessage(
    sessionId: string,
    text: string,
    image?: Blob | null,
    seed?: number | null,
  ): Promise<MessageResponse> {
    const form = new FormData();
    form.set("text", text);
    if (seed !== undefined && seed !== null) {
      form.set("seed", String(seed));
    }
    if (image) {
      form.set("image", image, "person.png");
    }
    const response = await this.fetchImpl(this.url(`/v1/sessions/${sessionId}/messages`), {
      method: "POST",
      body: form,
    });
    return parseOrThrow<MessageResponse>(response);
  }

  async getTrace(sessionId: string): Promise<TraceStepView[]> {
    const response = await this.fetchImpl(this.url(`/v1/sessions/${sessionId}/trace`));
    const body = await parseOrThrow<{ steps: TraceStepView[] }>(response);
    return body.steps;
  }

  async searchCatalog(query: string, k: number): Promise<SearchResponse> {
    const params = new URLSearchParams({ q: query, k: String(k) });
    const response = await this.fetchImpl(this.url(`/v1/catalog/search?${params}`));
    return parseOrThrow<SearchResponse>(response);
  }

  async setTau(tau: number): Promise<number> {
    const response = await this.fetchImpl(this.url("/admin/tau"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ tau }),
    });
    const body = await parseOrThrow<{ tau: number }>(response);
    return body.tau;
  }

  async reloadCatalog(): Promise<{ catalog_version: number; records: number }> {
    const response = await this.fetchImpl(this.url("/admin/reload-catalog"), { method: "POST" });
    return parseOrThrow(response);
  }

  imageUrl(path: string | null): string | null {
    return path ? `${this.base}${path}` : null;
  }
}
