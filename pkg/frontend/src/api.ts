/**
 * Typed client for the mapping service /v1 HTTP+JSON API.
 *
 * The UI never computes rankings itself: every suggestion shown to the
 * reviewer comes from /v1/suggest through this client, so the service stays
 * the single source of truth.
 */

import { z } from "zod";

export type Mode = "sparse" | "dense" | "hybrid";
export type ChosenRank = number | "manual";

const suggestionSchema = z.object({
  masterlist_id: z.string(),
  text: z.string(),
  score: z.number(),
  rank: z.number().int().min(1),
});

const suggestResponseSchema = z.object({
  mode: z.string(),
  snapshot_version: z.number().int(),
  suggestions: z.array(suggestionSchema),
});

const decisionSchema = z.object({
  masterlist_id: z.string(),
  chosen_rank: z.union([z.number().int(), z.literal("manual")]),
  reviewer: z.string(),
  timestamp: z.number(),
});

const reviewItemSchema = z.object({
  item_id: z.string(),
  clinic_text: z.string(),
  status: z.enum(["pending", "mapped", "skipped"]),
  decision: decisionSchema.nullable(),
});

const queueResponseSchema = z.object({ items: z.array(reviewItemSchema) });

const statsSchema = z.object({
  reviewed: z.number().int(),
  acc_at_1: z.number().nullable(),
  acc_at_2: z.number().nullable(),
  manual: z.number().nullable(),
  pending: z.number().int(),
  throughput_per_min: z.number().nullable(),
});

const masterlistEntrySchema = z.object({ id: z.string(), text: z.string() });

export type Suggestion = z.infer<typeof suggestionSchema>;
export type SuggestResponse = z.infer<typeof suggestResponseSchema>;
export type ReviewItem = z.infer<typeof reviewItemSchema>;
export type Stats = z.infer<typeof statsSchema>;
export type MasterlistEntry = z.infer<typeof masterlistEntrySchema>;

export interface MappingRequest {
  item_id: string;
  masterlist_id: string;
  chosen_rank: ChosenRank;
  reviewer: string;
}

/** HTTP-level failure carrying the service's {code, message} error body. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface ClientConfig {
  apiBase: string;
  token?: string;
  /** Injection point for tests; defaults to the global fetch. */
  fetchFn?: typeof fetch;
}

export class ApiClient {
  private readonly apiBase: string;
  private readonly token?: string;
  private readonly fetchFn: typeof fetch;

  constructor(config: ClientConfig) {
    this.apiBase = config.apiBase.replace(/\/+$/, "");
    this.token = config.token;
    this.fetchFn = config.fetchFn ?? fetch.bind(globalThis);
  }

  private async request(
    method: "GET" | "POST",
    path: string,
    query?: Record<string, string | number>,
    body?: unknown,
  ): Promise<unknown> {
    let url = `${this.apiBase}${path}`;
    if (query) {
      const qs = new URLSearchParams();
      for (const [key, value] of Object.entries(query)) qs.set(key, String(value));
      url += `?${qs.toString()}`;
    }
    const headers: Record<string, string> = { Accept: "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (body !== undefined) headers["Content-Type"] = "application/json";
    const response = await this.fetchFn(url, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload: unknown = await response.json().catch(() => ({}));
    if (!response.ok) {
      const err = z
        .object({ code: z.string(), message: z.string() })
        .safeParse(payload);
      throw new ApiError(
        response.status,
        err.success ? err.data.code : "error",
        err.success ? err.data.message : `HTTP ${response.status}`,
      );
    }
    return payload;
  }

  async suggest(q: string, k: number, mode: Mode): Promise<SuggestResponse> {
    const raw = await this.request("GET", "/v1/suggest", { q, k, mode });
    return suggestResponseSchema.parse(raw);
  }

  async queue(status: string, limit: number): Promise<ReviewItem[]> {
    const raw = await this.request("GET", "/v1/queue", { status, limit });
    return queueResponseSchema.parse(raw).items;
  }

  async enqueue(clinicTexts: string[]): Promise<ReviewItem[]> {
    const raw = await this.request("POST", "/v1/queue", undefined, {
      clinic_texts: clinicTexts,
    });
    return queueResponseSchema.parse(raw).items;
  }

  async acceptMapping(req: MappingRequest): Promise<ReviewItem> {
    const raw = await this.request("POST", "/v1/mappings", undefined, req);
    return reviewItemSchema.parse(raw);
  }

  async skip(itemId: string): Promise<ReviewItem> {
    const raw = await this.request(
      "POST",
      `/v1/items/${encodeURIComponent(itemId)}/skip`,
    );
    return reviewItemSchema.parse(raw);
  }

  async masterlistEntry(id: string): Promise<MasterlistEntry> {
    const raw = await this.request(
      "GET",
      `/v1/masterlist/${encodeURIComponent(id)}`,
    );
    return masterlistEntrySchema.parse(raw);
  }

  async stats(): Promise<Stats> {
    const raw = await this.request("GET", "/v1/stats");
    return statsSchema.parse(raw);
  }

  async rebuildIndex(): Promise<number> {
    const raw = await this.request("POST", "/v1/index/rebuild");
    return z.object({ snapshot_version: z.number().int() }).parse(raw)
      .snapshot_version;
  }
}

/** True for transport failures (server unreachable), false for HTTP errors. */
export function isNetworkError(err: unknown): boolean {
  return !(err instanceof ApiError) && err instanceof Error;
}
