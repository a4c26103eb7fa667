import type {
  ChangelogRecord,
  DecisionAction,
  EnrichRunStatus,
  OntologyStats,
  Predicate,
  QueueEntry,
  QueueFilters,
  QueuePage,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the /api/v1 endpoints. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
    private readonly token?: string,
  ) {}

  private headers(json: boolean): Record<string, string> {
    const headers: Record<string, string> = {};
    if (json) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/v1${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  listQueue(
    filters: QueueFilters = {},
    status = "pending",
    offset = 0,
    limit = 50,
  ): Promise<QueuePage> {
    const params = new URLSearchParams({
      status,
      offset: String(offset),
      limit: String(limit),
    });
    if (filters.predicate) params.set("predicate", filters.predicate);
    if (filters.source) params.set("source", filters.source);
    if (filters.minConfidence !== undefined)
      params.set("min_confidence", String(filters.minConfidence));
    if (filters.maxConfidence !== undefined)
      params.set("max_confidence", String(filters.maxConfidence));
    return this.request<QueuePage>(`/queue?${params.toString()}`, {
      headers: this.headers(false),
    });
  }

  decide(
    entryId: string,
    action: DecisionAction,
    idempotencyKey: string,
    predicate?: Predicate,
    reviewer?: string,
  ): Promise<QueueEntry> {
    return this.request<QueueEntry>(`/queue/${entryId}/decision`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({
        action,
        predicate: predicate ?? null,
        reviewer: reviewer ?? null,
        idempotency_key: idempotencyKey,
      }),
    });
  }

  stats(): Promise<OntologyStats> {
    return this.request<OntologyStats>("/ontology/stats", {
      headers: this.headers(false),
    });
  }

  changelog(since: number): Promise<{ records: ChangelogRecord[]; version: number }> {
    return this.request(`/ontology/changelog?since=${since}`, {
      headers: this.headers(false),
    });
  }

  submitEnrich(source: string, mode = "review"): Promise<{ run_id: string }> {
    return this.request("/enrich", {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ source, mode }),
    });
  }

  runStatus(runId: string): Promise<EnrichRunStatus> {
    return this.request(`/enrich/runs/${runId}`, { headers: this.headers(false) });
  }
}
