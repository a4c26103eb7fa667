import { ApiClient, ApiError } from "./api.js";
import type {
  DecisionAction,
  OntologyStats,
  Predicate,
  QueueEntry,
  QueueFilters,
} from "./types.js";

export interface StoreState {
  entries: QueueEntry[];
  total: number;
  stats: OntologyStats | null;
  filters: QueueFilters;
  offset: number;
  limit: number;
  /** set while the service is unreachable; data on screen is kept */
  connectionError: string | null;
  notices: string[];
}

interface PendingAction {
  action: DecisionAction;
  key: string;
  predicate?: Predicate;
}

function newKey(): string {
  if (typeof crypto !== "undefined" && "randomUUID" in crypto) {
    return crypto.randomUUID();
  }
  return `key-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

/** Review-queue state: server data in, user decisions out.

    The store never fabricates or mutates triple text; entries render
    exactly as the service returned them, and the only client-side edit is
    the explicit predicate override carried on an accept-with-predicate
    decision. Each user action gets one idempotency key, so a retried
    request can never take effect twice. */
export class ReviewStore {
  state: StoreState = {
    entries: [],
    total: 0,
    stats: null,
    filters: {},
    offset: 0,
    limit: 50,
    connectionError: null,
    notices: [],
  };

  private actionKeys = new Map<string, PendingAction>();
  private listeners: Array<() => void> = [];
  private pollHandle: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly reviewer?: string,
  ) {}

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  async refresh(): Promise<void> {
    try {
      const [page, stats] = await Promise.all([
        this.api.listQueue(this.state.filters, "pending", this.state.offset, this.state.limit),
        this.api.stats(),
      ]);
      const known = new Set(page.entries.map((e) => e.id));
      for (const entry of this.state.entries) {
        if (!known.has(entry.id) && entry.status === "pending") {
          this.state.notices.push(
            `"${entry.subject}" was decided in another session`,
          );
        }
      }
      // default order: confidence descending (the service already sorts;
      // keep it stable on the client too)
      this.state.entries = [...page.entries].sort(
        (a, b) => b.confidence - a.confidence || a.id.localeCompare(b.id),
      );
      this.state.total = page.total;
      this.state.stats = stats;
      this.state.connectionError = null;
    } catch (error) {
      this.state.connectionError = describe(error);
    }
    this.emit();
  }

  setFilters(filters: QueueFilters): Promise<void> {
    this.state.filters = filters;
    this.state.offset = 0;
    return this.refresh();
  }

  /** Decide an entry. Retrying after a network failure reuses the same
      idempotency key; issuing a different action mints a new one. */
  async decide(
    entryId: string,
    action: DecisionAction,
    predicate?: Predicate,
  ): Promise<QueueEntry | null> {
    let pending = this.actionKeys.get(entryId);
    if (!pending || pending.action !== action || pending.predicate !== predicate) {
      pending = { action, key: newKey(), predicate };
      this.actionKeys.set(entryId, pending);
    }

    const index = this.state.entries.findIndex((e) => e.id === entryId);
    const backup = index >= 0 ? this.state.entries[index] : null;
    if (index >= 0) {
      this.state.entries.splice(index, 1); // optimistic removal
      this.emit();
    }

    try {
      const decided = await this.api.decide(
        entryId,
        action,
        pending.key,
        predicate,
        this.reviewer,
      );
      this.actionKeys.delete(entryId);
      this.state.stats = await this.api.stats();
      this.state.connectionError = null;
      this.emit();
      return decided;
    } catch (error) {
      if (error instanceof ApiError && error.isConflict) {
        // decided elsewhere: reconcile instead of restoring
        this.actionKeys.delete(entryId);
        this.state.notices.push(
          `entry ${entryId} was already decided (${error.detail})`,
        );
        await this.refresh();
        return null;
      }
      if (backup) {
        this.state.entries.splice(index, 0, backup); // roll the optimistic update back
      }
      this.state.connectionError = describe(error);
      this.emit();
      return null;
    }
  }

  /** Submit a page for enrichment and watch the run until it settles. */
  async submitEnrich(source: string, pollMs = 500, maxPolls = 600): Promise<void> {
    try {
      const { run_id } = await this.api.submitEnrich(source);
      for (let i = 0; i < maxPolls; i++) {
        const run = await this.api.runStatus(run_id);
        if (run.status === "done") {
          this.state.notices.push(
            `run ${run_id}: ${run.candidates ?? 0} candidate(s) from ${source}`,
          );
          break;
        }
        if (run.status === "failed") {
          this.state.notices.push(`run ${run_id} failed: ${run.error ?? "unknown"}`);
          break;
        }
        await new Promise((resolve) => setTimeout(resolve, pollMs));
      }
      await this.refresh();
    } catch (error) {
      this.state.connectionError = describe(error);
      this.emit();
    }
  }

  startPolling(intervalMs: number): void {
    this.stopPolling();
    this.pollHandle = setInterval(() => void this.refresh(), intervalMs);
  }

  stopPolling(): void {
    if (this.pollHandle !== null) {
      clearInterval(this.pollHandle);
      this.pollHandle = null;
    }
  }

  takeNotices(): string[] {
    const notices = this.state.notices;
    this.state.notices = [];
    return notices;
  }
}

function describe(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}

/** Split a provenance sentence into plain/highlighted segments so both
    terms render emphasized without injecting markup into the text. */
export function highlightTerms(
  sentence: string,
  terms: string[],
): Array<{ text: string; highlight: boolean }> {
  const wanted = terms.map((t) => t.toLowerCase()).filter((t) => t.length > 0);
  if (wanted.length === 0) return [{ text: sentence, highlight: false }];
  const lower = sentence.toLowerCase();
  const marks = new Array<boolean>(sentence.length).fill(false);
  for (const term of wanted) {
    let from = 0;
    while (true) {
      const at = lower.indexOf(term, from);
      if (at < 0) break;
      marks.fill(true, at, at + term.length);
      from = at + term.length;
    }
  }
  const segments: Array<{ text: string; highlight: boolean }> = [];
  let start = 0;
  for (let i = 1; i <= sentence.length; i++) {
    if (i === sentence.length || marks[i] !== marks[start]) {
      segments.push({ text: sentence.slice(start, i), highlight: marks[start] });
      start = i;
    }
  }
  return segments;
}
