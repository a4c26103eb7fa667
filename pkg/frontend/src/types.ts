/** Payload shapes of the review service API (snake_case mirrors the wire). */

export type Predicate = "hypernym" | "hyponym" | "instance" | "concept";

export type EntryStatus = "pending" | "accepted" | "rejected" | "auto-merged";

export interface QueueEntry {
  id: string;
  subject: string;
  predicate: Predicate;
  object: string;
  confidence: number;
  status: EntryStatus;
  source: string;
  sentence_ids: string[];
  sentences: string[];
  decided_by: string | null;
  decided_at: string | null;
  decision: string | null;
}

export interface QueuePage {
  total: number;
  offset: number;
  limit: number;
  entries: QueueEntry[];
}

export interface OntologyStats {
  concepts: number;
  relations: number;
  version: number;
}

export interface ChangelogRecord {
  version: number;
  op: string;
  subject: string;
  predicate: string;
  object: string;
}

export type DecisionAction = "accept" | "reject" | "accept-with-predicate";

export interface QueueFilters {
  predicate?: Predicate;
  source?: string;
  minConfidence?: number;
  maxConfidence?: number;
}

export interface EnrichRunStatus {
  id: string;
  source: string;
  mode: string;
  status: "pending" | "running" | "done" | "failed";
  candidates: number | null;
  error?: string;
}
