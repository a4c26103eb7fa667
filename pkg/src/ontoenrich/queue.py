"""Durable review queue for candidate triples.

Pending entries and decisions live in two append-only JSON-line files, so
a killed process loses nothing: reopening the store replays both logs.
Decided entries are immutable; a retried decision with the same
idempotency key returns the recorded outcome instead of conflicting.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Optional

from .enrich import CandidateTriple, Provenance
from .errors import DecisionConflictError
from .labels import LabelKind, label_token, parse_label

logger = logging.getLogger(__name__)

QUEUE_FILE = "queue.jsonl"
DECISIONS_FILE = "decisions.jsonl"

ACTIONS = ("accept", "reject", "accept-with-predicate")


def triple_id(triple: CandidateTriple) -> str:
    key = f"{triple.subject}|{label_token(triple.predicate)}|{triple.object}|{triple.provenance.source}"
    return hashlib.sha1(key.encode("utf-8")).hexdigest()[:16]


@dataclass
class ReviewQueueEntry:
    id: str
    triple: CandidateTriple
    decided_by: Optional[str] = None
    decided_at: Optional[str] = None
    decision: Optional[str] = None
    idempotency_key: Optional[str] = None

    @property
    def status(self) -> str:
        return self.triple.status

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "subject": self.triple.subject,
            "predicate": label_token(self.triple.predicate),
            "object": self.triple.object,
            "confidence": self.triple.confidence,
            "status": self.triple.status,
            "source": self.triple.provenance.source,
            "sentence_ids": self.triple.provenance.sentence_ids,
            "sentences": self.triple.provenance.sentences,
            "decided_by": self.decided_by,
            "decided_at": self.decided_at,
            "decision": self.decision,
        }


def _entry_from_record(record: dict) -> ReviewQueueEntry:
    triple = CandidateTriple(
        subject=record["subject"],
        object=record["object"],
        predicate=parse_label(record["predicate"]),
        confidence=record["confidence"],
        provenance=Provenance(
            source=record.get("source", ""),
            sentence_ids=record.get("sentence_ids", []),
            sentences=record.get("sentences", []),
        ),
        status=record.get("status", "pending"),
    )
    return ReviewQueueEntry(id=record["id"], triple=triple)


class ReviewQueue:
    """File-backed queue; one instance is the single writer for its store."""

    def __init__(self, store_dir: str):
        self.store_dir = store_dir
        os.makedirs(store_dir, exist_ok=True)
        self._entries: dict[str, ReviewQueueEntry] = {}
        self._lock = threading.Lock()
        self._replay()

    @property
    def _queue_path(self) -> str:
        return os.path.join(self.store_dir, QUEUE_FILE)

    @property
    def _decisions_path(self) -> str:
        return os.path.join(self.store_dir, DECISIONS_FILE)

    def _replay(self) -> None:
        if os.path.exists(self._queue_path):
            with open(self._queue_path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    record = json.loads(line)
                    entry = _entry_from_record(record)
                    entry.triple.status = "pending"
                    self._entries[entry.id] = entry
        if os.path.exists(self._decisions_path):
            with open(self._decisions_path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    record = json.loads(line)
                    entry = self._entries.get(record["id"])
                    if entry is None:
                        logger.warning("decision for unknown entry %s", record["id"])
                        continue
                    self._apply_decision(entry, record)

    def _apply_decision(self, entry: ReviewQueueEntry, record: dict) -> None:
        entry.decision = record["action"]
        entry.decided_by = record.get("reviewer")
        entry.decided_at = record.get("decided_at")
        entry.idempotency_key = record.get("idempotency_key")
        if record["action"] == "reject":
            entry.triple.status = "rejected"
        else:
            entry.triple.status = "accepted"
            if record.get("predicate"):
                entry.triple.predicate = parse_label(record["predicate"])

    # -- queue writes --------------------------------------------------------

    def add_pending(self, triples: Iterable[CandidateTriple]) -> list[ReviewQueueEntry]:
        """Append new pending entries; known ids (any status) are skipped."""
        added = []
        with self._lock:
            with open(self._queue_path, "a", encoding="utf-8") as fh:
                for triple in triples:
                    entry_id = triple_id(triple)
                    if entry_id in self._entries:
                        continue
                    triple.status = "pending"
                    entry = ReviewQueueEntry(id=entry_id, triple=triple)
                    self._entries[entry_id] = entry
                    fh.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")
                    added.append(entry)
        return added

    def decide(
        self,
        entry_id: str,
        action: str,
        predicate: Optional[LabelKind] = None,
        reviewer: Optional[str] = None,
        idempotency_key: Optional[str] = None,
    ) -> ReviewQueueEntry:
        """Record a decision; decided entries are immutable afterwards.

        Replaying the same idempotency key returns the recorded entry, so
        retried requests cannot take effect twice.
        """
        if action not in ACTIONS:
            raise ValueError(f"unknown action {action!r}")
        if action == "accept-with-predicate":
            if predicate is None or predicate is LabelKind.NONE:
                raise ValueError("accept-with-predicate requires a non-NONE predicate")
        with self._lock:
            entry = self._entries.get(entry_id)
            if entry is None:
                raise KeyError(f"no queue entry {entry_id}")
            if entry.decision is not None:
                if idempotency_key and entry.idempotency_key == idempotency_key:
                    return entry
                raise DecisionConflictError(
                    f"entry {entry_id} already decided ({entry.decision})"
                )
            record = {
                "id": entry_id,
                "action": action,
                "predicate": label_token(predicate) if predicate else None,
                "reviewer": reviewer,
                "idempotency_key": idempotency_key,
                "decided_at": datetime.now(timezone.utc).isoformat(),
            }
            with open(self._decisions_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
            self._apply_decision(entry, record)
            return entry

    # -- queue reads -----------------------------------------------------------

    def get(self, entry_id: str) -> Optional[ReviewQueueEntry]:
        return self._entries.get(entry_id)

    def entries(
        self,
        status: Optional[str] = None,
        predicate: Optional[LabelKind] = None,
        source: Optional[str] = None,
        min_confidence: Optional[float] = None,
        max_confidence: Optional[float] = None,
    ) -> list[ReviewQueueEntry]:
        out = []
        for entry in self._entries.values():
            if status and entry.status != status:
                continue
            if predicate and entry.triple.predicate is not predicate:
                continue
            if source and entry.triple.provenance.source != source:
                continue
            if min_confidence is not None and entry.triple.confidence < min_confidence:
                continue
            if max_confidence is not None and entry.triple.confidence > max_confidence:
                continue
            out.append(entry)
        return out

    def pending(self) -> list[ReviewQueueEntry]:
        return self.entries(status="pending")

    def accepted_triples(self) -> list[CandidateTriple]:
        return [
            e.triple for e in self._entries.values() if e.triple.status == "accepted"
        ]


# ---------------------------------------------------------------------------
# Triple exports
# ---------------------------------------------------------------------------


def save_triples_tsv(triples: Iterable[CandidateTriple], path: str) -> None:
    """subject<TAB>predicate<TAB>object<TAB>confidence<TAB>source"""
    with open(path, "w", encoding="utf-8") as fh:
        for t in triples:
            fh.write(
                f"{t.subject}\t{label_token(t.predicate)}\t{t.object}\t"
                f"{t.confidence:.6f}\t{t.provenance.source}\n"
            )


def save_triples_turtle(triples: Iterable[CandidateTriple], path: str) -> None:
    """Turtle-subset emission readable by the ontology store."""
    from .ontology import predicate_for_label
    from .text import slugify

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("@prefix oe: <http://example.org/ontoenrich#> .\n")
        for t in triples:
            subject = slugify(t.subject).replace("-", "_")
            obj = slugify(t.object).replace("-", "_")
            fh.write(f"oe:{subject} oe:{predicate_for_label(t.predicate)} oe:{obj} .\n")
