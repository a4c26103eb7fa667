"""Seed-ontology store: load, normalize, mutate, persist, and knock out.

The graph keeps concepts keyed by their normalized label, relations as
(subject, predicate, object) rows over those keys, and an append-only
changelog such that replaying the changelog against an empty graph
reproduces the graph exactly, version included.
"""

from __future__ import annotations

import logging
import random
import re
import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import TripleParseError
from .labels import LabelKind, PREDICATE_TOKENS
from .text import normalize_label

logger = logging.getLogger(__name__)

#: predicate tokens with fixed semantics; anything else is a domain verb
KNOWN_PREDICATES = {"hypernym", "hyponym", "instanceOf", "conceptOf"}

OP_ADD_CONCEPT = "add-concept"
OP_ADD_RELATION = "add-relation"


def predicate_kind(token: str) -> str:
    return token if token in KNOWN_PREDICATES else "domain-verb"


def predicate_for_label(kind: LabelKind) -> str:
    """Ontology predicate token for a non-NONE classification label."""
    if kind is LabelKind.NONE:
        raise ValueError("NONE pairs never become ontology relations")
    return PREDICATE_TOKENS[kind]


@dataclass
class Concept:
    id: str                      # normalized label (opaque to callers)
    label: str                   # normalized display label == id
    aliases: set[str] = field(default_factory=set)

    def __post_init__(self):
        if not self.label:
            raise ValueError("concept label must be nonempty")


@dataclass(frozen=True)
class Relation:
    subject: str                 # concept id
    predicate: str               # predicate token
    object: str                  # concept id (instances are concepts too)

    @property
    def kind(self) -> str:
        return predicate_kind(self.predicate)


@dataclass(frozen=True)
class ChangeRecord:
    version: int
    op: str                      # add-concept | add-relation
    subject: str                 # raw label as first seen
    predicate: str               # empty for add-concept
    object: str                  # empty for add-concept

    def to_line(self) -> str:
        return "\t".join(
            (str(self.version), self.op, self.subject, self.predicate, self.object)
        )


class OntologyGraph:
    """Mutable concept/relation store with versioned, replayable history.

    Single-writer: mutating calls serialize on an internal lock; reads are
    safe concurrently with each other.
    """

    def __init__(self):
        self.concepts: dict[str, Concept] = {}
        self.relations: list[Relation] = []
        self.version: int = 0
        self.changelog: list[ChangeRecord] = []
        self._relation_keys: set[tuple[str, str, str]] = set()
        self._lock = threading.Lock()

    # -- read side ---------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, OntologyGraph):
            return NotImplemented
        return (
            list(self.concepts) == list(other.concepts)
            and [(c.label, sorted(c.aliases)) for c in self.concepts.values()]
            == [(c.label, sorted(c.aliases)) for c in other.concepts.values()]
            and self.relations == other.relations
            and self.version == other.version
            and self.changelog == other.changelog
        )

    def has_label(self, label: str) -> bool:
        return normalize_label(label) in self.concepts

    def concept_labels(self) -> set[str]:
        return set(self.concepts)

    def has_relation(self, subject: str, predicate: str, obj: str) -> bool:
        key = (normalize_label(subject), predicate, normalize_label(obj))
        return key in self._relation_keys

    def stats(self) -> dict:
        return {
            "concepts": len(self.concepts),
            "relations": len(self.relations),
            "version": self.version,
        }

    def changelog_since(self, version: int) -> list[ChangeRecord]:
        return [r for r in self.changelog if r.version > version]

    # -- write side (callers hold no lock; each public op locks once) ------

    def _ensure_concept(self, raw_label: str) -> str:
        norm = normalize_label(raw_label)
        if not norm:
            raise ValueError("empty concept label")
        concept = self.concepts.get(norm)
        if concept is None:
            self.concepts[norm] = Concept(id=norm, label=norm, aliases={raw_label})
        else:
            concept.aliases.add(raw_label)
        return norm

    def _apply_concept(self, version: int, raw_label: str) -> None:
        self._ensure_concept(raw_label)
        self.changelog.append(
            ChangeRecord(version, OP_ADD_CONCEPT, raw_label, "", "")
        )

    def _apply_relation(
        self, version: int, raw_subject: str, predicate: str, raw_object: str
    ) -> bool:
        """Add one relation; returns False when it duplicates an existing row."""
        key = (
            normalize_label(raw_subject),
            predicate,
            normalize_label(raw_object),
        )
        if key in self._relation_keys:
            return False
        subject = self._ensure_concept(raw_subject)
        obj = self._ensure_concept(raw_object)
        self.relations.append(Relation(subject, predicate, obj))
        self._relation_keys.add(key)
        self.changelog.append(
            ChangeRecord(version, OP_ADD_RELATION, raw_subject, predicate, raw_object)
        )
        return True

    def add_triples(
        self, triples: Iterable[tuple[str, str, str]], warn_duplicates: bool = True
    ) -> int:
        """Bulk-add raw (subject, predicate, object) rows as one mutation.

        Returns the number of rows applied; duplicates are skipped.
        """
        applied = 0
        with self._lock:
            version = self.version + 1
            for raw_s, pred, raw_o in triples:
                if self._apply_relation(version, raw_s, pred, raw_o):
                    applied += 1
                elif warn_duplicates:
                    logger.warning(
                        "duplicate triple skipped: %s %s %s", raw_s, pred, raw_o
                    )
            if applied:
                self.version = version
        return applied

    def add_concepts(self, raw_labels: Iterable[str]) -> int:
        """Bulk-add bare concepts (used by knockout rebuilds and replays)."""
        added = 0
        with self._lock:
            version = self.version + 1
            for raw in raw_labels:
                if normalize_label(raw) not in self.concepts:
                    self._apply_concept(version, raw)
                    added += 1
            if added:
                self.version = version
        return added


# ---------------------------------------------------------------------------
# Candidate-triple merging
# ---------------------------------------------------------------------------


@dataclass
class MergeReport:
    applied: int = 0
    duplicates: int = 0
    rejected: list[tuple[str, str]] = field(default_factory=list)  # (triple repr, reason)
    version: int = 0


def _triple_fields(triple) -> tuple[str, str, str]:
    """Accept CandidateTriple-likes and plain (s, p, o) tuples."""
    if isinstance(triple, tuple):
        subject, predicate, obj = triple
    else:
        subject, predicate, obj = triple.subject, triple.predicate, triple.object
    if isinstance(predicate, LabelKind):
        predicate = predicate_for_label(predicate)
    return str(subject), str(predicate), str(obj)


def merge_triples(graph: OntologyGraph, triples, mode: str = "auto") -> MergeReport:
    """Merge candidate triples into the graph.

    ``mode="accepted-only"`` skips triples whose ``status`` is not
    ``"accepted"``. The graph mutates in place; the version rises exactly
    once when at least one triple applies. Per-triple rejections (empty
    labels, unknown predicates) are reported, never abort the batch.
    """
    if mode not in ("auto", "accepted-only"):
        raise ValueError(f"unknown merge mode {mode!r}")
    report = MergeReport()
    to_apply: list[tuple[str, str, str]] = []
    for triple in triples:
        if mode == "accepted-only":
            status = getattr(triple, "status", "accepted")
            if status != "accepted":
                continue
        try:
            subject, predicate, obj = _triple_fields(triple)
        except (ValueError, AttributeError) as exc:
            report.rejected.append((repr(triple), str(exc)))
            continue
        if not normalize_label(subject) or not normalize_label(obj):
            report.rejected.append((repr(triple), "empty subject or object label"))
            continue
        if predicate_kind(predicate) == "domain-verb" and not predicate.strip():
            report.rejected.append((repr(triple), "empty predicate"))
            continue
        to_apply.append((subject, predicate, obj))

    with graph._lock:
        version = graph.version + 1
        for subject, predicate, obj in to_apply:
            if graph._apply_relation(version, subject, predicate, obj):
                report.applied += 1
            else:
                report.duplicates += 1
        if report.applied:
            graph.version = version
    report.version = graph.version
    return report


# ---------------------------------------------------------------------------
# Loading and persistence
# ---------------------------------------------------------------------------

#: extension comment used to persist concepts that have no relations
_CONCEPT_COMMENT = "# concept:"

_TURTLE_PREFIX_RE = re.compile(r"@prefix\s+(\S*):\s*<([^>]*)>\s*\.")


def _turtle_term(term: str, prefixes: dict[str, str]) -> str:
    """Strip a Turtle term down to a plain label."""
    term = term.strip()
    if term.startswith("<") and term.endswith(">"):
        uri = term[1:-1]
    elif term.startswith('"'):
        return term.strip('"')
    elif ":" in term:
        prefix, local = term.split(":", 1)
        uri = prefixes.get(prefix, "") + local
    else:
        return term
    local = uri.rsplit("#", 1)[-1].rsplit("/", 1)[-1]
    return local.replace("_", " ")


def _iter_tsv_triples(path: str) -> Iterator[tuple[int, str, str, str, bool]]:
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if stripped.startswith(_CONCEPT_COMMENT):
                yield line_no, stripped[len(_CONCEPT_COMMENT):].strip(), "", "", True
                continue
            if not stripped.strip() or stripped.lstrip().startswith("#"):
                continue
            parts = stripped.split("\t")
            if len(parts) != 3:
                raise TripleParseError(
                    path, line_no, f"expected 3 tab-separated fields, got {len(parts)}"
                )
            subject, predicate, obj = (p.strip() for p in parts)
            if not subject or not predicate or not obj:
                raise TripleParseError(path, line_no, "empty field in triple")
            yield line_no, subject, predicate, obj, False


def _iter_turtle_triples(path: str) -> Iterator[tuple[int, str, str, str, bool]]:
    prefixes: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            m = _TURTLE_PREFIX_RE.match(stripped)
            if m:
                prefixes[m.group(1)] = m.group(2)
                continue
            if not stripped.endswith("."):
                raise TripleParseError(path, line_no, "statement must end with '.'")
            body = stripped[:-1].strip()
            parts = body.split(None, 2)
            if len(parts) != 3:
                raise TripleParseError(path, line_no, "expected 3 Turtle terms")
            subject, predicate, obj = (_turtle_term(p, prefixes) for p in parts)
            yield line_no, subject, predicate, obj, False


def load_ontology(path: str, format: str = "triple-tsv") -> OntologyGraph:
    """Read a seed ontology from a triple TSV or a Turtle subset."""
    if format == "triple-tsv":
        rows = _iter_tsv_triples(path)
    elif format == "turtle-subset":
        rows = _iter_turtle_triples(path)
    else:
        raise ValueError(f"unknown ontology format {format!r}")

    graph = OntologyGraph()
    triples: list[tuple[str, str, str]] = []
    bare_concepts: list[str] = []
    for _line_no, subject, predicate, obj, is_concept in rows:
        if is_concept:
            bare_concepts.append(subject)
        else:
            triples.append((subject, predicate, obj))
    if triples or bare_concepts:
        with graph._lock:
            version = graph.version + 1
            for raw in bare_concepts:
                if normalize_label(raw) not in graph.concepts:
                    graph._apply_concept(version, raw)
            for subject, predicate, obj in triples:
                if not graph._apply_relation(version, subject, predicate, obj):
                    logger.warning(
                        "duplicate triple skipped: %s %s %s", subject, predicate, obj
                    )
            graph.version = version
    return graph


def save_ontology(graph: OntologyGraph, path: str) -> None:
    """Persist as triple TSV; relation-free concepts ride along as comments."""
    related = {r.subject for r in graph.relations} | {r.object for r in graph.relations}
    with open(path, "w", encoding="utf-8") as fh:
        for concept_id in graph.concepts:
            if concept_id not in related:
                fh.write(f"{_CONCEPT_COMMENT} {concept_id}\n")
        for rel in graph.relations:
            fh.write(f"{rel.subject}\t{rel.predicate}\t{rel.object}\n")


def save_changelog(graph: OntologyGraph, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in graph.changelog:
            fh.write(record.to_line() + "\n")


def load_changelog(path: str) -> list[ChangeRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if not stripped:
                continue
            parts = stripped.split("\t")
            if len(parts) != 5:
                raise TripleParseError(path, line_no, "changelog row needs 5 fields")
            version, op, subject, predicate, obj = parts
            records.append(ChangeRecord(int(version), op, subject, predicate, obj))
    return records


def replay_changelog(records: Iterable[ChangeRecord]) -> OntologyGraph:
    """Rebuild a graph from scratch by re-applying its history."""
    graph = OntologyGraph()
    for record in records:
        if record.op == OP_ADD_CONCEPT:
            graph._apply_concept(record.version, record.subject)
        elif record.op == OP_ADD_RELATION:
            graph._apply_relation(
                record.version, record.subject, record.predicate, record.object
            )
        else:
            raise ValueError(f"unknown changelog op {record.op!r}")
        graph.version = max(graph.version, record.version)
    return graph


# ---------------------------------------------------------------------------
# Knockout
# ---------------------------------------------------------------------------


@dataclass
class KnockoutResult:
    reduced: OntologyGraph
    held_out: list[Relation]


def knockout(graph: OntologyGraph, fraction: float, seed: int) -> KnockoutResult:
    """Hold out round(fraction * |relations|) relations, rebuilding the rest.

    Concepts that appear only in held-out relations drop from the reduced
    graph; relation-free concepts survive. Deterministic for a fixed seed.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    if not graph.relations:
        raise ValueError("graph has no relations to knock out")

    n_hold = int(fraction * len(graph.relations) + 0.5)  # half-up rounding
    rng = random.Random(seed)
    indices = set(rng.sample(range(len(graph.relations)), n_hold))
    held_out = [r for i, r in enumerate(graph.relations) if i in indices]
    kept = [r for i, r in enumerate(graph.relations) if i not in indices]

    kept_use = {r.subject for r in kept} | {r.object for r in kept}
    original_use = {r.subject for r in graph.relations} | {
        r.object for r in graph.relations
    }
    reduced = OntologyGraph()
    surviving = [
        cid
        for cid in graph.concepts
        if cid in kept_use or cid not in original_use  # relation-free concepts stay
    ]
    if surviving:
        reduced.add_concepts(surviving)
    if kept:
        reduced.add_triples(
            [(r.subject, r.predicate, r.object) for r in kept], warn_duplicates=False
        )
    return KnockoutResult(reduced=reduced, held_out=held_out)
