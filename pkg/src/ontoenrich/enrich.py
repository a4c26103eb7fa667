"""Web page to candidate triples: ingest, sufficiency gate, noun-chunk
pairing, two-stage similarity filtering, classification, triple emission."""

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Callable, Optional

from .dataset import TermPair
from .embeddings import EmbeddingProvider, EmbeddingSimilarity
from .errors import EmptyDocumentError, ParserFailure
from .labels import LabelKind
from .model import PathClassifier, classify_pair
from .ontology import OntologyGraph, merge_triples
from .parsing import ParsedToken, ParserAdapter, extract_chunks, parse_sentence
from .paths import DEFAULT_MAX_PATH_LEN, collect_pair_paths
from .text import split_sentences

logger = logging.getLogger(__name__)

NULL_PATH_MARKER = "null-path"


@dataclass
class Thresholds:
    domain_sim: float = 0.25
    pair_sim: float = 0.40
    sufficiency: float = 0.10

    def __post_init__(self):
        for name in ("domain_sim", "pair_sim", "sufficiency"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")


@dataclass
class Provenance:
    source: str
    sentence_ids: list[str] = field(default_factory=list)
    sentences: list[str] = field(default_factory=list)


@dataclass
class CandidateTriple:
    subject: str
    object: str
    predicate: LabelKind
    confidence: float
    provenance: Provenance
    status: str = "pending"      # pending | accepted | rejected | auto-merged

    def __post_init__(self):
        if self.predicate is LabelKind.NONE:
            raise ValueError("NONE pairs never become candidate triples")
        if not 0.0 < self.confidence <= 1.0:
            raise ValueError(f"confidence must be in (0, 1], got {self.confidence}")


@dataclass
class WebDocument:
    source: str
    text: str
    sentences: list[str] = field(default_factory=list)
    chunks: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.sentences:
            self.sentences = split_sentences(self.text)


@dataclass
class SufficiencyReport:
    passed: bool
    enabled: bool
    total_chunks: int
    new_domain_chunks: int
    fraction: float


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------

_HTML_HINT_RE = re.compile(r"<\s*(?:html|body|p|div|head)\b", re.IGNORECASE)
_SKIP_ELEMENTS = {"script", "style", "nav", "header", "footer", "aside"}


class _ParagraphExtractor(HTMLParser):
    """Collects text from paragraph elements, ignoring boilerplate."""

    def __init__(self):
        super().__init__()
        self.paragraphs: list[str] = []
        self._depth = 0
        self._skip = 0
        self._buffer: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_ELEMENTS:
            self._skip += 1
        elif tag == "p" and self._skip == 0:
            self._depth += 1

    def handle_endtag(self, tag):
        if tag in _SKIP_ELEMENTS:
            self._skip = max(0, self._skip - 1)
        elif tag == "p" and self._depth:
            self._depth -= 1
            if self._depth == 0:
                text = " ".join("".join(self._buffer).split())
                if text:
                    self.paragraphs.append(text)
                self._buffer.clear()

    def handle_data(self, data):
        if self._depth and not self._skip:
            self._buffer.append(data)


def html_to_text(markup: str) -> str:
    extractor = _ParagraphExtractor()
    extractor.feed(markup)
    extractor.close()
    return "\n".join(extractor.paragraphs)


def _read_source(source: str) -> str:
    if source.startswith(("http://", "https://")):
        import requests

        response = requests.get(source, timeout=30)
        response.raise_for_status()
        return response.text
    with open(source, encoding="utf-8") as fh:
        return fh.read()


def ingest(source: str) -> WebDocument:
    """Fetch or read a page; keep paragraph text only, sentence-split.

    Plain text (no markup) passes through unchanged. An empty result is an
    error carrying the source identifier.
    """
    raw = _read_source(source)
    text = html_to_text(raw) if _HTML_HINT_RE.search(raw) else raw
    if not text.strip():
        raise EmptyDocumentError(f"no usable text in {source}")
    return WebDocument(source=source, text=text)


# ---------------------------------------------------------------------------
# Chunking and gating
# ---------------------------------------------------------------------------


def parse_document(
    doc: WebDocument, parser: ParserAdapter
) -> list[tuple[str, list[ParsedToken]]]:
    """(sentence_id, tokens) per parseable sentence; failures are skipped."""
    parsed = []
    for i, sentence in enumerate(doc.sentences):
        try:
            parsed.append((f"{doc.source}#{i}", parse_sentence(sentence, parser)))
        except ParserFailure as exc:
            logger.warning("parse failed for %s#%d: %s", doc.source, i, exc)
    return parsed


def chunk_document(
    doc: WebDocument,
    parser: ParserAdapter,
    coref: Optional[Callable[[str], str]] = None,
) -> WebDocument:
    """Fill doc.chunks from its sentences (after optional coreference)."""
    if coref is not None:
        doc = WebDocument(source=doc.source, text=coref(doc.text))
    parsed = parse_document(doc, parser)
    doc.chunks = extract_chunks(tokens for _, tokens in parsed)
    return doc


def sufficiency_gate(
    doc: WebDocument,
    graph: OntologyGraph,
    thresholds: Thresholds,
    enabled: bool,
    provider: EmbeddingProvider,
    anchor_text: str,
) -> SufficiencyReport:
    """Requires enough chunks that are domain-similar and new to the ontology.

    Disabled gates always pass.
    """
    sim = EmbeddingSimilarity(provider)
    new_domain = [
        c
        for c in doc.chunks
        if sim.similarity(c, anchor_text) >= thresholds.domain_sim
        and not graph.has_label(c)
    ]
    total = len(doc.chunks)
    fraction = len(new_domain) / total if total else 0.0
    passed = True if not enabled else fraction >= thresholds.sufficiency
    return SufficiencyReport(
        passed=passed,
        enabled=enabled,
        total_chunks=total,
        new_domain_chunks=len(new_domain),
        fraction=fraction,
    )


def generate_pairs(chunks: list[str]) -> list[tuple[str, str]]:
    """All unordered pairs of distinct chunks: n(n-1)/2."""
    return list(itertools.combinations(chunks, 2))


def filter_pairs(
    pairs: list[tuple[str, str]],
    anchor_text: str,
    provider: EmbeddingProvider,
    thresholds: Thresholds,
) -> list[tuple[str, str]]:
    """Two-stage filter: both chunks domain-similar, and similar to each other."""
    sim = EmbeddingSimilarity(provider)
    kept = []
    for a, b in pairs:
        domain = min(sim.similarity(a, anchor_text), sim.similarity(b, anchor_text))
        if domain >= thresholds.domain_sim and sim.similarity(a, b) >= thresholds.pair_sim:
            kept.append((a, b))
    return kept


# ---------------------------------------------------------------------------
# End-to-end document enrichment
# ---------------------------------------------------------------------------


def enrich(
    doc: WebDocument,
    model: PathClassifier,
    graph: OntologyGraph,
    thresholds: Thresholds,
    mode: str,
    parser: ParserAdapter,
    anchor_text: str,
    max_path_len: int = DEFAULT_MAX_PATH_LEN,
    queue=None,
    sufficiency_enabled: bool = False,
    coref: Optional[Callable[[str], str]] = None,
) -> list[CandidateTriple]:
    """Classify the surviving chunk pairs of a document into triples.

    Paths come from the document's own sentences via the same extractor
    used at training time. Each unordered pair is classified once per
    ordering and the higher-confidence non-NONE result wins; NONE pairs
    are discarded. ``auto`` mode merges into the graph; ``review`` mode
    leaves the graph untouched and parks candidates in the queue.
    """
    if mode not in ("auto", "review"):
        raise ValueError(f"unknown enrich mode {mode!r}")

    doc = chunk_document(doc, parser, coref)
    gate = sufficiency_gate(
        doc, graph, thresholds, sufficiency_enabled, model.provider, anchor_text
    )
    if not gate.passed:
        logger.info(
            "sufficiency gate failed for %s (%d/%d new domain chunks)",
            doc.source,
            gate.new_domain_chunks,
            gate.total_chunks,
        )
        return []

    surviving = filter_pairs(
        generate_pairs(doc.chunks), anchor_text, model.provider, thresholds
    )
    parsed = parse_document(doc, parser)
    sentence_text = {f"{doc.source}#{i}": s for i, s in enumerate(doc.sentences)}

    candidates: list[CandidateTriple] = []
    for a, b in surviving:
        try:
            orderings = [
                TermPair(a=a, b=b, label=LabelKind.NONE, source="webpage"),
                TermPair(a=b, b=a, label=LabelKind.NONE, source="webpage"),
            ]
        except ValueError:
            continue
        best = None
        for pair in orderings:
            pp = collect_pair_paths(parsed, [pair], max_path_len)[0]
            try:
                probs = classify_pair(pair, pp, model)
            except Exception as exc:
                logger.warning("classification failed for %s: %s", pair.key, exc)
                continue
            if probs.predicted is LabelKind.NONE:
                continue
            if best is None or probs.confidence > best[1].confidence:
                best = (pair, probs, pp)
        if best is None:
            continue
        pair, probs, pp = best
        sentence_ids = sorted({sid for p in pp.paths for sid in p.sentence_ids})
        provenance = Provenance(
            source=doc.source,
            sentence_ids=sentence_ids or [NULL_PATH_MARKER],
            sentences=[sentence_text[sid] for sid in sentence_ids[:3] if sid in sentence_text],
        )
        candidates.append(
            CandidateTriple(
                subject=pair.a,
                object=pair.b,
                predicate=probs.predicted,
                confidence=probs.confidence,
                provenance=provenance,
            )
        )

    if mode == "auto":
        merge_triples(graph, candidates, mode="auto")
        for candidate in candidates:
            candidate.status = "auto-merged"
    elif queue is not None:
        queue.add_pending(candidates)
    return candidates


# ---------------------------------------------------------------------------
# Threshold calibration
# ---------------------------------------------------------------------------


def calibrate_thresholds(
    labeled_pairs: list[tuple[str, str, bool]],
    anchor_text: str,
    provider: EmbeddingProvider,
    grid: Optional[list[float]] = None,
) -> tuple[Thresholds, float]:
    """Sweep (domain_sim, pair_sim) over a grid against keep/drop labels.

    Returns the accuracy-maximizing threshold pair; ties resolve to the
    smallest thresholds.
    """
    if grid is None:
        grid = [round(0.05 * i, 2) for i in range(20)]
    sim = EmbeddingSimilarity(provider)
    best: tuple[float, float, float] | None = None
    for domain in grid:
        for pair_sim in grid:
            correct = 0
            for a, b, keep in labeled_pairs:
                passes = (
                    min(sim.similarity(a, anchor_text), sim.similarity(b, anchor_text))
                    >= domain
                    and sim.similarity(a, b) >= pair_sim
                )
                correct += passes == keep
            accuracy = correct / len(labeled_pairs)
            if best is None or accuracy > best[0]:
                best = (accuracy, domain, pair_sim)
    accuracy, domain, pair_sim = best
    return Thresholds(domain_sim=domain, pair_sim=pair_sim), accuracy
