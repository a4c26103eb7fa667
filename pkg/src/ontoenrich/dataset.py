"""Labeled term-pair dataset: endpoint harvesting, expert curation, none-pair
similarity filtering, and holdout splitting."""

from __future__ import annotations

import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .embeddings import TermSimilarityProvider
from .errors import CurationError, EndpointError, TripleParseError
from .labels import LabelKind, label_token, parse_label
from .ontology import OntologyGraph
from .sparql import SparqlClient
from .text import normalize_label

logger = logging.getLogger(__name__)

SOURCES = ("endpoint", "curation", "knockout", "webpage")


@dataclass(frozen=True)
class TermPair:
    a: str
    b: str
    label: LabelKind
    source: str = "endpoint"

    def __post_init__(self):
        if normalize_label(self.a) == normalize_label(self.b):
            raise ValueError(f"degenerate pair: {self.a!r} ~ {self.b!r}")
        if self.source not in SOURCES:
            raise ValueError(f"unknown pair source {self.source!r}")

    @property
    def key(self) -> tuple[str, str]:
        return (normalize_label(self.a), normalize_label(self.b))


class CuratedDataset:
    """Pair list with unique (a, b) keys and per-label counts."""

    def __init__(self, pairs: Iterable[TermPair]):
        self.pairs: list[TermPair] = []
        self._by_key: dict[tuple[str, str], TermPair] = {}
        for pair in pairs:
            if pair.key in self._by_key:
                logger.warning("duplicate pair key %s skipped", pair.key)
                continue
            self._by_key[pair.key] = pair
            self.pairs.append(pair)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def get(self, a: str, b: str) -> Optional[TermPair]:
        return self._by_key.get((normalize_label(a), normalize_label(b)))

    def label_counts(self) -> dict[LabelKind, int]:
        counts = {kind: 0 for kind in LabelKind}
        for pair in self.pairs:
            counts[pair.label] += 1
        return counts


# ---------------------------------------------------------------------------
# Endpoint harvesting
# ---------------------------------------------------------------------------


def build_raw_dataset(
    graph: OntologyGraph, client: SparqlClient, parallelism: int = 1
) -> tuple[list[TermPair], dict[str, str]]:
    """One TermPair per (concept, related term) endpoint result.

    Per-concept endpoint failures land in the returned error report; the
    batch always continues. Assembly order follows the graph's concept
    order regardless of fetch concurrency.
    """
    concepts = list(graph.concepts)
    errors: dict[str, str] = {}

    def fetch(concept: str):
        try:
            return client.fetch_related_terms(concept)
        except EndpointError as exc:
            errors[concept] = str(exc)
            return []

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(fetch, concepts))
    else:
        results = [fetch(c) for c in concepts]

    pairs: list[TermPair] = []
    seen: set[tuple[str, str]] = set()
    for concept, related in zip(concepts, results):
        for term, kind in related:
            try:
                pair = TermPair(a=concept, b=term, label=kind, source="endpoint")
            except ValueError:
                logger.warning("skipped degenerate endpoint pair (%s, %s)", concept, term)
                continue
            if pair.key in seen:
                logger.warning("duplicate endpoint pair %s skipped", pair.key)
                continue
            seen.add(pair.key)
            pairs.append(pair)
    return pairs, errors


# ---------------------------------------------------------------------------
# Curation
# ---------------------------------------------------------------------------


def apply_curation(raw: Iterable[TermPair], curation_path: Optional[str]) -> CuratedDataset:
    """Override labels per curation rows; uncurated rows keep their labels.

    Curation file: TSV ``a<TAB>b<TAB>new_label``. Rows with unknown (a, b)
    keys are skipped with a warning; an unknown label token is a hard error.
    """
    overrides: dict[tuple[str, str], LabelKind] = {}
    if curation_path:
        with open(curation_path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                stripped = line.rstrip("\n")
                if not stripped.strip() or stripped.lstrip().startswith("#"):
                    continue
                parts = stripped.split("\t")
                if len(parts) != 3:
                    raise CurationError(
                        f"{curation_path}:{line_no}: expected 3 fields, got {len(parts)}"
                    )
                a, b, token = parts
                try:
                    label = parse_label(token)
                except KeyError:
                    raise CurationError(
                        f"{curation_path}:{line_no}: unknown label token {token!r}"
                    ) from None
                overrides[(normalize_label(a), normalize_label(b))] = label

    pairs = []
    matched: set[tuple[str, str]] = set()
    for pair in raw:
        label = overrides.get(pair.key)
        if label is not None:
            matched.add(pair.key)
            if label != pair.label:
                pair = replace(pair, label=label, source="curation")
        pairs.append(pair)
    for key in overrides:
        if key not in matched:
            logger.warning("curation row for unknown pair %s skipped", key)
    return CuratedDataset(pairs)


# ---------------------------------------------------------------------------
# None-pair similarity filter
# ---------------------------------------------------------------------------


def filter_none_pairs(
    dataset: CuratedDataset,
    fraction: float,
    similarity: TermSimilarityProvider,
    strategy: str = "keep-least-similar",
) -> CuratedDataset:
    """Retain exactly floor(fraction * |NONE|) of the NONE pairs.

    NONE pairs sort by similarity ascending with a deterministic (a, b)
    tie-break; the strategy picks which end of the order survives. All
    non-NONE pairs are always retained, in input order.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if strategy not in ("keep-least-similar", "keep-most-similar"):
        raise ValueError(f"unknown strategy {strategy!r}")

    none_pairs = [p for p in dataset.pairs if p.label is LabelKind.NONE]
    scored: list[tuple[float, tuple[str, str], TermPair]] = []
    for pair in none_pairs:
        try:
            score = similarity.similarity(pair.a, pair.b)
        except Exception as exc:
            logger.warning("similarity failed for %s: %s; scored as 0", pair.key, exc)
            score = 0.0
        scored.append((score, pair.key, pair))
    scored.sort(key=lambda item: (item[0], item[1]))

    keep_count = math.floor(fraction * len(none_pairs))
    if strategy == "keep-least-similar":
        kept = scored[:keep_count]
    else:
        kept = scored[len(scored) - keep_count:]
    kept_keys = {item[1] for item in kept}

    survivors = [
        p
        for p in dataset.pairs
        if p.label is not LabelKind.NONE or p.key in kept_keys
    ]
    return CuratedDataset(survivors)


# ---------------------------------------------------------------------------
# Holdout split
# ---------------------------------------------------------------------------


def split_holdout(
    dataset: CuratedDataset, fraction: float, seed: int
) -> tuple[CuratedDataset, CuratedDataset]:
    """Disjoint, union-preserving split, stratified by label, seeded.

    Each class contributes floor(fraction * |class|) pairs to the test
    side, so any class with at least ceil(1/fraction) members appears in
    the test set.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")

    rng = random.Random(seed)
    test_keys: set[tuple[str, str]] = set()
    for kind in LabelKind:
        members = sorted(
            (p.key for p in dataset.pairs if p.label is kind)
        )
        rng.shuffle(members)
        take = math.floor(fraction * len(members))
        test_keys.update(members[:take])

    if not test_keys:
        raise ValueError(f"fraction {fraction} yields an empty test set")
    train = [p for p in dataset.pairs if p.key not in test_keys]
    test = [p for p in dataset.pairs if p.key in test_keys]
    if not train:
        raise ValueError(f"fraction {fraction} yields an empty training set")
    return CuratedDataset(train), CuratedDataset(test)


# ---------------------------------------------------------------------------
# Persistence: TSV a<TAB>b<TAB>label<TAB>source
# ---------------------------------------------------------------------------


def save_dataset(dataset: CuratedDataset, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in dataset.pairs:
            fh.write(
                f"{pair.a}\t{pair.b}\t{label_token(pair.label)}\t{pair.source}\n"
            )


def load_dataset(path: str) -> CuratedDataset:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if not stripped.strip() or stripped.lstrip().startswith("#"):
                continue
            parts = stripped.split("\t")
            if len(parts) != 4:
                raise TripleParseError(path, line_no, "dataset row needs 4 fields")
            a, b, token, source = parts
            try:
                label = parse_label(token)
            except KeyError:
                raise TripleParseError(
                    path, line_no, f"unknown label token {token!r}"
                ) from None
            pairs.append(TermPair(a=a, b=b, label=label, source=source))
    return CuratedDataset(pairs)
