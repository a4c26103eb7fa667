"""Dependency paths between term-pair anchors.

A path runs from term X's anchor token up to the lowest common ancestor
and back down to term Y's anchor, serialized as (lemma, pos, dep, dir)
nodes. Identical node sequences aggregate into one path with a count;
pairs that never co-occur get the sentinel NULL path so classification
can fall back to the distributional term embeddings.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional

from .corpus import Corpus
from .dataset import TermPair
from .errors import ParserFailure
from .labels import LabelKind, label_token, parse_label
from .parsing import ParsedToken, ParserAdapter, parse_sentence
from .text import normalize_label, slugify, split_sentences

logger = logging.getLogger(__name__)

DEFAULT_MAX_PATH_LEN = 8

UNK = "<unk>"


class Direction(Enum):
    TOWARD_ROOT = "+"
    ROOT = "~"
    AWAY_FROM_ROOT = "-"

    @property
    def symbol(self) -> str:
        return self.value


@dataclass(frozen=True)
class DependencyNode:
    lemma: str
    pos: str
    dep: str
    dir: Direction

    def as_tuple(self) -> tuple[str, str, str, str]:
        return (self.lemma, self.pos, self.dep, self.dir.symbol)


NULL_NODE = DependencyNode(lemma=UNK, pos=UNK, dep=UNK, dir=Direction.ROOT)


@dataclass
class DependencyPath:
    nodes: tuple[DependencyNode, ...]
    count: int = 1
    sentence_ids: list[str] = field(default_factory=list)  # provenance, not serialized

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("path count must be positive")
        if not self.nodes:
            raise ValueError("path must have at least one node")


NULL_PATH_NODES = (NULL_NODE,)


@dataclass
class PairPaths:
    pair: TermPair
    paths: list[DependencyPath]
    is_null: bool = False

    def total_count(self) -> int:
        return sum(p.count for p in self.paths)


def null_pair_paths(pair: TermPair) -> PairPaths:
    return PairPaths(
        pair=pair, paths=[DependencyPath(nodes=NULL_PATH_NODES, count=1)], is_null=True
    )


# ---------------------------------------------------------------------------
# Term anchoring
# ---------------------------------------------------------------------------


def _token_matches(token: ParsedToken, word: str) -> bool:
    return token.surface.lower() == word or token.lemma == word


def _matching_spans(tokens: list[ParsedToken], term: str) -> list[tuple[int, int]]:
    """All [start, end) spans whose tokens match the term's word sequence."""
    words = normalize_label(term).split()
    if not words:
        return []
    width = len(words)
    return [
        (start, start + width)
        for start in range(len(tokens) - width + 1)
        if all(_token_matches(tokens[start + i], words[i]) for i in range(width))
    ]


def _span_head(tokens: list[ParsedToken], span: tuple[int, int]) -> int:
    """The span token whose governor lies outside the span."""
    start, end = span
    indices = range(start, end)
    heads = [
        tokens[i].index
        for i in indices
        if tokens[i].head not in indices or tokens[i].head == tokens[i].index
    ]
    return heads[0] if heads else end - 1


def locate_term(tokens: list[ParsedToken], term: str) -> Optional[int]:
    """Anchor index of the term's syntactic head, or None when absent.

    The term's word sequence must match consecutively (surface or lemma,
    case-insensitive); the leftmost span wins, and the anchor is the span
    token whose governor lies outside the span.
    """
    spans = _matching_spans(tokens, term)
    if not spans:
        return None
    return _span_head(tokens, spans[0])


def locate_pair(
    tokens: list[ParsedToken], term_a: str, term_b: str
) -> Optional[tuple[int, int]]:
    """Anchors for a co-mention: leftmost disjoint spans preferred.

    One term may occur inside the other's mention (e.g. a product name
    containing the class noun); such overlapping spans only count when no
    disjoint pair of mentions exists and the anchors still differ.
    """
    spans_a = _matching_spans(tokens, term_a)
    spans_b = _matching_spans(tokens, term_b)
    for span_a in spans_a:
        for span_b in spans_b:
            if span_a[1] <= span_b[0] or span_b[1] <= span_a[0]:
                return _span_head(tokens, span_a), _span_head(tokens, span_b)
    for span_a in spans_a:
        for span_b in spans_b:
            anchor_a = _span_head(tokens, span_a)
            anchor_b = _span_head(tokens, span_b)
            if anchor_a != anchor_b:
                return anchor_a, anchor_b
    return None


# ---------------------------------------------------------------------------
# Path extraction through the LCA
# ---------------------------------------------------------------------------


def _chain_to_root(tokens: list[ParsedToken], start: int) -> Optional[list[int]]:
    chain = [start]
    current = start
    for _ in range(len(tokens)):
        head = tokens[current].head
        if head == current:
            return chain
        chain.append(head)
        current = head
    return None  # cycle: malformed fragment


def extract_path(
    tokens: list[ParsedToken],
    anchor_x: int,
    anchor_y: int,
    max_path_len: int = DEFAULT_MAX_PATH_LEN,
) -> Optional[DependencyPath]:
    """X's chain up to the LCA, the LCA, then down to Y.

    Direction marks the flank: TOWARD_ROOT on the X side, ROOT on the LCA
    itself (which may be an endpoint), AWAY_FROM_ROOT on the Y side. Paths
    longer than max_path_len, and anchors in disconnected fragments, give
    None.
    """
    if anchor_x == anchor_y:
        raise ValueError("anchors must be distinct")
    x_chain = _chain_to_root(tokens, anchor_x)
    y_chain = _chain_to_root(tokens, anchor_y)
    if x_chain is None or y_chain is None:
        logger.warning("malformed tree: cycle while walking to root")
        return None
    y_ancestors = set(y_chain)
    lca = next((i for i in x_chain if i in y_ancestors), None)
    if lca is None:
        logger.warning("anchors in different parse fragments")
        return None

    x_part = x_chain[: x_chain.index(lca)]
    y_part = y_chain[: y_chain.index(lca)]

    def node(index: int, direction: Direction) -> DependencyNode:
        token = tokens[index]
        return DependencyNode(
            lemma=token.lemma, pos=token.pos, dep=token.dep, dir=direction
        )

    nodes = (
        [node(i, Direction.TOWARD_ROOT) for i in x_part]
        + [node(lca, Direction.ROOT)]
        + [node(i, Direction.AWAY_FROM_ROOT) for i in reversed(y_part)]
    )
    if len(nodes) > max_path_len:
        return None
    return DependencyPath(nodes=tuple(nodes))


# ---------------------------------------------------------------------------
# Corpus-wide collection
# ---------------------------------------------------------------------------

ParsedSentences = Iterable[tuple[str, list[ParsedToken]]]


def corpus_sentences(corpus: Corpus, parser: ParserAdapter) -> Iterator[tuple[str, list[ParsedToken]]]:
    """Live-parse corpus articles sentence by sentence; failures are skipped."""
    for article in corpus.articles:
        slug = slugify(article.title)
        for i, sentence in enumerate(split_sentences(article.text)):
            try:
                yield f"{slug}:{i}", parse_sentence(sentence, parser)
            except ParserFailure as exc:
                logger.warning("parse failed for %s:%d: %s", slug, i, exc)


def collect_pair_paths(
    sentences: ParsedSentences,
    pairs: list[TermPair],
    max_path_len: int = DEFAULT_MAX_PATH_LEN,
) -> list[PairPaths]:
    """Aggregate every pair's dependency paths across the corpus.

    Identical node sequences sum their counts. Pairs without a single
    co-mention path get the sentinel NULL path with count 1.
    """
    aggregates: list[dict[tuple, DependencyPath]] = [dict() for _ in pairs]
    for sentence_id, tokens in sentences:
        for idx, pair in enumerate(pairs):
            anchors = locate_pair(tokens, pair.a, pair.b)
            if anchors is None:
                continue
            anchor_a, anchor_b = anchors
            path = extract_path(tokens, anchor_a, anchor_b, max_path_len)
            if path is None:
                continue
            existing = aggregates[idx].get(path.nodes)
            if existing is None:
                path.sentence_ids.append(sentence_id)
                aggregates[idx][path.nodes] = path
            else:
                existing.count += 1
                existing.sentence_ids.append(sentence_id)

    results = []
    for pair, agg in zip(pairs, aggregates):
        if agg:
            results.append(PairPaths(pair=pair, paths=list(agg.values())))
        else:
            results.append(null_pair_paths(pair))
    return results


# ---------------------------------------------------------------------------
# Persistence: one JSON record per pair
# ---------------------------------------------------------------------------


def save_pair_paths(pair_paths: Iterable[PairPaths], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pp in pair_paths:
            record = {
                "a": pp.pair.a,
                "b": pp.pair.b,
                "label": label_token(pp.pair.label),
                "isNull": pp.is_null,
                "paths": [
                    {"nodes": [n.as_tuple() for n in p.nodes], "count": p.count}
                    for p in pp.paths
                ],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_pair_paths(path: str, source: str = "endpoint") -> list[PairPaths]:
    results = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            pair = TermPair(
                a=record["a"],
                b=record["b"],
                label=parse_label(record["label"]),
                source=source,
            )
            paths = [
                DependencyPath(
                    nodes=tuple(
                        DependencyNode(
                            lemma=lemma, pos=pos, dep=dep, dir=Direction(sym)
                        )
                        for lemma, pos, dep, sym in entry["nodes"]
                    ),
                    count=entry["count"],
                )
                for entry in record["paths"]
            ]
            results.append(
                PairPaths(pair=pair, paths=paths, is_null=record["isNull"])
            )
    return results
