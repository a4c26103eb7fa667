"""Deterministic synthetic training data: five separable relation classes
built from templated path patterns. Used by the training smoke tests and
handy for demo runs without a corpus."""

from __future__ import annotations

import random

from .dataset import CuratedDataset, TermPair, split_holdout
from .labels import LabelKind
from .paths import DependencyNode, DependencyPath, Direction, PairPaths, null_pair_paths

_T = Direction.TOWARD_ROOT
_R = Direction.ROOT
_A = Direction.AWAY_FROM_ROOT

#: per class: (a-term template, b-term template, connector lemma pool,
#: (pos_a, dep_a), (pos_b, dep_b))
_CLASS_RECIPES = {
    LabelKind.HYPERNYM: (
        ("zenith filter", "guard device"),
        ["be", "remain"],
        ("NOUN", "nsubj"),
        ("NOUN", "attr"),
    ),
    LabelKind.HYPONYM: (
        ("packet shield", "relay probe"),
        ["include", "cover"],
        ("NOUN", "nsubj"),
        ("NOUN", "dobj"),
    ),
    LabelKind.INSTANCE: (
        ("vertex suite", "branded product"),
        ["release", "launch"],
        ("PROPN", "nsubj"),
        ("NOUN", "dobj"),
    ),
    LabelKind.CONCEPT: (
        ("signal layer", "broad family"),
        ["exemplify", "embody"],
        ("NOUN", "nsubj"),
        ("NOUN", "pobj"),
    ),
    LabelKind.NONE: (
        ("random widget", "stray gadget"),
        ["and", "or"],
        ("NOUN", "conj"),
        ("NOUN", "conj"),
    ),
}


def _template_path(
    lemma_a: str,
    lemma_b: str,
    connector: str,
    tags_a: tuple[str, str],
    tags_b: tuple[str, str],
    count: int,
) -> DependencyPath:
    pos_a, dep_a = tags_a
    pos_b, dep_b = tags_b
    return DependencyPath(
        nodes=(
            DependencyNode(lemma=lemma_a, pos=pos_a, dep=dep_a, dir=_T),
            DependencyNode(lemma=connector, pos="VERB", dep="ROOT", dir=_R),
            DependencyNode(lemma=lemma_b, pos=pos_b, dep=dep_b, dir=_A),
        ),
        count=count,
    )


def make_separable_dataset(
    seed: int = 0, pairs_per_class: int = 12
) -> list[tuple[PairPaths, LabelKind]]:
    """~60 labeled pairs whose paths and term tokens are class-indicative.

    A slice of the NONE pairs carries the sentinel NULL path so the
    no-co-mention route is trained too.
    """
    rng = random.Random(seed)
    data: list[tuple[PairPaths, LabelKind]] = []
    for kind, ((stem_a, stem_b), connectors, tags_a, tags_b) in _CLASS_RECIPES.items():
        for i in range(pairs_per_class):
            a = f"{stem_a} {i}"
            b = f"{stem_b} {i}"
            pair = TermPair(a=a, b=b, label=kind, source="endpoint")
            if kind is LabelKind.NONE and i % 3 == 0:
                data.append((null_pair_paths(pair), kind))
                continue
            lemma_a = stem_a.split()[-1]
            lemma_b = stem_b.split()[-1]
            paths = [
                _template_path(
                    lemma_a,
                    lemma_b,
                    rng.choice(connectors),
                    tags_a,
                    tags_b,
                    count=rng.randint(1, 3),
                )
            ]
            if rng.random() < 0.4:
                paths.append(
                    _template_path(
                        lemma_a,
                        lemma_b,
                        connectors[0],
                        tags_a,
                        (tags_b[0], "appos"),
                        count=1,
                    )
                )
            data.append((PairPaths(pair=pair, paths=paths), kind))
    return data


def split_synthetic(
    data: list[tuple[PairPaths, LabelKind]], fraction: float, seed: int
) -> tuple[list[tuple[PairPaths, LabelKind]], list[tuple[PairPaths, LabelKind]]]:
    """Stratified split of synthetic examples via the dataset splitter."""
    dataset = CuratedDataset([pp.pair for pp, _ in data])
    _train, test = split_holdout(dataset, fraction, seed)
    test_keys = {p.key for p in test.pairs}
    train_part = [(pp, label) for pp, label in data if pp.pair.key not in test_keys]
    test_part = [(pp, label) for pp, label in data if pp.pair.key in test_keys]
    return train_part, test_part
