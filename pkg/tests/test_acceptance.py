"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s``. Paper-scale results are
reference targets only; these criteria rest on property suites, oracle
equivalence, and the deterministic end-to-end fixture.
"""

import itertools
import json
import math
import random
import sys
import time

import numpy as np
import pytest
import torch

from ontoenrich.dataset import CuratedDataset, TermPair, filter_none_pairs, load_dataset
from ontoenrich.embeddings import HashEmbeddingProvider
from ontoenrich.evaluation import EvalRun, compute_metrics, precision_at_k
from ontoenrich.labels import LabelKind
from ontoenrich.model import Hyperparams, classify_pair, init_model, train, TagVocabs
from ontoenrich.ontology import OntologyGraph, knockout
from ontoenrich.parsing import iter_preparsed
from ontoenrich.paths import (
    DependencyPath,
    PairPaths,
    extract_path,
    locate_term,
)
from ontoenrich.queue import ReviewQueue
from ontoenrich.synthetic import make_separable_dataset, split_synthetic

from conftest import make_random_graph
from gradcheck import max_relative_error
from treeutil import oracle_path, random_tree

import test_paths


def report(number, label, elapsed=None):
    timing = f" [{elapsed:.1f}s]" if elapsed is not None else ""
    print(f"[PASS] criterion {number}: {label}{timing}", file=sys.__stdout__, flush=True)


class IndexSimilarity:
    """Cheap deterministic term similarity for bulk synthetic pairs."""

    def similarity(self, a, b):
        return (hash((a, b)) % 10_000) / 10_000


def test_criterion_1_none_filter_arithmetic():
    started = time.monotonic()
    pairs = [
        TermPair(a=f"t{i}", b=f"u{i}", label=LabelKind.NONE, source="endpoint")
        for i in range(89_820)
    ]
    dataset = CuratedDataset(pairs)
    filtered = filter_none_pairs(dataset, 0.05, IndexSimilarity())
    elapsed = time.monotonic() - started
    # floor(0.05 * 89,820) = 4,491; the reference report lists 4,490 and an
    # off-by-one total, so 4,491 +/- 1 is asserted with 4,491 the exact value
    assert abs(len(filtered.pairs) - 4_491) <= 1
    assert len(filtered.pairs) == 4_491
    assert elapsed < 10
    report(1, f"89,820 NONE pairs at 0.05 -> {len(filtered.pairs)} retained", elapsed)


def test_criterion_2_path_extraction_oracle():
    started = time.monotonic()
    rng = random.Random(2024)
    trees = 0
    comparisons = 0
    while trees < 500:
        n = rng.randint(2, 12)
        tokens = random_tree(rng, n)
        trees += 1
        for x, y in itertools.permutations(range(n), 2):
            expected = oracle_path(tokens, x, y, max_path_len=8)
            actual = extract_path(tokens, x, y, max_path_len=8)
            if expected is None:
                assert actual is None
            else:
                assert actual is not None and actual.nodes == expected
            comparisons += 1
    elapsed = time.monotonic() - started
    assert elapsed < 30
    report(2, f"{trees} random trees, {comparisons} anchor pairs match the LCA oracle", elapsed)


def test_criterion_3_worked_example_reproduction():
    tokens = dict(iter_preparsed(test_paths.RTAS_FILE))["rtas:0"]
    anchor_x = locate_term(tokens, "Real-time adaptive security")
    anchor_y = locate_term(tokens, "model")
    path = extract_path(tokens, anchor_x, anchor_y, 8)
    serialized = [n.as_tuple() for n in path.nodes]
    assert serialized == [
        ("security", "PROPN", "nsubj", "+"),
        ("be", "VERB", "ROOT", "~"),
        ("model", "NOUN", "attr", "-"),
    ]
    report(3, "worked-example sentence serializes to the expected 4-tuples")


def test_criterion_4_gradient_check():
    started = time.monotonic()
    torch.set_num_threads(1)
    provider = HashEmbeddingProvider(12)
    vocabs = TagVocabs(pos=["NOUN", "VERB", "PROPN"], dep=["nsubj", "ROOT", "attr", "dobj"])
    h = Hyperparams(
        hidden_dim=8, ffn_input_dim=12, pos_dim=3, dep_dim=3, dir_dim=2, epochs=0
    )
    model = init_model(h, provider, vocabs)
    data = [
        (pp, label)
        for (pp, label) in make_separable_dataset(seed=1, pairs_per_class=1)
    ]
    worst = max_relative_error(model, data, samples_per_group=20, seed=4)
    elapsed = time.monotonic() - started
    assert worst < 1e-4
    assert elapsed < 60
    report(4, f"max relative gradient error {worst:.2e} over all parameter groups", elapsed)


def test_criterion_5_synthetic_overfit():
    started = time.monotonic()
    provider = HashEmbeddingProvider(64)
    data = make_separable_dataset(seed=0)
    train_part, test_part = split_synthetic(data, 0.2, seed=0)
    h = Hyperparams(hidden_dim=32, epochs=60)  # Table-scale defaults, scaled width
    model, train_report = train(train_part, h, provider)
    assert train_report.final_accuracy >= 0.95

    correct = sum(
        1
        for pp, label in test_part
        if classify_pair(pp.pair, pp, model).predicted is label
    )
    held_out_accuracy = correct / len(test_part)
    assert held_out_accuracy >= 0.80

    _, second_report = train(train_part, h, provider)
    assert second_report.epoch_losses == train_report.epoch_losses
    elapsed = time.monotonic() - started
    assert elapsed < 300
    report(
        5,
        f"train accuracy {train_report.final_accuracy:.2f}, held-out "
        f"{held_out_accuracy:.2f}, losses reproducible",
        elapsed,
    )


def test_criterion_6_multiset_invariance():
    provider = HashEmbeddingProvider(16)
    vocabs = TagVocabs(pos=["NOUN", "VERB", "PROPN"], dep=["nsubj", "ROOT", "attr", "dobj"])
    h = Hyperparams(hidden_dim=8, ffn_input_dim=12, pos_dim=3, dep_dim=3, dir_dim=2)
    model = init_model(h, provider, vocabs)
    data = make_separable_dataset(seed=3, pairs_per_class=2)
    rng = random.Random(6)
    checked = 0
    for pp, _ in data:
        if pp.is_null:
            continue
        base = classify_pair(pp.pair, pp, model)
        shuffled_paths = list(pp.paths)
        rng.shuffle(shuffled_paths)
        shuffled = PairPaths(pair=pp.pair, paths=shuffled_paths)
        split = PairPaths(
            pair=pp.pair,
            paths=[
                DependencyPath(nodes=p.nodes, count=1)
                for p in pp.paths
                for _ in range(p.count)
            ],
        )
        for variant in (shuffled, split):
            probs = classify_pair(pp.pair, variant, model)
            np.testing.assert_allclose(probs.log_probs, base.log_probs, atol=1e-9)
        checked += 1
    assert checked >= 5
    report(6, f"log-probs invariant under path shuffling and count splitting ({checked} pairs)")


def test_criterion_7_metrics_oracle():
    # same hand-built confusion as the unit oracle, asserted to 1e-9
    H, Y, I = LabelKind.HYPERNYM, LabelKind.HYPONYM, LabelKind.INSTANCE
    rows = (
        [(H, H)] * 3 + [(H, Y)] +
        [(Y, H)] + [(Y, Y)] * 2 + [(Y, I)] +
        [(I, I)] * 2
    )
    pairs = [
        TermPair(a=f"a{i}", b=f"b{i}", label=gold, source="endpoint")
        for i, (gold, _) in enumerate(rows)
    ]
    predictions = [
        (pair, predicted, 0.9) for pair, (_, predicted) in zip(pairs, rows)
    ]
    metrics = compute_metrics(
        EvalRun(kind="holdout", pairs=pairs, predictions=predictions)
    )
    precision = [3 / 4, 2 / 3, 2 / 3]
    recall = [3 / 4, 2 / 4, 2 / 2]
    f1 = [2 * p * r / (p + r) for p, r in zip(precision, recall)]
    assert math.isclose(metrics.accuracy, 7 / 10, abs_tol=1e-9)
    assert math.isclose(metrics.precision_macro, sum(precision) / 3, abs_tol=1e-9)
    assert math.isclose(metrics.recall_macro, sum(recall) / 3, abs_tol=1e-9)
    assert math.isclose(metrics.f1_macro, sum(f1) / 3, abs_tol=1e-9)

    p_at_5 = precision_at_k([[True, True, True, True, False]], [5])
    assert p_at_5[5] == 0.8
    report(7, "macro metrics match the spreadsheet oracle; P@5 = 0.8 exactly")


def test_criterion_8_end_to_end_fixture_pipeline(tmp_path):
    from e2efix import run_pipeline

    started = time.monotonic()
    first = run_pipeline(str(tmp_path / "run1"))

    queue = ReviewQueue(first["queue_dir"])
    pending = queue.pending()
    assert len(pending) >= 1
    assert all(e.triple.predicate is not LabelKind.NONE for e in pending)

    dataset = load_dataset(first["dataset"])
    counts = dataset.label_counts()
    assert all(counts[kind] > 0 for kind in LabelKind)

    with open(first["metrics"], encoding="utf-8") as fh:
        metrics = json.load(fh)
    assert 0.0 <= metrics["accuracy"] <= 1.0

    second = run_pipeline(str(tmp_path / "run2"))
    for artifact in ("dataset", "paths", "model", "triples", "metrics"):
        with open(first[artifact], encoding="utf-8") as fh_a, open(
            second[artifact], encoding="utf-8"
        ) as fh_b:
            # artifacts embed their run directory in provenance columns only
            content_a = fh_a.read().replace(str(tmp_path / "run1"), "BASE")
            content_b = fh_b.read().replace(str(tmp_path / "run2"), "BASE")
            assert content_a == content_b, f"{artifact} differs between runs"
    elapsed = time.monotonic() - started
    assert elapsed < 600
    report(
        8,
        f"pipeline reproducible end to end; {len(pending)} non-NONE candidate(s) queued, "
        f"holdout accuracy {metrics['accuracy']:.2f}",
        elapsed,
    )


def test_criterion_9_knockout_properties():
    rng = random.Random(9)
    for _ in range(200):
        graph = make_random_graph(
            rng, n_concepts=rng.randint(4, 24), n_relations=rng.randint(1, 40)
        )
        fraction = rng.random()
        seed = rng.randrange(10_000)
        result = knockout(graph, fraction, seed)
        held = set(result.held_out)
        kept = set(result.reduced.relations)
        assert held.isdisjoint(kept)
        assert held | kept == set(graph.relations)
        assert len(result.held_out) == int(fraction * len(graph.relations) + 0.5)
        rerun = knockout(graph, fraction, seed)
        assert rerun.held_out == result.held_out
        assert rerun.reduced.relations == result.reduced.relations
    report(9, "partition and determinism hold over 200 randomized graphs")
