"""Evaluation harness: holdout/knockout/webpage runs, confusion-matrix
metrics with macro averaging, per-class accuracy, and P@k over documents."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dataset import CuratedDataset, TermPair
from .labels import NUM_CLASSES, LabelKind
from .ontology import OntologyGraph, knockout

logger = logging.getLogger(__name__)

#: ontology predicate token -> gold label for knockout pairs
_PREDICATE_LABELS = {
    "hypernym": LabelKind.HYPERNYM,
    "hyponym": LabelKind.HYPONYM,
    "instanceOf": LabelKind.INSTANCE,
    "conceptOf": LabelKind.CONCEPT,
}

Predictor = Callable[[TermPair], tuple[LabelKind, float]]


@dataclass
class EvalRun:
    kind: str                    # holdout | knockout | webpage
    pairs: list[TermPair]
    predictions: list[tuple[TermPair, LabelKind, float]]

    def __post_init__(self):
        if len(self.predictions) != len(self.pairs):
            raise ValueError("one prediction required per pair")


def run_predictions(kind: str, pairs: list[TermPair], predict: Predictor) -> EvalRun:
    predictions = []
    for pair in pairs:
        label, confidence = predict(pair)
        predictions.append((pair, label, confidence))
    return EvalRun(kind=kind, pairs=pairs, predictions=predictions)


@dataclass
class KnockoutEval:
    run: EvalRun
    reduced: OntologyGraph


def knockout_gold_pairs(
    graph: OntologyGraph,
    fraction: float,
    seed: int,
    dataset: Optional[CuratedDataset] = None,
) -> tuple[list[TermPair], OntologyGraph]:
    """Gold pairs from knocked-out relations plus the reduced seed.

    Relations whose predicate has no classification label (domain verbs)
    are skipped. Pairs already present in the training dataset are excluded
    to avoid leakage.
    """
    result = knockout(graph, fraction, seed)
    pairs = []
    for relation in result.held_out:
        label = _PREDICATE_LABELS.get(relation.predicate)
        if label is None:
            logger.warning(
                "held-out relation %s has no classification label; skipped",
                relation.predicate,
            )
            continue
        if dataset is not None and dataset.get(relation.subject, relation.object):
            continue
        try:
            pairs.append(
                TermPair(
                    a=relation.subject,
                    b=relation.object,
                    label=label,
                    source="knockout",
                )
            )
        except ValueError:
            continue
    if not pairs:
        raise ValueError(
            f"knockout fraction {fraction} produced no evaluation pairs"
        )
    return pairs, result.reduced


def make_knockout_eval(
    graph: OntologyGraph,
    fraction: float,
    seed: int,
    dataset: Optional[CuratedDataset] = None,
    predict: Optional[Predictor] = None,
) -> KnockoutEval:
    """Knockout evaluation run; concepts of the gold pairs leave the seed."""
    pairs, reduced = knockout_gold_pairs(graph, fraction, seed, dataset)
    if predict is None:
        predict = lambda pair: (LabelKind.NONE, 1.0)  # noqa: E731 - placeholder scorer
    run = run_predictions("knockout", pairs, predict)
    return KnockoutEval(run=run, reduced=reduced)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    accuracy: float


@dataclass
class Metrics:
    accuracy: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    per_class: dict[LabelKind, ClassMetrics]
    confusion: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision_macro": self.precision_macro,
            "recall_macro": self.recall_macro,
            "f1_macro": self.f1_macro,
            "per_class": {
                kind.name.lower(): vars(metrics)
                for kind, metrics in self.per_class.items()
            },
            "confusion": self.confusion.tolist(),
        }

    def to_table(self) -> str:
        lines = [
            f"{'metric':<12}{'value':>8}",
            f"{'accuracy':<12}{self.accuracy:>8.4f}",
            f"{'precision':<12}{self.precision_macro:>8.4f}",
            f"{'recall':<12}{self.recall_macro:>8.4f}",
            f"{'f1':<12}{self.f1_macro:>8.4f}",
            "",
            f"{'class':<10}{'prec':>8}{'rec':>8}{'f1':>8}{'acc':>8}",
        ]
        for kind, m in self.per_class.items():
            lines.append(
                f"{kind.name.lower():<10}{m.precision:>8.4f}{m.recall:>8.4f}"
                f"{m.f1:>8.4f}{m.accuracy:>8.4f}"
            )
        return "\n".join(lines)


def confusion_matrix(run: EvalRun) -> np.ndarray:
    """counts[gold, predicted] over the five classes."""
    counts = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=int)
    for pair, predicted, _confidence in run.predictions:
        counts[pair.label.code, predicted.code] += 1
    return counts


def compute_metrics(run: EvalRun) -> Metrics:
    """Macro-averaged over the classes present in gold; deterministic.

    Classes absent from gold are excluded from the macro averages and the
    per-class map rather than counted as zeros.
    """
    if not run.pairs:
        raise ValueError("cannot compute metrics for an empty run")
    confusion = confusion_matrix(run)
    total = int(confusion.sum())
    accuracy = float(np.trace(confusion)) / total

    per_class: dict[LabelKind, ClassMetrics] = {}
    for kind in LabelKind:
        gold = int(confusion[kind.code].sum())
        if gold == 0:
            continue
        predicted = int(confusion[:, kind.code].sum())
        correct = int(confusion[kind.code, kind.code])
        precision = correct / predicted if predicted else 0.0
        recall = correct / gold
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        per_class[kind] = ClassMetrics(
            precision=precision, recall=recall, f1=f1, accuracy=recall
        )

    values = list(per_class.values())
    return Metrics(
        accuracy=accuracy,
        precision_macro=float(np.mean([m.precision for m in values])),
        recall_macro=float(np.mean([m.recall for m in values])),
        f1_macro=float(np.mean([m.f1 for m in values])),
        per_class=per_class,
        confusion=confusion,
    )


def per_class_accuracy(run: EvalRun) -> dict[LabelKind, Optional[float]]:
    """correct-c / gold-c per class; classes with zero gold are undefined."""
    confusion = confusion_matrix(run)
    out: dict[LabelKind, Optional[float]] = {}
    for kind in LabelKind:
        gold = int(confusion[kind.code].sum())
        out[kind] = (
            int(confusion[kind.code, kind.code]) / gold if gold else None
        )
    return out


# ---------------------------------------------------------------------------
# Precision @ k
# ---------------------------------------------------------------------------


def precision_at_k(
    per_doc_ranked: list[list[bool]], ks: list[int]
) -> dict[int, float]:
    """Mean over documents of (correct in top k) / k.

    Each inner list holds gold-correctness flags ranked by confidence
    descending. Documents shorter than k use their full list with the
    denominator capped at the list length; empty documents are skipped.
    """
    if not per_doc_ranked:
        raise ValueError("no documents to score")
    docs = [flags for flags in per_doc_ranked if flags]
    if len(docs) < len(per_doc_ranked):
        logger.warning(
            "%d empty document(s) skipped in P@k", len(per_doc_ranked) - len(docs)
        )
    if not docs:
        raise ValueError("all documents are empty")
    scores: dict[int, float] = {}
    for k in ks:
        if k <= 0:
            raise ValueError(f"k must be positive, got {k}")
        per_doc = [sum(flags[:k]) / min(k, len(flags)) for flags in docs]
        scores[k] = float(np.mean(per_doc))
    return scores


def load_answer_file(path: str) -> list[bool]:
    """Per-document answer file: ``rank<TAB>correct(0|1)`` rows."""
    ranked: list[tuple[int, bool]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            rank, correct = stripped.split("\t")
            ranked.append((int(rank), correct == "1"))
    ranked.sort()
    return [flag for _, flag in ranked]


def save_metrics_json(metrics: Metrics, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(metrics.to_dict(), fh, indent=2, sort_keys=True)
