"""Relation label vocabulary shared by the dataset, model, and ontology store."""

from __future__ import annotations

from enum import Enum


class LabelKind(Enum):
    """The five relation classes. Integer codes are the model's class ids."""

    HYPERNYM = 0
    HYPONYM = 1
    INSTANCE = 2
    CONCEPT = 3
    NONE = 4

    @property
    def code(self) -> int:
        return self.value


#: label-file token <-> LabelKind
LABEL_TOKENS = {
    "hypernym": LabelKind.HYPERNYM,
    "hyponym": LabelKind.HYPONYM,
    "instance": LabelKind.INSTANCE,
    "concept": LabelKind.CONCEPT,
    "none": LabelKind.NONE,
}

#: ontology predicate token per non-NONE label
PREDICATE_TOKENS = {
    LabelKind.HYPERNYM: "hypernym",
    LabelKind.HYPONYM: "hyponym",
    LabelKind.INSTANCE: "instanceOf",
    LabelKind.CONCEPT: "conceptOf",
}

NUM_CLASSES = len(LabelKind)


def parse_label(token: str) -> LabelKind:
    """Map a label token to its LabelKind; raises KeyError on unknown tokens."""
    return LABEL_TOKENS[token.strip().lower()]


def label_token(kind: LabelKind) -> str:
    return kind.name.lower()
