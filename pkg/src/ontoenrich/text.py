"""Small text utilities used across modules: label normalization, title
matching, tokenization and sentence splitting."""

from __future__ import annotations

import re

_WS_RE = re.compile(r"\s+")
_TOKEN_RE = re.compile(r"[a-z0-9]+(?:[-'][a-z0-9]+)*")
_SENT_BOUNDARY_RE = re.compile(r"(?<=[.!?])\s+|\n+")


def normalize_label(label: str) -> str:
    """Lowercase and collapse whitespace. Idempotent."""
    return _WS_RE.sub(" ", label.strip().lower())


def normalize_title(title: str) -> str:
    """Title matching form: underscores to spaces, then label normalization."""
    return normalize_label(title.replace("_", " "))


def slugify(text: str) -> str:
    """Filesystem-safe name for an article or model artifact."""
    slug = re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")
    return slug or "untitled"


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens; hyphenated compounds stay single tokens."""
    return _TOKEN_RE.findall(text.lower())


def split_sentences(text: str) -> list[str]:
    """Naive deterministic splitter on terminal punctuation and newlines.

    Dependency parsing happens elsewhere; this only has to produce stable
    sentence units for path extraction and provenance ids.
    """
    parts = [p.strip() for p in _SENT_BOUNDARY_RE.split(text)]
    return [p for p in parts if p]


def squash(text: str) -> str:
    """Whitespace-free lowercase form for sentence-identity lookups."""
    return _WS_RE.sub("", text.strip().lower())
