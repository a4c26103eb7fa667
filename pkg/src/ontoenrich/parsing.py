"""Dependency-parse access: the parser adapter contract, a pre-parsed corpus
reader, and a POS-driven noun chunker.

Parsing itself stays external. Runs either go through a live adapter
(e.g. the spaCy wrapper below) or through pre-parsed token files in the
format: ``sentence_id<TAB>index<TAB>surface<TAB>lemma<TAB>pos<TAB>dep<TAB>head``
with a blank line between sentences.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Protocol, runtime_checkable

from .errors import ParserFailure
from .text import normalize_label, squash

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParsedToken:
    index: int
    surface: str
    lemma: str
    pos: str
    dep: str
    head: int                    # governor index; self for the root


def validate_tree(tokens: list[ParsedToken]) -> None:
    """Heads must form a single-rooted tree: one self-headed token, no cycles."""
    if not tokens:
        raise ParserFailure("empty token list")
    n = len(tokens)
    roots = [t for t in tokens if t.head == t.index]
    if len(roots) != 1:
        raise ParserFailure(f"expected exactly 1 root, found {len(roots)}")
    for token in tokens:
        if not 0 <= token.head < n:
            raise ParserFailure(f"head {token.head} out of range for token {token.index}")
        seen = set()
        current = token.index
        while tokens[current].head != current:
            if current in seen:
                raise ParserFailure(f"cycle through token {token.index}")
            seen.add(current)
            current = tokens[current].head


@runtime_checkable
class ParserAdapter(Protocol):
    def parse(self, text: str) -> list[ParsedToken]: ...


def parse_sentence(text: str, parser: ParserAdapter) -> list[ParsedToken]:
    """Adapter call plus the invariants every downstream stage assumes:
    a valid single-rooted tree and lowercase lemmas."""
    if not text.strip():
        raise ParserFailure("empty sentence")
    tokens = parser.parse(text)
    validate_tree(tokens)
    return [
        t if t.lemma == t.lemma.lower() else replace(t, lemma=t.lemma.lower())
        for t in tokens
    ]


# ---------------------------------------------------------------------------
# Pre-parsed corpus files
# ---------------------------------------------------------------------------


def iter_preparsed(path: str) -> Iterator[tuple[str, list[ParsedToken]]]:
    """Yield (sentence_id, tokens) groups from a pre-parsed token file."""

    def finish(sid, rows):
        if rows:
            yield sid, rows

    with open(path, encoding="utf-8") as fh:
        sentence_id = ""
        rows: list[ParsedToken] = []
        for line_no, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if not stripped.strip():
                yield from finish(sentence_id, rows)
                sentence_id, rows = "", []
                continue
            parts = stripped.split("\t")
            if len(parts) != 7:
                raise ParserFailure(f"{path}:{line_no}: expected 7 fields, got {len(parts)}")
            sid, index, surface, lemma, pos, dep, head = parts
            if rows and sid != sentence_id:
                yield from finish(sentence_id, rows)
                rows = []
            sentence_id = sid
            rows.append(
                ParsedToken(
                    index=int(index),
                    surface=surface,
                    lemma=lemma,
                    pos=pos,
                    dep=dep,
                    head=int(head),
                )
            )
        yield from finish(sentence_id, rows)


def write_preparsed(
    sentences: Iterable[tuple[str, list[ParsedToken]]], path: str
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sentence_id, tokens in sentences:
            for t in tokens:
                fh.write(
                    f"{sentence_id}\t{t.index}\t{t.surface}\t{t.lemma}\t{t.pos}\t{t.dep}\t{t.head}\n"
                )
            fh.write("\n")


class LookupParser:
    """Parser adapter backed by pre-parsed sentences.

    Sentences are keyed by their whitespace-squashed text, so the raw
    sentence as split from a document matches its tokenized form.
    """

    def __init__(self, sentences: Iterable[tuple[str, list[ParsedToken]]]):
        self._by_text: dict[str, list[ParsedToken]] = {}
        self.by_id: dict[str, list[ParsedToken]] = {}
        for sentence_id, tokens in sentences:
            key = squash(" ".join(t.surface for t in tokens))
            self._by_text.setdefault(key, tokens)
            self.by_id[sentence_id] = tokens

    @classmethod
    def from_file(cls, path: str) -> "LookupParser":
        return cls(iter_preparsed(path))

    def parse(self, text: str) -> list[ParsedToken]:
        tokens = self._by_text.get(squash(text))
        if tokens is None:
            raise ParserFailure(f"no pre-parsed entry for sentence: {text[:60]!r}")
        return tokens


class SpacyParserAdapter:
    """Live dependency parser behind the adapter contract (lazy import)."""

    def __init__(self, model: str = "en_core_web_sm"):
        try:
            import spacy
        except ImportError as exc:  # pragma: no cover - environment dependent
            raise ImportError("spacy is required for SpacyParserAdapter") from exc
        self._nlp = spacy.load(model)

    def parse(self, text: str) -> list[ParsedToken]:  # pragma: no cover - heavy model
        doc = self._nlp(text)
        return [
            ParsedToken(
                index=tok.i,
                surface=tok.text,
                lemma=tok.lemma_.lower(),
                pos=tok.pos_,
                dep=tok.dep_,
                head=tok.head.i,
            )
            for tok in doc
        ]


# ---------------------------------------------------------------------------
# Noun chunks
# ---------------------------------------------------------------------------

_CHUNK_POS = {"ADJ", "NOUN", "PROPN"}
_NOMINAL_POS = {"NOUN", "PROPN"}


def noun_chunks(tokens: list[ParsedToken]) -> list[str]:
    """Maximal (ADJ|NOUN|PROPN)+ spans containing a nominal, normalized."""
    chunks: list[str] = []
    span: list[ParsedToken] = []

    def flush():
        if span and any(t.pos in _NOMINAL_POS for t in span):
            chunks.append(normalize_label(" ".join(t.surface for t in span)))
        span.clear()

    for token in tokens:
        if token.pos in _CHUNK_POS:
            span.append(token)
        else:
            flush()
    flush()
    return chunks


def extract_chunks(sentences: Iterable[list[ParsedToken]]) -> list[str]:
    """Deduplicated noun chunks across sentences, first occurrence order."""
    seen: set[str] = set()
    out: list[str] = []
    for tokens in sentences:
        for chunk in noun_chunks(tokens):
            if chunk and chunk not in seen:
                seen.add(chunk)
                out.append(chunk)
    return out
