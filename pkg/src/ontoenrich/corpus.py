"""Domain corpus construction: plain-text extraction from a wiki XML dump,
then a two-step filter that force-includes dataset-term articles and keeps
any other article scoring at or above the anchor-similarity threshold."""

from __future__ import annotations

import bz2
import gzip
import logging
import os
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .embeddings import DocSimilarityProvider
from .errors import CorpusError
from .text import normalize_title, slugify, tokenize

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.27


@dataclass
class ArticleDoc:
    title: str
    text: str
    tokens: int = 0

    def __post_init__(self):
        if not self.tokens:
            self.tokens = len(tokenize(self.text))


@dataclass
class ManifestEntry:
    reason: str                  # forced | scored
    score: Optional[float]       # None for forced entries


@dataclass
class Corpus:
    articles: list[ArticleDoc]
    anchor_title: str
    threshold: float
    manifest: dict[str, ManifestEntry] = field(default_factory=dict)

    def titles(self) -> list[str]:
        return [a.title for a in self.articles]


# ---------------------------------------------------------------------------
# Wiki markup stripping
# ---------------------------------------------------------------------------

_COMMENT_RE = re.compile(r"<!--.*?-->", re.DOTALL)
_REF_RE = re.compile(r"<ref[^>/]*/>|<ref[^>]*>.*?</ref>", re.DOTALL | re.IGNORECASE)
_TEMPLATE_RE = re.compile(r"\{\{[^{}]*\}\}", re.DOTALL)
_TABLE_RE = re.compile(r"\{\|[^{}|]*?\|\}|\{\|.*?\|\}", re.DOTALL)
_FILE_LINK_RE = re.compile(r"\[\[(?:File|Image|Category):[^\[\]]*\]\]", re.IGNORECASE)
_PIPED_LINK_RE = re.compile(r"\[\[[^\[\]|]*\|([^\[\]]*)\]\]")
_PLAIN_LINK_RE = re.compile(r"\[\[([^\[\]]*)\]\]")
_EXT_LINK_RE = re.compile(r"\[\w+://\S*\s+([^\]]*)\]|\[\w+://[^\]]*\]")
_HEADING_RE = re.compile(r"^=+\s*(.*?)\s*=+\s*$", re.MULTILINE)
_TAG_RE = re.compile(r"<[^>]+>")
_QUOTES_RE = re.compile(r"'{2,}")
_MULTISPACE_RE = re.compile(r"[ \t]+")
_MULTINEWLINE_RE = re.compile(r"\n{2,}")


def strip_markup(wikitext: str) -> str:
    """Reduce wiki markup to plain text; tables, templates, refs drop."""
    text = _COMMENT_RE.sub("", wikitext)
    text = _REF_RE.sub("", text)
    for pattern in (_TEMPLATE_RE, _TABLE_RE):
        previous = None
        while previous != text:  # peel nested constructs inside out
            previous = text
            text = pattern.sub("", text)
    text = _FILE_LINK_RE.sub("", text)
    text = _PIPED_LINK_RE.sub(r"\1", text)
    text = _PLAIN_LINK_RE.sub(r"\1", text)
    text = _EXT_LINK_RE.sub(lambda m: m.group(1) or "", text)
    text = _HEADING_RE.sub(r"\1", text)
    text = _TAG_RE.sub(" ", text)
    text = _QUOTES_RE.sub("", text)
    text = _MULTISPACE_RE.sub(" ", text)
    text = _MULTINEWLINE_RE.sub("\n", text)
    return text.strip()


def _open_dump(path: str):
    if path.endswith(".bz2"):
        return bz2.open(path, "rt", encoding="utf-8")
    if path.endswith(".gz"):
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, encoding="utf-8")


def _localname(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def extract_articles(dump_path: str) -> Iterator[ArticleDoc]:
    """Stream plain-text articles from a wiki XML dump, in dump order.

    Redirects and non-article namespaces are skipped. A truncated dump
    yields its complete articles and reports the truncation as a warning.
    """
    try:
        with _open_dump(dump_path) as fh:
            title = text = None
            ns = "0"
            redirect = False
            try:
                for event, elem in ET.iterparse(fh, events=("start", "end")):
                    name = _localname(elem.tag)
                    if event == "start":
                        if name == "page":
                            title = text = None
                            ns = "0"
                            redirect = False
                        continue
                    if name == "title":
                        title = elem.text or ""
                    elif name == "ns":
                        ns = (elem.text or "0").strip()
                    elif name == "redirect":
                        redirect = True
                    elif name == "text":
                        text = elem.text or ""
                    elif name == "page":
                        if (
                            title
                            and ns == "0"
                            and not redirect
                            and text is not None
                            and not text.lstrip().lower().startswith("#redirect")
                        ):
                            yield ArticleDoc(title=title, text=strip_markup(text))
                        elem.clear()
            except ET.ParseError as exc:
                logger.warning("truncated or malformed dump %s: %s", dump_path, exc)
    except OSError as exc:
        raise CorpusError(f"cannot read dump {dump_path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Similarity and corpus assembly
# ---------------------------------------------------------------------------


def doc_similarity(a: ArticleDoc, b: ArticleDoc, provider: DocSimilarityProvider) -> float:
    if not a.text.strip() or not b.text.strip():
        logger.warning("empty article text in similarity(%r, %r)", a.title, b.title)
        return 0.0
    return provider.similarity(a.text, b.text)


def build_corpus(
    dump_path: str,
    dataset_terms: Iterable[str],
    anchor_title: str,
    threshold: float,
    provider: DocSimilarityProvider,
) -> Corpus:
    """Two-step filter over the dump.

    Step 1 force-includes every article whose normalized title matches a
    dataset term or ontology concept. Step 2 scores the remaining articles
    against the anchor article and keeps those at or above the threshold.
    """
    term_set = {normalize_title(t) for t in dataset_terms}
    articles: list[ArticleDoc] = []
    seen_titles: set[str] = set()
    for article in extract_articles(dump_path):
        key = normalize_title(article.title)
        if key in seen_titles:
            logger.warning("duplicate article title %r skipped", article.title)
            continue
        seen_titles.add(key)
        articles.append(article)

    anchor_key = normalize_title(anchor_title)
    anchor = next(
        (a for a in articles if normalize_title(a.title) == anchor_key and a.text.strip()),
        None,
    )
    if anchor is None:
        raise CorpusError(f"anchor article {anchor_title!r} not found in dump")

    included: list[ArticleDoc] = []
    manifest: dict[str, ManifestEntry] = {}
    for article in articles:
        if not article.text.strip():
            continue
        if normalize_title(article.title) in term_set:
            included.append(article)
            manifest[article.title] = ManifestEntry(reason="forced", score=None)
            continue
        try:
            score = doc_similarity(anchor, article, provider)
        except Exception as exc:
            logger.warning("similarity failed for %r: %s; excluded", article.title, exc)
            continue
        if score >= threshold:
            included.append(article)
            manifest[article.title] = ManifestEntry(reason="scored", score=score)

    return Corpus(
        articles=included,
        anchor_title=anchor.title,
        threshold=threshold,
        manifest=manifest,
    )


# ---------------------------------------------------------------------------
# Persistence: one text file per article plus manifest.tsv
# ---------------------------------------------------------------------------

MANIFEST_NAME = "manifest.tsv"


def _article_filenames(titles: list[str]) -> dict[str, str]:
    """Deterministic slug filenames; collisions numbered in sorted order."""
    names: dict[str, str] = {}
    used: dict[str, int] = {}
    for title in sorted(titles):
        slug = slugify(title)
        count = used.get(slug, 0)
        used[slug] = count + 1
        names[title] = f"{slug}.txt" if count == 0 else f"{slug}-{count + 1}.txt"
    return names


def save_corpus(corpus: Corpus, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    filenames = _article_filenames(corpus.titles())
    for article in corpus.articles:
        with open(os.path.join(directory, filenames[article.title]), "w", encoding="utf-8") as fh:
            fh.write(article.text)
    with open(os.path.join(directory, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        fh.write(f"# anchor: {corpus.anchor_title}\n")
        fh.write(f"# threshold: {corpus.threshold!r}\n")
        for title in sorted(corpus.manifest):
            entry = corpus.manifest[title]
            score = "" if entry.score is None else repr(entry.score)
            fh.write(f"{title}\t{entry.reason}\t{score}\n")


def load_corpus(directory: str) -> Corpus:
    manifest_path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.exists(manifest_path):
        raise CorpusError(f"no {MANIFEST_NAME} in {directory}")
    anchor_title = ""
    threshold = DEFAULT_THRESHOLD
    manifest: dict[str, ManifestEntry] = {}
    with open(manifest_path, encoding="utf-8") as fh:
        for line in fh:
            stripped = line.rstrip("\n")
            if stripped.startswith("# anchor:"):
                anchor_title = stripped.split(":", 1)[1].strip()
                continue
            if stripped.startswith("# threshold:"):
                threshold = float(stripped.split(":", 1)[1].strip())
                continue
            if not stripped.strip() or stripped.startswith("#"):
                continue
            title, reason, score = stripped.split("\t")
            manifest[title] = ManifestEntry(
                reason=reason, score=float(score) if score else None
            )
    filenames = _article_filenames(sorted(manifest))
    articles = []
    for title in manifest:
        path = os.path.join(directory, filenames[title])
        with open(path, encoding="utf-8") as fh:
            articles.append(ArticleDoc(title=title, text=fh.read()))
    return Corpus(
        articles=articles,
        anchor_title=anchor_title,
        threshold=threshold,
        manifest=manifest,
    )
