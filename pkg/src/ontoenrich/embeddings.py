"""Distributional embedding and similarity providers.

The model and the filtering stages only depend on the provider contracts
here; the pretrained sentence encoder used in production runs is a thin
adapter behind the same interface.
"""

from __future__ import annotations

import hashlib
import logging
from collections import Counter
from typing import Protocol, runtime_checkable

import numpy as np

from .text import tokenize

logger = logging.getLogger(__name__)


@runtime_checkable
class EmbeddingProvider(Protocol):
    """text -> fixed-length vector; deterministic, defined for words,
    compound words, phrases and sentences."""

    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


class HashEmbeddingProvider:
    """Deterministic pseudo-random embeddings keyed by token hashes.

    Each token maps to a fixed unit vector seeded from its SHA-256 digest;
    a text embeds as the normalized mean of its token vectors. Texts that
    share tokens are similar, disjoint texts are near-orthogonal, and the
    mapping is stable across runs and platforms.
    """

    def __init__(self, dimension: int = 64):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            seed = int.from_bytes(digest[:8], "big")
            rng = np.random.default_rng(seed)
            vec = rng.standard_normal(self.dimension)
            vec /= np.linalg.norm(vec)
            self._token_cache[token] = vec
        return vec

    def embed(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            return np.zeros(self.dimension)
        mean = np.mean([self._token_vector(t) for t in tokens], axis=0)
        norm = np.linalg.norm(mean)
        return mean / norm if norm > 0 else mean


class FixedVectorProvider:
    """Explicit text -> vector mapping for tests with hand-computed cosines."""

    def __init__(self, vectors: dict[str, np.ndarray], dimension: int):
        self.dimension = dimension
        self._vectors = {k: np.asarray(v, dtype=float) for k, v in vectors.items()}

    def embed(self, text: str) -> np.ndarray:
        vec = self._vectors.get(text)
        if vec is None:
            return np.zeros(self.dimension)
        return vec


class SentenceEncoderProvider:
    """Adapter over a pretrained sentence encoder (lazy import).

    Only the lookup contract is used; encoder internals stay external.
    """

    def __init__(self, model_name: str = "all-MiniLM-L6-v2"):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:  # pragma: no cover - environment dependent
            raise ImportError(
                "sentence-transformers is required for SentenceEncoderProvider"
            ) from exc
        self._model = SentenceTransformer(model_name)
        self.dimension = int(self._model.get_sentence_embedding_dimension())
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:  # pragma: no cover - heavy model
        vec = self._cache.get(text)
        if vec is None:
            vec = np.asarray(self._model.encode([text])[0], dtype=float)
            self._cache[text] = vec
        return vec


# ---------------------------------------------------------------------------
# Term-pair similarity (used by the none-pair filter and the pair filters)
# ---------------------------------------------------------------------------


@runtime_checkable
class TermSimilarityProvider(Protocol):
    def similarity(self, a: str, b: str) -> float: ...


class EmbeddingSimilarity:
    """Cosine between the provider's embeddings of the two terms."""

    def __init__(self, provider: EmbeddingProvider):
        self.provider = provider
        self._cache: dict[str, np.ndarray] = {}

    def _embed(self, term: str) -> np.ndarray:
        vec = self._cache.get(term)
        if vec is None:
            vec = self.provider.embed(term)
            self._cache[term] = vec
        return vec

    def similarity(self, a: str, b: str) -> float:
        return cosine(self._embed(a), self._embed(b))


# ---------------------------------------------------------------------------
# Document-level similarity (corpus filter)
# ---------------------------------------------------------------------------


@runtime_checkable
class DocSimilarityProvider(Protocol):
    """Scores document pairs in [-1, 1]."""

    def similarity(self, text_a: str, text_b: str) -> float: ...


class BowCosineProvider:
    """Bag-of-words cosine; the deterministic reference document scorer."""

    def similarity(self, text_a: str, text_b: str) -> float:
        if not text_a.strip() or not text_b.strip():
            logger.warning("document similarity on empty text scored as 0")
            return 0.0
        counts_a = Counter(tokenize(text_a))
        counts_b = Counter(tokenize(text_b))
        dot = sum(counts_a[t] * counts_b[t] for t in counts_a.keys() & counts_b.keys())
        norm_a = sum(c * c for c in counts_a.values()) ** 0.5
        norm_b = sum(c * c for c in counts_b.values()) ** 0.5
        if norm_a == 0 or norm_b == 0:
            return 0.0
        return dot / (norm_a * norm_b)
