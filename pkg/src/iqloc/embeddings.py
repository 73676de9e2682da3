"""Embedding backends for keyword extraction and query reformulation.

Three tiers:
  * HashedEmbedding - deterministic random projection seeded by term bytes;
    dependency-free and oracle-friendly, used throughout the test suite.
  * TfidfCooccurrenceEmbedding - fit on a corpus; a term's vector mixes its
    own hashed signature with the signatures of terms it co-occurs with,
    weighted by TF-IDF. The default offline backend.
  * RemoteEmbedding - client for the model service's POST /embed endpoint.

Every backend has a fixed dimension, is deterministic, and never returns a
zero vector for non-empty text (degenerate sums get a tiny deterministic
epsilon component).
"""

from __future__ import annotations

import hashlib
import math
import re

import numpy as np
import requests

from .index import CODE, analyze
from .relevance import BackendTransportError
from .stopwords import STOPWORDS

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)
_EPSILON = 1e-8


class EmbeddingBackend:
    """Contract: text -> fixed-dimension real vector, deterministically."""

    name: str = "abstract"
    dimension: int = 0

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        return [self.embed(t) for t in texts]


def _never_zero(vec: np.ndarray) -> np.ndarray:
    if not np.any(vec):
        vec = vec.copy()
        vec[0] = _EPSILON
    return vec


def _seed_for(term: str) -> int:
    return int.from_bytes(hashlib.sha256(term.encode("utf-8")).digest()[:8], "big")


class HashedEmbedding(EmbeddingBackend):
    """Seeded random unit vector per token; texts embed as the token mean."""

    name = "hashed"

    def __init__(self, dimension: int = 16):
        self.dimension = dimension
        self._cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            rng = np.random.default_rng(_seed_for(token))
            vec = rng.standard_normal(self.dimension)
            vec /= np.linalg.norm(vec)
            self._cache[token] = vec
        return vec

    def embed(self, text: str) -> np.ndarray:
        tokens = _TOKEN_RE.findall(text.lower())
        # Stop words would dominate the mean of a prose document without
        # carrying any topical signal; drop them unless nothing else remains.
        content = [t for t in tokens if t not in STOPWORDS]
        tokens = content or tokens or ([text.lower()] if text else [""])
        mean = np.mean([self._token_vector(t) for t in tokens], axis=0)
        return _never_zero(mean)


class TfidfCooccurrenceEmbedding(EmbeddingBackend):
    """Corpus-fit backend: hashed signatures blended by TF-IDF co-occurrence.

    A term's vector is its own signature scaled by its IDF plus the IDF-scaled
    signatures of terms seen within a +-window of it, so terms sharing
    contexts land near each other. Texts embed as the TF-IDF-weighted sum of
    their term vectors.
    """

    name = "tfidf-cooc"

    def __init__(self, dimension: int = 64, window: int = 4):
        self.dimension = dimension
        self.window = window
        self._signatures = HashedEmbedding(dimension)
        self._idf: dict[str, float] = {}
        self._vectors: dict[str, np.ndarray] = {}
        self._fitted = False

    def fit(self, corpus_texts: list[str]) -> "TfidfCooccurrenceEmbedding":
        streams = [[t.term for t in analyze(text, CODE)] for text in corpus_texts]
        n = max(1, len(streams))
        df: dict[str, int] = {}
        for stream in streams:
            for term in set(stream):
                df[term] = df.get(term, 0) + 1
        self._idf = {
            term: math.log(1.0 + (n - d + 0.5) / (d + 0.5)) for term, d in df.items()
        }
        cooc: dict[str, dict[str, int]] = {}
        for stream in streams:
            for i, term in enumerate(stream):
                row = cooc.setdefault(term, {})
                for j in range(max(0, i - self.window), min(len(stream), i + self.window + 1)):
                    if j != i:
                        row[stream[j]] = row.get(stream[j], 0) + 1
        self._vectors = {}
        for term in sorted(df):
            vec = self._idf[term] * self._signatures._token_vector(term)
            for ctx, count in cooc.get(term, {}).items():
                vec = vec + count * self._idf[ctx] * self._signatures._token_vector(ctx)
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec = vec / norm
            self._vectors[term] = _never_zero(vec)
        self._fitted = True
        return self

    def _term_vector(self, term: str) -> np.ndarray:
        vec = self._vectors.get(term)
        if vec is None:
            vec = self._signatures._token_vector(term)
        return vec

    def embed(self, text: str) -> np.ndarray:
        if not self._fitted:
            raise RuntimeError("TfidfCooccurrenceEmbedding.fit() must run before embed()")
        terms = [t.term for t in analyze(text, CODE)]
        if not terms:
            return _never_zero(np.zeros(self.dimension))
        counts: dict[str, int] = {}
        for term in terms:
            counts[term] = counts.get(term, 0) + 1
        vec = np.zeros(self.dimension)
        for term, tf in counts.items():
            vec += tf * self._idf.get(term, 1.0) * self._term_vector(term)
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec = vec / norm
        return _never_zero(vec)


class RemoteEmbedding(EmbeddingBackend):
    """Client for the model service's POST /embed endpoint."""

    name = "remote"

    def __init__(self, base_url: str, timeout_s: float = 30.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self._session = session or requests.Session()
        self.dimension = 0  # discovered from the first response

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        if not texts:
            return []
        try:
            resp = self._session.post(
                f"{self.base_url}/embed", json={"texts": texts}, timeout=self.timeout_s
            )
            resp.raise_for_status()
            vectors = resp.json()["vectors"]
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise BackendTransportError(f"/embed request failed: {exc}") from exc
        if len(vectors) != len(texts):
            raise BackendTransportError(
                f"/embed returned {len(vectors)} vectors for {len(texts)} texts"
            )
        out = [np.asarray(v, dtype=float) for v in vectors]
        for vec in out:
            if self.dimension == 0:
                self.dimension = vec.shape[0]
            if vec.shape != (self.dimension,):
                raise BackendTransportError(
                    f"/embed dimension changed: {vec.shape[0]} != {self.dimension}"
                )
        return [_never_zero(v) for v in out]
