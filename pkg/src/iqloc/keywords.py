"""MMR keyword extraction over a pluggable embedding backend.

Candidates are distinct preprocessed tokens of the input text. Selection is
greedy: each round scores every remaining candidate as

    mmr = lam * cos(token, document) - (1 - lam) * max cos(token, selected)

with no diversity penalty while nothing is selected yet, picks the argmax
(ties break to the lexicographically smallest term), and removes it from the
candidate pool. The same procedure runs on bug reports and on concatenated
relevant code segments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingBackend
from .index import CODE, analyze
from .relevance import ScoredMethod
from .stopwords import STOPWORDS


@dataclass(frozen=True)
class KeywordRequest:
    doc: str
    n: int = 15
    lam: float = 0.5

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"keyword count must be >= 1, got {self.n}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")


@dataclass(frozen=True)
class SelectedKeyword:
    term: str
    round: int
    doc_similarity: float
    selected_similarity: float
    mmr: float

    def to_json(self) -> dict:
        return {
            "term": self.term,
            "round": self.round,
            "s_d": self.doc_similarity,
            "s_k": self.selected_similarity,
            "mmr": self.mmr,
        }


@dataclass(frozen=True)
class KeywordSet:
    keywords: tuple[SelectedKeyword, ...]

    @property
    def terms(self) -> list[str]:
        return [kw.term for kw in self.keywords]

    def __len__(self) -> int:
        return len(self.keywords)

    def __bool__(self) -> bool:
        return bool(self.keywords)


EMPTY_KEYWORDS = KeywordSet(keywords=())


def preprocess(doc: str, mode: str = CODE) -> list[str]:
    """Analyzer tokens minus stop-words and pure numbers, deduplicated.

    First occurrence wins the ordering; candidates are token types, not
    occurrences.
    """
    seen: set[str] = set()
    out: list[str] = []
    for tok in analyze(doc, mode):
        term = tok.term
        if term in STOPWORDS or term.isdigit() or term in seen:
            continue
        seen.add(term)
        out.append(term)
    return out


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.dot(u, v)) / (nu * nv)


def extract_keywords(req: KeywordRequest, backend: EmbeddingBackend) -> KeywordSet:
    """Greedy MMR selection of up to req.n keywords from req.doc."""
    candidates = preprocess(req.doc)
    if not candidates:
        return EMPTY_KEYWORDS
    token_vectors = dict(zip(candidates, backend.embed_batch(candidates)))
    doc_vector = backend.embed(req.doc)

    selected: list[SelectedKeyword] = []
    selected_terms: list[str] = []
    pool = list(candidates)
    while len(selected) < req.n and pool:
        best: tuple[float, str] | None = None
        best_parts = (0.0, 0.0)
        for term in pool:
            s_d = cosine_similarity(token_vectors[term], doc_vector)
            if selected_terms:
                s_k = max(
                    cosine_similarity(token_vectors[term], token_vectors[k])
                    for k in selected_terms
                )
            else:
                s_k = 0.0
            mmr = req.lam * s_d - (1.0 - req.lam) * s_k
            if best is None or mmr > best[0] or (mmr == best[0] and term < best[1]):
                best = (mmr, term)
                best_parts = (s_d, s_k)
        assert best is not None
        mmr, term = best
        selected.append(
            SelectedKeyword(
                term=term,
                round=len(selected) + 1,
                doc_similarity=best_parts[0],
                selected_similarity=best_parts[1],
                mmr=mmr,
            )
        )
        selected_terms.append(term)
        pool.remove(term)
    return KeywordSet(keywords=tuple(selected))


def keywords_from_code(
    relevant: list[ScoredMethod], n: int, lam: float, backend: EmbeddingBackend
) -> KeywordSet:
    """Extract keywords from relevant method bodies, concatenated.

    Bodies join in (path, start_line) order so input ordering never leaks
    into the result; with no relevant methods the result is empty and the
    caller falls back to a report-only query.
    """
    if not relevant:
        return EMPTY_KEYWORDS
    ordered = sorted(relevant, key=lambda sm: (sm.path, sm.method.start_line))
    block = "\n".join(sm.method.body for sm in ordered)
    return extract_keywords(KeywordRequest(doc=block, n=n, lam=lam), backend)
