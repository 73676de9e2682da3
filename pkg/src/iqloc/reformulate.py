"""Fuse report keywords and code keywords into the final search query.

The report keywords form the base query (selection order, truncated to
max_len). Code keywords that string-match a base term just tag it as shared;
the rest are appended, most-similar first, when their best cosine similarity
to any base term clears tau, capped so the query never exceeds
ceil(cap_factor * max_len) terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .embeddings import EmbeddingBackend
from .keywords import KeywordSet, cosine_similarity

PROVENANCE_REPORT = "report"
PROVENANCE_CODE = "code"
PROVENANCE_BOTH = "both"


@dataclass(frozen=True)
class QueryTerm:
    term: str
    provenance: str


@dataclass(frozen=True)
class ReformulatedQuery:
    terms: tuple[QueryTerm, ...]
    tau: float
    max_len: int

    @property
    def term_strings(self) -> list[str]:
        return [t.term for t in self.terms]

    def to_json(self) -> dict:
        return {
            "terms": [{"term": t.term, "provenance": t.provenance} for t in self.terms],
            "tau": self.tau,
            "max_len": self.max_len,
        }


def reformulate_query(
    report_kw: KeywordSet,
    code_kw: KeywordSet,
    backend: EmbeddingBackend,
    tau: float = 0.5,
    max_len: int = 15,
    cap_factor: float = 1.5,
) -> ReformulatedQuery:
    """Build the reformulated query from report and code keyword sets."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    if not report_kw:
        raise ValueError("report produced no keyword candidates; cannot reformulate")

    base_terms = report_kw.terms[:max_len]
    code_terms = code_kw.terms
    base_set = set(base_terms)

    provenance = {
        term: (PROVENANCE_BOTH if term in code_terms else PROVENANCE_REPORT)
        for term in base_terms
    }
    terms = [QueryTerm(term=t, provenance=provenance[t]) for t in base_terms]
    if not code_terms:
        return ReformulatedQuery(terms=tuple(terms), tau=tau, max_len=max_len)

    cap = math.ceil(cap_factor * max_len)
    remaining = [t for t in code_terms if t not in base_set]
    if remaining and len(terms) < cap:
        base_vectors = {t: backend.embed(t) for t in base_terms}
        scored: list[tuple[float, str]] = []
        for term in remaining:
            vec = backend.embed(term)
            sim = max(cosine_similarity(vec, base_vectors[b]) for b in base_terms)
            if sim >= tau:
                scored.append((sim, term))
        scored.sort(key=lambda item: (-item[0], item[1]))
        for _sim, term in scored:
            if len(terms) >= cap:
                break
            terms.append(QueryTerm(term=term, provenance=PROVENANCE_CODE))
    return ReformulatedQuery(terms=tuple(terms), tau=tau, max_len=max_len)
