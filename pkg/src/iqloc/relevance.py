"""Report-to-method relevance scoring behind a pluggable backend contract.

A ScorerBackend maps (context, candidate) text pairs to scores in [0, 1].
Two backends ship here: a deterministic lexical one (token-set Jaccard pushed
through a logistic) that makes the whole pipeline testable offline, and an
HTTP client for a model-grade scoring service. Remote failures surface as
typed transport errors, never as low scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import requests

from .corpus import BugReport, MethodSpan
from .index import CODE, analyze
from .stopwords import STOPWORDS

DEFAULT_TOKEN_BUDGET = 512


class BackendError(RuntimeError):
    """A backend could not produce scores for a well-formed request."""


class BackendTransportError(BackendError):
    """The remote backend was unreachable or answered with garbage."""


@dataclass(frozen=True)
class ScoredMethod:
    path: str
    method: MethodSpan
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"method score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class RelevanceThreshold:
    value: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.value}")


class ScorerBackend:
    """Contract: deterministic batch scoring of (context, candidate) pairs.

    Batch scoring must equal element-wise scoring; implementations must be
    safe for concurrent calls.
    """

    name: str = "abstract"
    token_budget: int | None = None

    def score_pairs(self, pairs: list[tuple[str, str]]) -> list[float]:
        raise NotImplementedError


def _relevance_tokens(text: str) -> frozenset[str]:
    return frozenset(t.term for t in analyze(text, CODE)) - STOPWORDS


def lexical_backend_score(report_tokens: frozenset[str], method_tokens: frozenset[str]) -> float:
    """Jaccard similarity of token sets mapped through sigma(4 * (2J - 1)).

    J=1 -> ~0.982, J=0.5 -> 0.5, J=0 -> ~0.018; two empty sets score the
    uninformative 0.5.
    """
    union = report_tokens | method_tokens
    if not union:
        return 0.5
    j = len(report_tokens & method_tokens) / len(union)
    return 1.0 / (1.0 + math.exp(-4.0 * (2.0 * j - 1.0)))


class LexicalScorer(ScorerBackend):
    """Deterministic stand-in scorer: token overlap, no model required."""

    name = "lexical"
    token_budget = None

    def score_pairs(self, pairs: list[tuple[str, str]]) -> list[float]:
        return [
            lexical_backend_score(_relevance_tokens(ctx), _relevance_tokens(cand))
            for ctx, cand in pairs
        ]


class RemoteScorer(ScorerBackend):
    """Client for the model service's POST /score endpoint."""

    name = "remote"
    token_budget = DEFAULT_TOKEN_BUDGET

    def __init__(self, base_url: str, timeout_s: float = 30.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self._session = session or requests.Session()

    def score_pairs(self, pairs: list[tuple[str, str]]) -> list[float]:
        if not pairs:
            return []
        body = {"pairs": [{"context": c, "candidate": m} for c, m in pairs]}
        try:
            resp = self._session.post(
                f"{self.base_url}/score", json=body, timeout=self.timeout_s
            )
            resp.raise_for_status()
            scores = resp.json()["scores"]
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise BackendTransportError(f"/score request failed: {exc}") from exc
        if len(scores) != len(pairs):
            raise BackendTransportError(
                f"/score returned {len(scores)} scores for {len(pairs)} pairs"
            )
        out = [float(s) for s in scores]
        for s in out:
            if not 0.0 <= s <= 1.0:
                raise BackendTransportError(f"/score returned out-of-range score {s}")
        return out


def truncate_pair(context: str, candidate: str, token_budget: int | None) -> tuple[str, str]:
    """Fit a pair into the backend's token budget.

    The context (bug report) is kept whole; the candidate (method body) is
    cut from the tail to fill whatever budget remains. Tokens are counted as
    whitespace-separated words, a deliberate approximation of the model
    tokenizer on the other side of the wire.
    """
    if token_budget is None:
        return context, candidate
    ctx_tokens = context.split()
    remaining = max(0, token_budget - len(ctx_tokens))
    cand_tokens = candidate.split()
    if len(cand_tokens) <= remaining:
        return context, candidate
    return context, " ".join(cand_tokens[:remaining])


def score_pair(backend: ScorerBackend, report: BugReport, method: MethodSpan) -> float:
    """Score one (report, method) pair in [0, 1]."""
    context, candidate = truncate_pair(report.text, method.body, backend.token_budget)
    return backend.score_pairs([(context, candidate)])[0]


def score_methods(
    backend: ScorerBackend,
    report: BugReport,
    methods: list[tuple[str, MethodSpan]],
    batch_size: int = 32,
) -> list[ScoredMethod]:
    """Batch-score methods for a report, preserving input order."""
    pairs = [
        truncate_pair(report.text, method.body, backend.token_budget)
        for _path, method in methods
    ]
    scores: list[float] = []
    for start in range(0, len(pairs), batch_size):
        scores.extend(backend.score_pairs(pairs[start : start + batch_size]))
    return [
        ScoredMethod(path=path, method=method, score=score)
        for (path, method), score in zip(methods, scores)
    ]


def filter_relevant(
    scored: list[ScoredMethod], threshold: RelevanceThreshold | float
) -> list[ScoredMethod]:
    """Keep methods scoring at or above the threshold, in input order."""
    value = threshold.value if isinstance(threshold, RelevanceThreshold) else float(threshold)
    value = min(value, 1.0)
    return [sm for sm in scored if sm.score >= value]


def aggregate_document_score(scored: list[ScoredMethod]) -> float:
    """A document is as suspicious as its most suspicious method."""
    if not scored:
        return 0.0
    return max(sm.score for sm in scored)
