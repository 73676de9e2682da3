"""End-to-end localization: retrieve, score methods, filter, extract
keywords, reformulate, rerank.

The rerank stage re-scores only the initially retrieved documents with BM25
against the reformulated query; documents scoring zero under the new query
keep their relative initial order below all nonzero-scoring ones, so the
final list is always a permutation of the initial one. Apart from the timing
fields every output is a pure function of (report, index, corpus, config,
backends).
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .corpus import BugReport, MethodSpan, SourceDocument
from .embeddings import EmbeddingBackend
from .index import Index, RankedHit, RankedList, analyze
from .keywords import KeywordRequest, extract_keywords, keywords_from_code
from .reformulate import ReformulatedQuery, reformulate_query
from .relevance import (
    RelevanceThreshold,
    ScoredMethod,
    ScorerBackend,
    filter_relevant,
    truncate_pair,
)
from .stopwords import STOPWORDS


@dataclass(frozen=True)
class PipelineConfig:
    top_k_initial: int = 100
    relevance_threshold: float = 0.5
    keyword_n: int = 15
    mmr_lambda: float = 0.5
    tau: float = 0.5
    max_query_len: int = 15
    cap_factor: float = 1.5
    scorer_backend: str = "lexical"
    embedding_backend: str = "hashed"
    analyzer: str = "code"

    def to_json(self) -> dict:
        return {
            "top_k_initial": self.top_k_initial,
            "relevance_threshold": self.relevance_threshold,
            "keyword_n": self.keyword_n,
            "mmr_lambda": self.mmr_lambda,
            "tau": self.tau,
            "max_query_len": self.max_query_len,
            "cap_factor": self.cap_factor,
            "scorer_backend": self.scorer_backend,
            "embedding_backend": self.embedding_backend,
            "analyzer": self.analyzer,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "PipelineConfig":
        return cls(**{k: raw[k] for k in cls().to_json() if k in raw})


@dataclass
class LocalizationResult:
    report_id: str
    initial: RankedList
    final: RankedList
    method_scores: list[ScoredMethod] = field(default_factory=list)
    query: ReformulatedQuery | None = None
    timings_ms: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "report_id": self.report_id,
            "initial": self.initial.to_json(),
            "method_scores": [
                {
                    "path": sm.path,
                    "method": sm.method.name,
                    "start_line": sm.method.start_line,
                    "end_line": sm.method.end_line,
                    "score": sm.score,
                }
                for sm in self.method_scores
            ],
            "query": self.query.to_json() if self.query is not None else None,
            "final": self.final.to_json(),
            "timings_ms": self.timings_ms,
        }


class _StageClock:
    def __init__(self) -> None:
        self.timings_ms: dict[str, float] = {}

    def time(self, stage: str):
        clock = self

        class _Timer:
            def __enter__(self):
                self.start = time.perf_counter()

            def __exit__(self, *exc):
                clock.timings_ms[stage] = (time.perf_counter() - self.start) * 1000.0

        return _Timer()


def corpus_lookup(docs: list[SourceDocument]) -> dict[tuple[str, str, str], SourceDocument]:
    return {d.key: d for d in docs}


def report_query_terms(report: BugReport, analyzer: str) -> list[str]:
    """Initial query: analyzed report text with stop-words removed."""
    return [t.term for t in analyze(report.text, analyzer) if t.term not in STOPWORDS]


def _score_methods_threaded(
    scorer: ScorerBackend,
    report: BugReport,
    methods: list[tuple[str, MethodSpan]],
    threads: int,
    batch_size: int = 32,
) -> list[ScoredMethod]:
    pairs = [
        truncate_pair(report.text, method.body, scorer.token_budget)
        for _path, method in methods
    ]
    batches = [pairs[i : i + batch_size] for i in range(0, len(pairs), batch_size)]
    if threads > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(scorer.score_pairs, batches))
    else:
        results = [scorer.score_pairs(batch) for batch in batches]
    scores = [s for batch in results for s in batch]
    return [
        ScoredMethod(path=path, method=method, score=score)
        for (path, method), score in zip(methods, scores)
    ]


def localize(
    report: BugReport,
    index: Index,
    corpus: dict[tuple[str, str, str], SourceDocument],
    config: PipelineConfig,
    scorer: ScorerBackend,
    embedder: EmbeddingBackend,
    baseline: bool = False,
    threads: int = 1,
) -> LocalizationResult:
    """Run the full localization pipeline for one report.

    With baseline=True only retrieval runs and the final ranking equals the
    initial one. No initial hits is a valid empty result, not an error;
    scorer transport failures propagate and abort the run.
    """
    clock = _StageClock()
    with clock.time("retrieve"):
        query0 = report_query_terms(report, config.analyzer)
        initial = index.search(
            query0, report.project, report.version, config.top_k_initial, query_id=report.id
        )
    result = LocalizationResult(report_id=report.id, initial=initial, final=initial)
    result.timings_ms = clock.timings_ms
    if not initial.hits or baseline:
        return result

    with clock.time("score_methods"):
        methods: list[tuple[str, MethodSpan]] = []
        for hit in initial.hits:
            doc = corpus[(report.project, report.version, hit.path)]
            for method in doc.methods:
                methods.append((hit.path, method))
        scored = _score_methods_threaded(scorer, report, methods, threads)
    result.method_scores = scored

    with clock.time("filter"):
        relevant = filter_relevant(scored, RelevanceThreshold(config.relevance_threshold))

    with clock.time("keywords"):
        report_kw = extract_keywords(
            KeywordRequest(doc=report.text, n=config.keyword_n, lam=config.mmr_lambda),
            embedder,
        )
        code_kw = keywords_from_code(relevant, config.keyword_n, config.mmr_lambda, embedder)

    with clock.time("reformulate"):
        query = reformulate_query(
            report_kw,
            code_kw,
            embedder,
            tau=config.tau,
            max_len=config.max_query_len,
            cap_factor=config.cap_factor,
        )
    result.query = query

    with clock.time("rerank"):
        terms = query.term_strings
        rescored: list[tuple[float, str]] = []
        zeros: list[str] = []
        for hit in initial.hits:
            ordinal = index.ordinal_of(report.project, report.version, hit.path)
            score = index.score(terms, ordinal)
            if score > 0.0:
                rescored.append((score, hit.path))
            else:
                zeros.append(hit.path)
        rescored.sort(key=lambda item: (-item[0], item[1]))
        hits = [
            RankedHit(path=path, score=score, rank=rank)
            for rank, (score, path) in enumerate(rescored, start=1)
        ]
        hits += [
            RankedHit(path=path, score=0.0, rank=rank)
            for rank, path in enumerate(zeros, start=len(hits) + 1)
        ]
    result.final = RankedList(query_id=report.id, hits=tuple(hits))
    result.timings_ms = clock.timings_ms
    return result
