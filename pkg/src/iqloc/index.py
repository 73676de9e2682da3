"""Immutable inverted index with Okapi BM25 scoring and scoped top-K search.

Two analyzer modes exist: "standard" is plain Unicode word segmentation with
lowercasing; "code" additionally splits camelCase / snake_case identifiers
into sub-tokens while keeping the original compound token, so that plain-text
matches remain a subset of code-mode matches. Identifier splitting is an
extension over stock search-engine analysis and is switch-off-able for
ablation.

BM25 uses the non-negative IDF form ln(1 + (N - df + 0.5) / (df + 0.5)) and
defaults k1=1.2, b=0.75.
"""

from __future__ import annotations

import json
import math
import re
import zlib
from dataclasses import dataclass
from pathlib import Path

STANDARD = "standard"
CODE = "code"
ANALYZER_MODES = (STANDARD, CODE)

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)
# camelCase boundaries: lower/digit->Upper, acronym->Word, letter<->digit.
_CAMEL_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+")

_MAGIC = b"IQLOCIDX"
_FORMAT_VERSION = 1


class IndexFormatError(ValueError):
    """Raised when an index file is corrupt or from an unknown format."""


@dataclass(frozen=True)
class AnalyzedToken:
    term: str
    position: int


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if self.k1 <= 0:
            raise ValueError(f"k1 must be positive, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


@dataclass(frozen=True)
class RankedHit:
    path: str
    score: float
    rank: int


@dataclass(frozen=True)
class RankedList:
    query_id: str
    hits: tuple[RankedHit, ...]

    @property
    def paths(self) -> list[str]:
        return [h.path for h in self.hits]

    def to_json(self) -> dict:
        return {
            "query_id": self.query_id,
            "hits": [{"path": h.path, "score": h.score, "rank": h.rank} for h in self.hits],
        }


def _split_identifier(token: str) -> list[str]:
    # Only ASCII identifiers carry camelCase/snake_case conventions.
    if not token.isascii():
        return []
    return [p.lower() for p in _CAMEL_RE.findall(token)]


def analyze(text: str, mode: str = CODE) -> list[AnalyzedToken]:
    """Tokenize text: lowercase Unicode words, plus identifier sub-tokens.

    In code mode a splittable identifier emits the lowercased compound first,
    then its parts ("FlowExecution" -> flowexecution, flow, execution).
    No stop-word removal happens here.
    """
    if mode not in ANALYZER_MODES:
        raise ValueError(f"unknown analyzer mode {mode!r}")
    out: list[AnalyzedToken] = []
    pos = 0
    for raw in _TOKEN_RE.findall(text):
        compound = raw.lower()
        if not any(c.isalnum() for c in compound):
            continue
        terms = [compound]
        if mode == CODE:
            parts = _split_identifier(raw)
            if parts and parts != [compound]:
                terms += parts
        for term in terms:
            out.append(AnalyzedToken(term=term, position=pos))
            pos += 1
    return out


class Index:
    """Inverted index over (project, version)-scoped documents.

    Immutable after construction; searching never mutates state, so one
    instance may serve concurrent callers.
    """

    def __init__(
        self,
        postings: dict[str, list[tuple[int, int]]],
        doc_lengths: list[int],
        doc_table: list[tuple[str, str, str]],
        params: Bm25Params,
        analyzer: str,
    ):
        self.postings = postings
        self.doc_lengths = doc_lengths
        self.doc_table = doc_table
        self.params = params
        self.analyzer = analyzer
        self.n_docs = len(doc_table)
        self.avg_doc_length = sum(doc_lengths) / len(doc_lengths)
        self._scopes: dict[tuple[str, str], list[int]] = {}
        for ordinal, (project, version, _path) in enumerate(doc_table):
            self._scopes.setdefault((project, version), []).append(ordinal)

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))

    def term_frequency(self, term: str, ordinal: int) -> int:
        for doc, tf in self.postings.get(term, ()):
            if doc == ordinal:
                return tf
        return 0

    def score(self, query_terms: list[str], ordinal: int) -> float:
        """Okapi BM25 score of one document for a bag of query terms."""
        if not 0 <= ordinal < self.n_docs:
            raise ValueError(f"doc ordinal {ordinal} out of range [0, {self.n_docs})")
        k1, b = self.params.k1, self.params.b
        norm = 1.0 - b + b * self.doc_lengths[ordinal] / self.avg_doc_length
        total = 0.0
        for term in query_terms:
            tf = self.term_frequency(term, ordinal)
            if tf == 0:
                continue
            total += self.idf(term) * tf * (k1 + 1.0) / (tf + k1 * norm)
        return total

    def search(
        self,
        query_terms: list[str],
        project: str,
        version: str,
        k: int,
        query_id: str = "",
    ) -> RankedList:
        """Top-k documents of one (project, version) scope by BM25 score.

        Zero-scoring documents are excluded; ties break by ascending path.
        An unknown scope yields an empty result, not an error.
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        candidates = self._scopes.get((project, version), ())
        scored: list[tuple[float, str, int]] = []
        for ordinal in candidates:
            s = self.score(query_terms, ordinal)
            if s > 0.0:
                scored.append((s, self.doc_table[ordinal][2], ordinal))
        scored.sort(key=lambda item: (-item[0], item[1]))
        hits = tuple(
            RankedHit(path=path, score=s, rank=rank)
            for rank, (s, path, _ordinal) in enumerate(scored[:k], start=1)
        )
        return RankedList(query_id=query_id, hits=hits)

    def ordinal_of(self, project: str, version: str, path: str) -> int | None:
        for ordinal in self._scopes.get((project, version), ()):
            if self.doc_table[ordinal][2] == path:
                return ordinal
        return None

    # -- serialization: single binary file, magic header + version byte ----

    def to_bytes(self) -> bytes:
        payload = {
            "analyzer": self.analyzer,
            "params": {"k1": self.params.k1, "b": self.params.b},
            "doc_table": [list(row) for row in self.doc_table],
            "doc_lengths": self.doc_lengths,
            "postings": {t: [list(p) for p in ps] for t, ps in self.postings.items()},
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return _MAGIC + bytes([_FORMAT_VERSION]) + zlib.compress(blob, 9)

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "Index":
        if data[: len(_MAGIC)] != _MAGIC:
            raise IndexFormatError("not an index file (bad magic header)")
        version = data[len(_MAGIC)]
        if version != _FORMAT_VERSION:
            raise IndexFormatError(f"unsupported index format version {version}")
        payload = json.loads(zlib.decompress(data[len(_MAGIC) + 1 :]).decode("utf-8"))
        return cls(
            postings={t: [(int(d), int(f)) for d, f in ps] for t, ps in payload["postings"].items()},
            doc_lengths=[int(n) for n in payload["doc_lengths"]],
            doc_table=[(str(p), str(v), str(f)) for p, v, f in payload["doc_table"]],
            params=Bm25Params(**payload["params"]),
            analyzer=payload["analyzer"],
        )

    @classmethod
    def load(cls, path: str | Path) -> "Index":
        return cls.from_bytes(Path(path).read_bytes())


def build_index(docs, params: Bm25Params = Bm25Params(), analyzer: str = CODE) -> Index:
    """Build an index over SourceDocuments; deterministic for sorted input."""
    docs = sorted(docs, key=lambda d: (d.project, d.version, d.path))
    if not docs:
        raise ValueError("cannot build an index over an empty document set")
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths: list[int] = []
    doc_table: list[tuple[str, str, str]] = []
    for ordinal, doc in enumerate(docs):
        tokens = analyze(doc.content, analyzer)
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok.term] = counts.get(tok.term, 0) + 1
        for term in sorted(counts):
            postings.setdefault(term, []).append((ordinal, counts[term]))
        doc_lengths.append(len(tokens))
        doc_table.append((doc.project, doc.version, doc.path))
    return Index(
        postings=postings,
        doc_lengths=doc_lengths,
        doc_table=doc_table,
        params=params,
        analyzer=analyzer,
    )


def score_bm25(index: Index, query_terms: list[str], ordinal: int) -> float:
    return index.score(query_terms, ordinal)


def search(
    index: Index, query_terms: list[str], project: str, version: str, k: int, query_id: str = ""
) -> RankedList:
    return index.search(query_terms, project, version, k, query_id)
