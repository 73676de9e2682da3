"""Bug localization engine: BM25 retrieval, method-level relevance scoring,
MMR keyword extraction, and query reformulation, plus dataset construction
and evaluation tooling."""

__version__ = "0.1.0"
