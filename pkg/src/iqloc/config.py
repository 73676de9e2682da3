"""Run configuration: JSON file in, validated dataclass out, JSON back out.

The accepted shape is published in data/config.schema.json. Loading rejects
unknown keys so typos fail loudly, and to_json() round-trips every field so
run manifests can snapshot the effective configuration.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .index import ANALYZER_MODES
from .pipeline import PipelineConfig

ENV_BACKEND_URL = "IQLOC_BACKEND_URL"

_SECTION_KEYS = {
    "corpus": {"root", "manifest"},
    "index": {"k1", "b", "analyzer"},
    "pipeline": {"top_k_initial", "relevance_threshold", "scorer_backend", "embedding_backend"},
    "keywords": {"n", "lambda"},
    "reformulate": {"tau", "max_len", "cap_factor"},
    "backend": {"url", "timeout_s"},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    corpus_root: str = "."
    corpus_manifest: str = "corpus.json"
    k1: float = 1.2
    b: float = 0.75
    analyzer: str = "code"
    top_k_initial: int = 100
    relevance_threshold: float = 0.5
    scorer_backend: str = "lexical"
    embedding_backend: str = "hashed"
    keyword_n: int = 15
    mmr_lambda: float = 0.5
    tau: float = 0.5
    max_query_len: int = 15
    cap_factor: float = 1.5
    backend_url: str = "http://localhost:8901"
    backend_timeout_s: float = 30.0
    seed: int = 0

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(
            top_k_initial=self.top_k_initial,
            relevance_threshold=self.relevance_threshold,
            keyword_n=self.keyword_n,
            mmr_lambda=self.mmr_lambda,
            tau=self.tau,
            max_query_len=self.max_query_len,
            cap_factor=self.cap_factor,
            scorer_backend=self.scorer_backend,
            embedding_backend=self.embedding_backend,
            analyzer=self.analyzer,
        )

    def to_json(self) -> dict:
        return {
            "corpus": {"root": self.corpus_root, "manifest": self.corpus_manifest},
            "index": {"k1": self.k1, "b": self.b, "analyzer": self.analyzer},
            "pipeline": {
                "top_k_initial": self.top_k_initial,
                "relevance_threshold": self.relevance_threshold,
                "scorer_backend": self.scorer_backend,
                "embedding_backend": self.embedding_backend,
            },
            "keywords": {"n": self.keyword_n, "lambda": self.mmr_lambda},
            "reformulate": {
                "tau": self.tau,
                "max_len": self.max_query_len,
                "cap_factor": self.cap_factor,
            },
            "backend": {"url": self.backend_url, "timeout_s": self.backend_timeout_s},
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "RunConfig":
        unknown = set(raw) - set(_SECTION_KEYS) - {"seed"}
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        for section, allowed in _SECTION_KEYS.items():
            extra = set(raw.get(section, {})) - allowed
            if extra:
                raise ConfigError(f"unknown keys in config section {section!r}: {sorted(extra)}")

        def get(section: str, key: str, default):
            return raw.get(section, {}).get(key, default)

        defaults = cls()
        cfg = cls(
            corpus_root=str(get("corpus", "root", defaults.corpus_root)),
            corpus_manifest=str(get("corpus", "manifest", defaults.corpus_manifest)),
            k1=float(get("index", "k1", defaults.k1)),
            b=float(get("index", "b", defaults.b)),
            analyzer=str(get("index", "analyzer", defaults.analyzer)),
            top_k_initial=int(get("pipeline", "top_k_initial", defaults.top_k_initial)),
            relevance_threshold=float(
                get("pipeline", "relevance_threshold", defaults.relevance_threshold)
            ),
            scorer_backend=str(get("pipeline", "scorer_backend", defaults.scorer_backend)),
            embedding_backend=str(
                get("pipeline", "embedding_backend", defaults.embedding_backend)
            ),
            keyword_n=int(get("keywords", "n", defaults.keyword_n)),
            mmr_lambda=float(get("keywords", "lambda", defaults.mmr_lambda)),
            tau=float(get("reformulate", "tau", defaults.tau)),
            max_query_len=int(get("reformulate", "max_len", defaults.max_query_len)),
            cap_factor=float(get("reformulate", "cap_factor", defaults.cap_factor)),
            backend_url=str(get("backend", "url", defaults.backend_url)),
            backend_timeout_s=float(get("backend", "timeout_s", defaults.backend_timeout_s)),
            seed=int(raw.get("seed", defaults.seed)),
        )
        if cfg.analyzer not in ANALYZER_MODES:
            raise ConfigError(f"analyzer must be one of {ANALYZER_MODES}, got {cfg.analyzer!r}")
        if cfg.scorer_backend not in ("lexical", "remote"):
            raise ConfigError(f"unknown scorer backend {cfg.scorer_backend!r}")
        if cfg.embedding_backend not in ("hashed", "tfidf", "remote"):
            raise ConfigError(f"unknown embedding backend {cfg.embedding_backend!r}")
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_json(raw)

    def effective_backend_url(self) -> str:
        return os.environ.get(ENV_BACKEND_URL, self.backend_url)
