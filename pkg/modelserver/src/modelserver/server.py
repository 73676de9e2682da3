"""HTTP/JSON service exposing the trained models.

Wire protocol (shared with the engine's remote backends):
  POST /score  {"pairs": [{"context": str, "candidate": str}, ...]}
               -> {"scores": [float, ...]}            same order, in [0, 1]
  POST /embed  {"texts": [str, ...]}
               -> {"vectors": [[float, ...], ...]}    constant dimension
  GET  /health -> model identifiers and embedding dimension

Requests may arrive concurrently; inference is serialized behind a lock so
identical request bodies always produce identical responses regardless of
interleaving.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import torch

from .artifacts import KIND_CROSS_ENCODER, artifact_id, load_artifact
from .tokenizer import WordTokenizer


class ModelService:
    """Loads artifacts and answers score/embed requests deterministically."""

    def __init__(self, score_model_dir: str | Path, embed_model_dir: str | Path | None = None):
        kind, model, tokenizer, config = load_artifact(score_model_dir)
        if kind != KIND_CROSS_ENCODER:
            raise ValueError(f"{score_model_dir}: expected a cross-encoder artifact, got {kind}")
        self._score_model = model
        self._score_tokenizer = tokenizer
        self._score_max_len = config["max_len"]
        self.score_model_id = artifact_id(score_model_dir)

        embed_dir = embed_model_dir or score_model_dir
        _kind, embed_model, embed_tokenizer, embed_config = load_artifact(embed_dir)
        self._embed_trunk = embed_model.trunk
        self._embed_tokenizer: WordTokenizer = embed_tokenizer
        self._embed_max_len = embed_config["max_len"]
        self.embed_model_id = artifact_id(embed_dir)
        self.embedding_dimension = self._embed_trunk.token_embedding.embedding_dim

        self._lock = threading.Lock()

    def _pad(self, sequences: list[list[int]], pad_id: int) -> torch.Tensor:
        width = max(len(s) for s in sequences)
        return torch.tensor(
            [s + [pad_id] * (width - len(s)) for s in sequences], dtype=torch.long
        )

    def score(self, pairs: list[tuple[str, str]]) -> list[float]:
        if not pairs:
            return []
        tok = self._score_tokenizer
        encoded = [
            tok.encode_pair(context, candidate, self._score_max_len)
            for context, candidate in pairs
        ]
        with self._lock, torch.no_grad():
            probs = self._score_model.positive_probability(self._pad(encoded, tok.pad_id))
        return [min(1.0, max(0.0, float(p))) for p in probs]

    def embed(self, texts: list[str]) -> list[list[float]]:
        if not texts:
            return []
        tok = self._embed_tokenizer
        # One forward per unique text: duplicate texts must come back as
        # identical vectors, and batch padding/position must never leak
        # into the served floats.
        vectors: dict[str, list[float]] = {}
        with self._lock, torch.no_grad():
            for text in texts:
                if text in vectors:
                    continue
                ids = self._pad([tok.encode_text(text, self._embed_max_len)], tok.pad_id)
                pooled = self._embed_trunk.mean_pool(ids)[0]
                vectors[text] = [float(x) for x in pooled]
        return [vectors[text] for text in texts]

    def health(self) -> dict:
        return {
            "score_model": self.score_model_id,
            "embed_model": self.embed_model_id,
            "embedding_dimension": self.embedding_dimension,
        }


def _make_handler(service: ModelService):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # keep test output quiet
            pass

        def _reply(self, status: int, payload: dict) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            if self.path == "/health":
                self._reply(200, service.health())
            else:
                self._reply(404, {"error": f"unknown path {self.path}"})

        def do_POST(self):
            length = int(self.headers.get("Content-Length", "0"))
            try:
                payload = json.loads(self.rfile.read(length).decode("utf-8"))
            except json.JSONDecodeError as exc:
                self._reply(400, {"error": f"invalid JSON: {exc}"})
                return
            try:
                if self.path == "/score":
                    pairs = [
                        (str(p["context"]), str(p["candidate"])) for p in payload["pairs"]
                    ]
                    self._reply(200, {"scores": service.score(pairs)})
                elif self.path == "/embed":
                    texts = [str(t) for t in payload["texts"]]
                    self._reply(200, {"vectors": service.embed(texts)})
                else:
                    self._reply(404, {"error": f"unknown path {self.path}"})
            except (KeyError, TypeError) as exc:
                self._reply(400, {"error": f"malformed request: {exc}"})

    return Handler


def make_server(
    host: str,
    port: int,
    score_model_dir: str | Path,
    embed_model_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    service = ModelService(score_model_dir, embed_model_dir)
    return ThreadingHTTPServer((host, port), _make_handler(service))


def serve(
    host: str,
    port: int,
    score_model_dir: str | Path,
    embed_model_dir: str | Path | None = None,
) -> None:
    server = make_server(host, port, score_model_dir, embed_model_dir)
    print(f"serving on http://{host}:{server.server_address[1]}")
    server.serve_forever()
