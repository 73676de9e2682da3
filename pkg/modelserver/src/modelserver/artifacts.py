"""Model artifact directories: config.json + vocab.json + weights.pt."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import torch

from .models import CrossEncoder, Seq2Seq
from .tokenizer import WordTokenizer

KIND_CROSS_ENCODER = "cross-encoder"
KIND_ENCODER_DECODER = "encoder-decoder"


def save_artifact(
    out_dir: str | Path,
    kind: str,
    model: torch.nn.Module,
    tokenizer: WordTokenizer,
    config: dict,
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(
        json.dumps({"kind": kind, **config}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    tokenizer.save(out_dir / "vocab.json")
    torch.save(model.state_dict(), out_dir / "weights.pt")
    return out_dir


def load_artifact(model_dir: str | Path):
    """Load (kind, model in eval mode, tokenizer, config) from a directory."""
    model_dir = Path(model_dir)
    config = json.loads((model_dir / "config.json").read_text(encoding="utf-8"))
    tokenizer = WordTokenizer.load(model_dir / "vocab.json")
    kind = config["kind"]
    kwargs = dict(
        d_model=config["d_model"],
        nhead=config["nhead"],
        num_layers=config["num_layers"],
        dim_feedforward=config["dim_feedforward"],
        max_len=config["max_len"],
    )
    if kind == KIND_CROSS_ENCODER:
        model = CrossEncoder(len(tokenizer), tokenizer.pad_id, **kwargs)
    elif kind == KIND_ENCODER_DECODER:
        model = Seq2Seq(len(tokenizer), tokenizer.pad_id, **kwargs)
    else:
        raise ValueError(f"unknown artifact kind {kind!r} in {model_dir}")
    model.load_state_dict(torch.load(model_dir / "weights.pt", weights_only=True))
    model.eval()
    return kind, model, tokenizer, config


def artifact_id(model_dir: str | Path) -> str:
    digest = hashlib.sha256((Path(model_dir) / "weights.pt").read_bytes()).hexdigest()
    return f"{Path(model_dir).name}:{digest[:12]}"
