"""Training entry points: cross-encoder fine-tuning and masked pre-training.

Both consume the engine's file formats directly: pairs.jsonl rows carry
report_text / method_text / label; reports.jsonl rows carry title and
description. Validation metrics per epoch (accuracy, precision, recall, F1
from the confusion counts) land in training_log.jsonl inside the artifact
directory.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn

from .artifacts import KIND_CROSS_ENCODER, KIND_ENCODER_DECODER, save_artifact
from .masking import MaskingSpec, mask_sequence
from .models import CrossEncoder, Seq2Seq
from .tokenizer import WordTokenizer, words


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 12
    lr: float = 1e-3
    batch_size: int = 16
    val_fraction: float = 0.2
    seed: int = 0
    max_len: int = 512
    d_model: int = 64
    nhead: int = 4
    num_layers: int = 2
    dim_feedforward: int = 128

    def model_config(self, extra: dict | None = None) -> dict:
        base = {
            "d_model": self.d_model,
            "nhead": self.nhead,
            "num_layers": self.num_layers,
            "dim_feedforward": self.dim_feedforward,
            "max_len": self.max_len,
            "seed": self.seed,
        }
        if extra:
            base.update(extra)
        return base


def _seed_everything(seed: int) -> None:
    random.seed(seed)
    torch.manual_seed(seed)


def load_pairs_jsonl(path: str | Path) -> list[tuple[str, str, int]]:
    rows: list[tuple[str, str, int]] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        raw = json.loads(line)
        if "label" not in raw:
            raise ValueError(f"{path}:{lineno}: pair row is missing a label")
        rows.append(
            (str(raw.get("report_text", "")), str(raw.get("method_text", "")), int(raw["label"]))
        )
    return rows


def load_reports_jsonl(path: str | Path) -> list[str]:
    texts: list[str] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        texts.append(f"{raw.get('title', '')} {raw.get('description', '')}".strip())
    return texts


def _pad_batch(sequences: list[list[int]], pad_id: int) -> torch.Tensor:
    width = max(len(s) for s in sequences)
    return torch.tensor(
        [s + [pad_id] * (width - len(s)) for s in sequences], dtype=torch.long
    )


def _confusion(predictions: list[int], labels: list[int]) -> dict[str, float]:
    tp = sum(1 for p, l in zip(predictions, labels) if p == 1 and l == 1)
    tn = sum(1 for p, l in zip(predictions, labels) if p == 0 and l == 0)
    fp = sum(1 for p, l in zip(predictions, labels) if p == 1 and l == 0)
    fn = sum(1 for p, l in zip(predictions, labels) if p == 0 and l == 1)
    total = max(1, tp + tn + fp + fn)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "accuracy": (tp + tn) / total,
        "precision": precision,
        "recall": recall,
        "f1": f1,
    }


@dataclass
class FinetuneResult:
    out_dir: Path
    history: list[dict]
    val_scores: list[float]
    val_labels: list[int]

    @property
    def final_accuracy(self) -> float:
        return self.history[-1]["accuracy"]


def finetune_cross_encoder(
    pairs_path: str | Path, out_dir: str | Path, config: TrainConfig = TrainConfig()
) -> FinetuneResult:
    """Train the relevance classifier on pairs.jsonl; the positive-class
    probability is what the server returns as the score."""
    _seed_everything(config.seed)
    rows = load_pairs_jsonl(pairs_path)
    if not rows:
        raise ValueError(f"{pairs_path}: no training pairs")
    rng = random.Random(config.seed)
    rng.shuffle(rows)
    n_val = max(1, int(config.val_fraction * len(rows)))
    val_rows, train_rows = rows[:n_val], rows[n_val:]

    tokenizer = WordTokenizer.build([f"{c} {m}" for c, m, _ in rows])
    model = CrossEncoder(
        len(tokenizer),
        tokenizer.pad_id,
        d_model=config.d_model,
        nhead=config.nhead,
        num_layers=config.num_layers,
        dim_feedforward=config.dim_feedforward,
        max_len=config.max_len,
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    loss_fn = nn.CrossEntropyLoss()

    def encode(rows_subset):
        return [
            (tokenizer.encode_pair(c, m, config.max_len), label)
            for c, m, label in rows_subset
        ]

    train_data = encode(train_rows)
    val_data = encode(val_rows)

    history: list[dict] = []
    for epoch in range(config.epochs):
        model.train()
        rng.shuffle(train_data)
        epoch_loss = 0.0
        for start in range(0, len(train_data), config.batch_size):
            batch = train_data[start : start + config.batch_size]
            ids = _pad_batch([b[0] for b in batch], tokenizer.pad_id)
            labels = torch.tensor([b[1] for b in batch], dtype=torch.long)
            optimizer.zero_grad()
            loss = loss_fn(model(ids), labels)
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach())

        model.eval()
        scores: list[float] = []
        with torch.no_grad():
            for start in range(0, len(val_data), config.batch_size):
                batch = val_data[start : start + config.batch_size]
                ids = _pad_batch([b[0] for b in batch], tokenizer.pad_id)
                scores.extend(model.positive_probability(ids).tolist())
        val_labels = [b[1] for b in val_data]
        predictions = [1 if s >= 0.5 else 0 for s in scores]
        entry = {"epoch": epoch + 1, "train_loss": epoch_loss, **_confusion(predictions, val_labels)}
        history.append(entry)

    out = save_artifact(
        out_dir,
        KIND_CROSS_ENCODER,
        model,
        tokenizer,
        config.model_config({"pooling": "cls"}),
    )
    with (out / "training_log.jsonl").open("w", encoding="utf-8") as handle:
        for entry in history:
            handle.write(json.dumps(entry, sort_keys=True) + "\n")
    return FinetuneResult(out_dir=out, history=history, val_scores=scores, val_labels=val_labels)


def mask_pretrain(
    reports_path: str | Path,
    out_dir: str | Path,
    spec: MaskingSpec = MaskingSpec(),
    config: TrainConfig = TrainConfig(epochs=3),
) -> Path:
    """Masked-span pre-training of the encoder-decoder on bug report text."""
    _seed_everything(config.seed)
    texts = load_reports_jsonl(reports_path)
    if not texts:
        raise ValueError(f"{reports_path}: no reports to pre-train on")
    if len(texts) < 100:
        print(f"warning: only {len(texts)} reports; toy-scale pre-training")
    rng = random.Random(config.seed)

    tokenizer = WordTokenizer.build(texts)
    model = Seq2Seq(
        len(tokenizer),
        tokenizer.pad_id,
        d_model=config.d_model,
        nhead=config.nhead,
        num_layers=config.num_layers,
        dim_feedforward=config.dim_feedforward,
        max_len=config.max_len,
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    loss_fn = nn.CrossEntropyLoss(ignore_index=tokenizer.pad_id)

    examples: list[tuple[list[int], list[int]]] = []
    for text in texts:
        tokens = words(text)[: config.max_len - 2]
        if not tokens:
            continue
        masked, target = mask_sequence(tokens, spec, rng)
        src = tokenizer.token_ids(masked)[: config.max_len]
        # Decoder input starts at CLS; labels are the target shifted left.
        tgt = [tokenizer.cls_id] + tokenizer.token_ids(target)[: config.max_len - 2]
        labels = tgt[1:] + [tokenizer.sep_id]
        examples.append((src, (tgt, labels)))

    for _epoch in range(config.epochs):
        model.train()
        rng.shuffle(examples)
        for start in range(0, len(examples), config.batch_size):
            batch = examples[start : start + config.batch_size]
            src = _pad_batch([b[0] for b in batch], tokenizer.pad_id)
            tgt = _pad_batch([b[1][0] for b in batch], tokenizer.pad_id)
            labels = _pad_batch([b[1][1] for b in batch], tokenizer.pad_id)
            optimizer.zero_grad()
            logits = model(src, tgt)
            loss = loss_fn(logits.reshape(-1, logits.shape[-1]), labels.reshape(-1))
            loss.backward()
            optimizer.step()

    return save_artifact(
        out_dir,
        KIND_ENCODER_DECODER,
        model,
        tokenizer,
        config.model_config({"pooling": "mean", "mask_fraction": spec.fraction}),
    )
