"""Console entry points: model-server, train-ce, pretrain-mlm."""

from __future__ import annotations

import argparse
import sys

from .masking import MaskingSpec
from .server import serve
from .training import TrainConfig, finetune_cross_encoder, mask_pretrain


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        lr=args.lr,
        batch_size=args.batch_size,
        seed=args.seed,
        max_len=args.max_len,
    )


def serve_entrypoint() -> None:
    parser = argparse.ArgumentParser(
        prog="model-server", description="serve /score and /embed over HTTP/JSON"
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8901)
    parser.add_argument("--score-model", required=True, help="cross-encoder artifact dir")
    parser.add_argument("--embed-model", help="embedding artifact dir (default: score model)")
    args = parser.parse_args()
    try:
        serve(args.host, args.port, args.score_model, args.embed_model)
    except (OSError, ValueError, RuntimeError, KeyError) as exc:
        print(f"refusing to start: {exc}", file=sys.stderr)
        sys.exit(1)


def train_ce_entrypoint() -> None:
    parser = argparse.ArgumentParser(
        prog="train-ce", description="fine-tune the relevance cross-encoder on pairs.jsonl"
    )
    parser.add_argument("--pairs", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--epochs", type=int, default=12)
    parser.add_argument("--lr", type=float, default=1e-3)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-len", type=int, default=512)
    args = parser.parse_args()
    try:
        result = finetune_cross_encoder(args.pairs, args.out, _train_config(args))
    except (OSError, ValueError) as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        sys.exit(1)
    final = result.history[-1]
    print(
        f"saved {result.out_dir}  "
        f"val accuracy {final['accuracy']:.3f}  f1 {final['f1']:.3f}"
    )


def pretrain_mlm_entrypoint() -> None:
    parser = argparse.ArgumentParser(
        prog="pretrain-mlm",
        description="masked-span pre-training of the embedding model on reports.jsonl",
    )
    parser.add_argument("--reports", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--mask-fraction", type=float, default=0.15)
    parser.add_argument("--epochs", type=int, default=3)
    parser.add_argument("--lr", type=float, default=1e-3)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-len", type=int, default=512)
    args = parser.parse_args()
    try:
        out = mask_pretrain(
            args.reports,
            args.out,
            MaskingSpec(fraction=args.mask_fraction),
            _train_config(args),
        )
    except (OSError, ValueError) as exc:
        print(f"pre-training aborted: {exc}", file=sys.stderr)
        sys.exit(1)
    print(f"saved {out}")
