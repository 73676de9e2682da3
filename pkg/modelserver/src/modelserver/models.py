"""Small transformer models, trained from scratch on CPU.

TextEncoder is the shared trunk (token + position embeddings, a few
TransformerEncoder layers). CrossEncoder puts a two-class head on the CLS
state; its positive-class probability is the served relevance score.
Seq2Seq adds a causal decoder over the same trunk for masked-span
reconstruction; its encoder is what /embed serves, mean-pooled by default.
"""

from __future__ import annotations

import torch
from torch import nn


class TextEncoder(nn.Module):
    def __init__(
        self,
        vocab_size: int,
        d_model: int = 64,
        nhead: int = 4,
        num_layers: int = 2,
        dim_feedforward: int = 128,
        max_len: int = 512,
        pad_id: int = 0,
    ):
        super().__init__()
        self.pad_id = pad_id
        self.token_embedding = nn.Embedding(vocab_size, d_model, padding_idx=pad_id)
        self.position_embedding = nn.Embedding(max_len, d_model)
        layer = nn.TransformerEncoderLayer(
            d_model=d_model,
            nhead=nhead,
            dim_feedforward=dim_feedforward,
            batch_first=True,
            dropout=0.1,
        )
        # The nested-tensor fast path makes identical rows of one batch come
        # out with different low bits; served outputs must not depend on
        # batch position.
        self.encoder = nn.TransformerEncoder(
            layer, num_layers=num_layers, enable_nested_tensor=False
        )

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.shape[1], device=ids.device).unsqueeze(0)
        x = self.token_embedding(ids) + self.position_embedding(positions)
        return self.encoder(x, src_key_padding_mask=ids == self.pad_id)

    def mean_pool(self, ids: torch.Tensor) -> torch.Tensor:
        states = self.forward(ids)
        mask = (ids != self.pad_id).unsqueeze(-1).float()
        summed = (states * mask).sum(dim=1)
        counts = mask.sum(dim=1).clamp(min=1.0)
        return summed / counts


class CrossEncoder(nn.Module):
    def __init__(self, vocab_size: int, pad_id: int, **encoder_kwargs):
        super().__init__()
        self.trunk = TextEncoder(vocab_size, pad_id=pad_id, **encoder_kwargs)
        d_model = self.trunk.token_embedding.embedding_dim
        self.head = nn.Linear(d_model, 2)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        states = self.trunk(ids)
        return self.head(states[:, 0, :])

    @torch.no_grad()
    def positive_probability(self, ids: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.forward(ids), dim=-1)[:, 1]


class Seq2Seq(nn.Module):
    def __init__(
        self,
        vocab_size: int,
        pad_id: int,
        d_model: int = 64,
        nhead: int = 4,
        num_layers: int = 2,
        dim_feedforward: int = 128,
        max_len: int = 512,
    ):
        super().__init__()
        self.trunk = TextEncoder(
            vocab_size,
            d_model=d_model,
            nhead=nhead,
            num_layers=num_layers,
            dim_feedforward=dim_feedforward,
            max_len=max_len,
            pad_id=pad_id,
        )
        self.pad_id = pad_id
        decoder_layer = nn.TransformerDecoderLayer(
            d_model=d_model,
            nhead=nhead,
            dim_feedforward=dim_feedforward,
            batch_first=True,
            dropout=0.1,
        )
        self.decoder = nn.TransformerDecoder(decoder_layer, num_layers=num_layers)
        self.output = nn.Linear(d_model, vocab_size)

    def forward(self, src_ids: torch.Tensor, tgt_ids: torch.Tensor) -> torch.Tensor:
        memory = self.trunk(src_ids)
        positions = torch.arange(tgt_ids.shape[1], device=tgt_ids.device).unsqueeze(0)
        tgt = self.trunk.token_embedding(tgt_ids) + self.trunk.position_embedding(positions)
        # Boolean causal mask, matching the boolean padding masks.
        causal = torch.triu(
            torch.ones(tgt_ids.shape[1], tgt_ids.shape[1], dtype=torch.bool), diagonal=1
        )
        decoded = self.decoder(
            tgt,
            memory,
            tgt_mask=causal,
            tgt_key_padding_mask=tgt_ids == self.pad_id,
            memory_key_padding_mask=src_ids == self.pad_id,
        )
        return self.output(decoded)
