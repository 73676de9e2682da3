"""Word-level tokenizer with sentinel tokens for span corruption.

The vocabulary is built from the training texts; ordering is deterministic
(specials, then sentinels, then words by descending count and name) so a
rebuilt tokenizer is byte-identical. Pair encoding keeps the full context
and cuts the candidate from the tail, mirroring the engine's truncation
rule.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
NUM_SENTINELS = 100

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def sentinel(index: int) -> str:
    return f"<extra_id_{index}>"


def words(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


class WordTokenizer:
    def __init__(self, vocab: dict[str, int]):
        self.vocab = vocab
        self.pad_id = vocab[PAD]
        self.unk_id = vocab[UNK]
        self.cls_id = vocab[CLS]
        self.sep_id = vocab[SEP]
        self.id_to_token = {i: t for t, i in vocab.items()}

    def __len__(self) -> int:
        return len(self.vocab)

    @classmethod
    def build(cls, texts: list[str], max_words: int = 8192) -> "WordTokenizer":
        counts: dict[str, int] = {}
        for text in texts:
            for w in words(text):
                counts[w] = counts.get(w, 0) + 1
        ranked = sorted(counts, key=lambda w: (-counts[w], w))[:max_words]
        vocab: dict[str, int] = {}
        for token in (PAD, UNK, CLS, SEP):
            vocab[token] = len(vocab)
        for i in range(NUM_SENTINELS):
            vocab[sentinel(i)] = len(vocab)
        for w in ranked:
            vocab[w] = len(vocab)
        return cls(vocab)

    def token_ids(self, tokens: list[str]) -> list[int]:
        return [self.vocab.get(t, self.unk_id) for t in tokens]

    def encode_text(self, text: str, max_len: int) -> list[int]:
        ids = [self.cls_id] + self.token_ids(words(text))[: max_len - 2] + [self.sep_id]
        return ids

    def encode_pair(self, context: str, candidate: str, max_len: int) -> list[int]:
        ctx = self.token_ids(words(context))
        cand = self.token_ids(words(candidate))
        budget = max_len - 3 - len(ctx)  # [CLS] ctx [SEP] cand [SEP]
        if budget < 0:
            ctx = ctx[: max_len - 3]
            budget = 0
        return [self.cls_id] + ctx + [self.sep_id] + cand[:budget] + [self.sep_id]

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.vocab, indent=0, sort_keys=False) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "WordTokenizer":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))
