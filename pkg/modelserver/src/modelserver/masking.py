"""Token masking with sequentially numbered sentinel placeholders.

Roughly 15% of each sequence's tokens (round-to-nearest, at least one) are
replaced in place by <extra_id_0>, <extra_id_1>, ... in positional order;
the reconstruction target interleaves each sentinel with the token it hid.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .tokenizer import sentinel


@dataclass(frozen=True)
class MaskingSpec:
    fraction: float = 0.15

    def __post_init__(self) -> None:
        if not 0.0 < self.fraction < 1.0:
            raise ValueError(f"mask fraction must be in (0, 1), got {self.fraction}")


def mask_sequence(
    tokens: list[str], spec: MaskingSpec, rng: random.Random
) -> tuple[list[str], list[str]]:
    """Return (masked input tokens, reconstruction target tokens)."""
    if not tokens:
        return [], []
    k = min(len(tokens), max(1, round(spec.fraction * len(tokens))))
    positions = sorted(rng.sample(range(len(tokens)), k))
    masked = list(tokens)
    target: list[str] = []
    for i, pos in enumerate(positions):
        target.append(sentinel(i))
        target.append(tokens[pos])
        masked[pos] = sentinel(i)
    return masked, target
