"""A small transformer encoder for sentence-pair classification.

The tokenizer hashes lowercase alphanumeric tokens into a fixed bucket
vocabulary, so no pretrained vocabulary or downloaded weights are needed and
training runs offline on CPU. The two requirement texts are packed into one
sequence as [CLS] text_a [SEP] text_b and the [CLS] position feeds the
classification head.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import torch
from torch import nn

_TOKEN = re.compile(r"[a-z0-9]+")

CLS_ID = 0
SEP_ID = 1
PAD_ID = 2
_RESERVED = 3


@dataclass(frozen=True)
class EncoderConfig:
    vocab_buckets: int = 2048
    dim: int = 64
    heads: int = 2
    layers: int = 2
    feedforward: int = 128
    max_len: int = 64
    dropout: float = 0.0


def hash_token(token: str, buckets: int) -> int:
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    return _RESERVED + int.from_bytes(digest[:8], "big") % buckets


def encode_pair(text_a: str, text_b: str, config: EncoderConfig) -> list[int]:
    """Token ids for one packed pair, truncated to ``max_len``."""
    budget = (config.max_len - 2) // 2
    ids = [CLS_ID]
    for text in (text_a, text_b):
        tokens = _TOKEN.findall(text.lower())[:budget]
        ids.extend(hash_token(tok, config.vocab_buckets) for tok in tokens)
        if text is text_a:
            ids.append(SEP_ID)
    return ids[: config.max_len]


def batch_tensors(
    encoded: list[list[int]], device: torch.device
) -> tuple[torch.Tensor, torch.Tensor]:
    """Right-padded id matrix plus a padding mask (True where padded)."""
    width = max(len(ids) for ids in encoded)
    ids = torch.full((len(encoded), width), PAD_ID, dtype=torch.long)
    mask = torch.ones((len(encoded), width), dtype=torch.bool)
    for row, sequence in enumerate(encoded):
        ids[row, : len(sequence)] = torch.tensor(sequence, dtype=torch.long)
        mask[row, : len(sequence)] = False
    return ids.to(device), mask.to(device)


class PairClassifier(nn.Module):
    def __init__(self, config: EncoderConfig, num_classes: int):
        super().__init__()
        self.config = config
        vocab = _RESERVED + config.vocab_buckets
        self.token_embedding = nn.Embedding(vocab, config.dim, padding_idx=PAD_ID)
        self.position_embedding = nn.Embedding(config.max_len, config.dim)
        layer = nn.TransformerEncoderLayer(
            d_model=config.dim,
            nhead=config.heads,
            dim_feedforward=config.feedforward,
            dropout=config.dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(
            layer, num_layers=config.layers, enable_nested_tensor=False
        )
        self.head = nn.Linear(config.dim, num_classes)

    def forward(self, ids: torch.Tensor, padding_mask: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.shape[1], device=ids.device)
        hidden = self.token_embedding(ids) + self.position_embedding(positions)
        hidden = self.encoder(hidden, src_key_padding_mask=padding_mask)
        return self.head(hidden[:, 0, :])
