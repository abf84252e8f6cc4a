"""Encoder construction: tiny random-init transformers and registry models.

Both encoder flavours expose the same forward contract: given padded id
and attention-mask tensors they return the full list of hidden states,
embedding output first, one entry per transformer layer after that.
Heads decide which states they consume.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from ..errors import IncompatibleDims, OfflangError, RegistryUnavailable
from .vocab import PAD_INDEX


@dataclass(frozen=True)
class EncoderSpec:
    source: str  # "pretrained_registry" | "random_init"
    identifier: str = ""
    num_layers: int = 2
    hidden_dim: int = 32
    vocab_size: int = 0
    max_positions: int = 128
    cased: bool = True

    def __post_init__(self):
        if self.source not in ("pretrained_registry", "random_init"):
            raise OfflangError(f"unknown encoder source {self.source!r}")
        if self.source == "pretrained_registry" and not self.identifier:
            raise OfflangError("pretrained_registry requires a model identifier")
        if self.source == "random_init":
            if self.num_layers < 1 or self.hidden_dim < 1:
                raise IncompatibleDims("random_init needs num_layers >= 1 and hidden_dim >= 1")
            if self.vocab_size < 4:
                raise IncompatibleDims("random_init needs vocab_size >= 4 (3 special tokens)")


def _attention_heads(hidden_dim: int) -> int:
    for heads in (8, 4, 2, 1):
        if hidden_dim % heads == 0:
            return heads
    return 1


class TinyTransformerEncoder(nn.Module):
    """Small trainable transformer stack for desk-scale runs."""

    def __init__(self, spec: EncoderSpec):
        super().__init__()
        self.spec = spec
        dim = spec.hidden_dim
        self.token_embedding = nn.Embedding(spec.vocab_size, dim, padding_idx=PAD_INDEX)
        self.position_embedding = nn.Embedding(spec.max_positions, dim)
        self.embedding_norm = nn.LayerNorm(dim)
        self.layers = nn.ModuleList(
            nn.TransformerEncoderLayer(
                d_model=dim,
                nhead=_attention_heads(dim),
                dim_feedforward=4 * dim,
                batch_first=True,
                dropout=0.1,
            )
            for _ in range(spec.num_layers)
        )
        self.hidden_size = dim

    def forward(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> list[torch.Tensor]:
        positions = torch.arange(input_ids.shape[1], device=input_ids.device)
        x = self.token_embedding(input_ids) + self.position_embedding(positions)[None, :, :]
        x = self.embedding_norm(x)
        states = [x]
        padding_mask = attention_mask == 0
        for layer in self.layers:
            x = layer(x, src_key_padding_mask=padding_mask)
            states.append(x)
        return states


class RegistryEncoder(nn.Module):
    """Adapter around a pretrained transformer fetched by identifier."""

    def __init__(self, spec: EncoderSpec):
        super().__init__()
        self.spec = spec
        try:
            from transformers import AutoModel
        except ImportError as exc:
            raise RegistryUnavailable(
                "the 'transformers' package is required for pretrained encoders; "
                "install the 'registry' extra"
            ) from exc
        try:
            self.model = AutoModel.from_pretrained(spec.identifier, output_hidden_states=True)
        except Exception as exc:
            raise RegistryUnavailable(
                f"cannot resolve encoder {spec.identifier!r} from the model registry: {exc}"
            ) from exc
        self.hidden_size = self.model.config.hidden_size

    def forward(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> list[torch.Tensor]:
        out = self.model(input_ids=input_ids, attention_mask=attention_mask)
        return list(out.hidden_states)


class RegistryTokenizer:
    """encode_batch-compatible wrapper for a registry tokenizer."""

    def __init__(self, identifier: str):
        try:
            from transformers import AutoTokenizer
        except ImportError as exc:
            raise RegistryUnavailable(
                "the 'transformers' package is required for pretrained encoders"
            ) from exc
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(identifier)
        except Exception as exc:
            raise RegistryUnavailable(
                f"cannot resolve tokenizer {identifier!r} from the model registry: {exc}"
            ) from exc

    def encode_batch(self, texts, max_len: int):
        enc = self.tokenizer(
            list(texts), truncation=True, max_length=max_len, padding=True, return_tensors="pt"
        )
        return enc["input_ids"], enc["attention_mask"]


def build_encoder(spec: EncoderSpec) -> nn.Module:
    if spec.source == "random_init":
        return TinyTransformerEncoder(spec)
    return RegistryEncoder(spec)
