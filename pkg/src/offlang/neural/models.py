"""Classifier assembly: encoder + head producing per-class probabilities.

Three head kinds: a linear layer over the pooled classification-token
state, and bidirectional GRU/LSTM heads that consume the token-level
states (final forward state concatenated with final backward state).
Optionally the last four encoder hidden states are concatenated
feature-wise before the head, quadrupling its input width; encoders
shallower than four states repeat their earliest state so the width
contract stays fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.nn.utils.rnn import pack_padded_sequence

from ..errors import IncompatibleDims, OfflangError
from .encoders import EncoderSpec, build_encoder

HEAD_KINDS = ("linear", "bi_gru", "bi_lstm")


@dataclass(frozen=True)
class HeadSpec:
    kind: str = "linear"
    use_last4_concat: bool = False
    recurrent_hidden_dim: int = 64
    freeze_encoder: bool = False

    def __post_init__(self):
        if self.kind not in HEAD_KINDS:
            raise OfflangError(f"unknown head kind {self.kind!r}; expected one of {HEAD_KINDS}")
        if self.kind != "linear" and self.recurrent_hidden_dim < 1:
            raise IncompatibleDims("recurrent heads need recurrent_hidden_dim >= 1")


def _stack_last4(states: list[torch.Tensor]) -> torch.Tensor:
    picked = states[-4:]
    while len(picked) < 4:
        picked = [states[0]] + picked
    return torch.cat(picked, dim=-1)


class NeuralClassifier(nn.Module):
    """Encoder + head; forward returns per-class probability rows."""

    def __init__(self, encoder_spec: EncoderSpec, head_spec: HeadSpec, n_classes: int):
        super().__init__()
        if n_classes < 2:
            raise IncompatibleDims(f"classification needs >= 2 classes, got {n_classes}")
        self.encoder_spec = encoder_spec
        self.head_spec = head_spec
        self.n_classes = n_classes
        self.encoder = build_encoder(encoder_spec)
        width = self.encoder.hidden_size * (4 if head_spec.use_last4_concat else 1)
        self.head_input_width = width
        if head_spec.kind == "linear":
            self.recurrent = None
            self.classifier = nn.Linear(width, n_classes)
        else:
            rnn_cls = nn.GRU if head_spec.kind == "bi_gru" else nn.LSTM
            self.recurrent = rnn_cls(
                input_size=width,
                hidden_size=head_spec.recurrent_hidden_dim,
                batch_first=True,
                bidirectional=True,
            )
            self.classifier = nn.Linear(2 * head_spec.recurrent_hidden_dim, n_classes)
        if head_spec.freeze_encoder:
            for param in self.encoder.parameters():
                param.requires_grad = False

        # Bound during training; used by prediction and checkpointing.
        self.label_order: tuple[str, ...] | None = None
        self.task_name: str | None = None
        self.tokenizer = None
        self.max_sequence_length: int = encoder_spec.max_positions

    def features(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        states = self.encoder(input_ids, attention_mask)
        token_states = _stack_last4(states) if self.head_spec.use_last4_concat else states[-1]
        if self.head_spec.kind == "linear":
            return token_states[:, 0, :]  # classification-token pooling
        lengths = attention_mask.sum(dim=1).clamp(min=1).cpu()
        packed = pack_padded_sequence(
            token_states, lengths, batch_first=True, enforce_sorted=False
        )
        if self.head_spec.kind == "bi_gru":
            _, h_n = self.recurrent(packed)
        else:
            _, (h_n, _) = self.recurrent(packed)
        # h_n: (2, batch, hidden) = final forward state, final backward state
        return torch.cat([h_n[0], h_n[1]], dim=-1)

    def logits(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        return self.classifier(self.features(input_ids, attention_mask))

    def forward(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        return F.softmax(self.logits(input_ids, attention_mask), dim=-1)


def build_classifier(encoder_spec: EncoderSpec, head_spec: HeadSpec, n_classes: int) -> NeuralClassifier:
    """Compose an encoder and a head into a probability-producing classifier."""
    return NeuralClassifier(encoder_spec, head_spec, n_classes)
