"""LSTM classifier trained directly against soft target distributions.

Architecture: learned 128-dim embedding over a corpus-built vocabulary
(the composition of one-hot vectors with an embedding matrix), 1-D
spatial dropout that zeroes whole embedding channels across a sequence,
then an LSTM cell loop with variational input and recurrent dropout
(one mask per sequence, reused at every timestep), and a softmax over
the three target classes.  The loss is the soft cross-entropy against
the mean-score vector; the checkpoint kept is the epoch with the lowest
validation loss.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from ..corpus import Dataset, Task
from ..errors import EmptyDataset, OfflangError
from ..evaluate import batch_averaged
from .finetune import EpochStats, TrainingHistory, _batch_macro_f1, _batches
from .losses import soft_cross_entropy_from_logits
from .vocab import WhitespaceVocab


@dataclass(frozen=True)
class SoftLstmConfig:
    embedding_dim: int = 128
    hidden_dim: int = 128
    spatial_dropout: float = 0.2
    input_dropout: float = 0.2
    recurrent_dropout: float = 0.2
    split: float = 0.9
    max_epochs: int = 3
    max_sequence_length: int = 64
    batch_size: int = 32
    learning_rate: float = 1e-3
    max_vocab: int | None = None
    seed: int = 0

    def __post_init__(self):
        for name in ("spatial_dropout", "input_dropout", "recurrent_dropout"):
            rate = getattr(self, name)
            if not 0.0 <= rate < 1.0:
                raise OfflangError(f"{name} must be in [0,1), got {rate}")
        if not 0 < self.split < 1:
            raise OfflangError("split must be in (0,1)")


class VariationalLstm(nn.Module):
    """LSTM cell loop with per-sequence input and recurrent dropout masks."""

    def __init__(self, input_dim: int, hidden_dim: int, input_dropout: float, recurrent_dropout: float):
        super().__init__()
        self.cell = nn.LSTMCell(input_dim, hidden_dim)
        self.hidden_dim = hidden_dim
        self.input_dropout = input_dropout
        self.recurrent_dropout = recurrent_dropout

    def _mask(self, shape, rate, device):
        keep = 1.0 - rate
        return torch.bernoulli(torch.full(shape, keep, device=device)) / keep

    def forward(self, x: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        batch, steps, dim = x.shape
        h = x.new_zeros(batch, self.hidden_dim)
        c = x.new_zeros(batch, self.hidden_dim)
        if self.training and self.input_dropout > 0:
            input_mask = self._mask((batch, dim), self.input_dropout, x.device)
        else:
            input_mask = None
        if self.training and self.recurrent_dropout > 0:
            recurrent_mask = self._mask((batch, self.hidden_dim), self.recurrent_dropout, x.device)
        else:
            recurrent_mask = None

        final = x.new_zeros(batch, self.hidden_dim)
        for t in range(steps):
            step_in = x[:, t, :]
            if input_mask is not None:
                step_in = step_in * input_mask
            h_prev = h if recurrent_mask is None else h * recurrent_mask
            h, c = self.cell(step_in, (h_prev, c))
            # Record the hidden state at each sequence's last real token.
            at_end = lengths == (t + 1)
            if at_end.any():
                final[at_end] = h[at_end]
        return final


class SoftLabelLstm(nn.Module):
    def __init__(self, vocab_size: int, cfg: SoftLstmConfig, n_classes: int = 3):
        super().__init__()
        self.cfg = cfg
        self.embedding = nn.Embedding(vocab_size, cfg.embedding_dim, padding_idx=0)
        self.spatial_dropout = nn.Dropout1d(cfg.spatial_dropout)
        self.lstm = VariationalLstm(
            cfg.embedding_dim, cfg.hidden_dim, cfg.input_dropout, cfg.recurrent_dropout
        )
        self.classifier = nn.Linear(cfg.hidden_dim, n_classes)
        self.n_classes = n_classes

        self.label_order: tuple[str, ...] | None = None
        self.task_name: str | None = None
        self.tokenizer: WhitespaceVocab | None = None
        self.max_sequence_length = cfg.max_sequence_length

    def logits(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        x = self.embedding(input_ids)
        # Dropout1d expects (batch, channels, length): channels = embedding dims.
        x = self.spatial_dropout(x.transpose(1, 2)).transpose(1, 2)
        lengths = attention_mask.sum(dim=1).clamp(min=1)
        return self.classifier(self.lstm(x, lengths))

    def forward(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.logits(input_ids, attention_mask), dim=-1)


def train_soft_lstm(ds: Dataset, cfg: SoftLstmConfig) -> tuple[SoftLabelLstm, TrainingHistory]:
    """Train against 3-way soft targets; keep the lowest-val-loss epoch.

    Per-epoch history rows carry the soft-loss values plus batch-averaged
    F1/accuracy of argmax(target) vs argmax(predicted).
    """
    if len(ds) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    if ds.payload_kind != "soft_c":
        raise EmptyDataset(f"soft-label training needs 3-way soft scores, got {ds.payload_kind}")
    label_order = Task.C.labels

    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)

    texts = ds.texts()
    targets = np.array(
        [rec.payload.as_tuple() for rec in ds.records], dtype=np.float32
    )

    n = len(texts)
    order = rng.permutation(n)
    n_train = max(1, min(n - 1, int(round(n * cfg.split)))) if n > 1 else 1
    train_idx, val_idx = order[:n_train], order[n_train:]

    vocab = WhitespaceVocab.fit([texts[i] for i in train_idx], max_size=cfg.max_vocab)
    model = SoftLabelLstm(len(vocab), cfg)
    model.label_order = label_order
    model.task_name = Task.C.value
    model.tokenizer = vocab

    history = TrainingHistory()
    if cfg.max_epochs == 0:
        return model, history
    if len(val_idx) == 0:
        raise EmptyDataset("need at least 2 records for a train/validation split")

    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    target_tensor = torch.from_numpy(targets)

    def run_validation():
        model.eval()
        losses, f1s, accs = [], [], []
        with torch.no_grad():
            for batch in _batches(len(val_idx), cfg.batch_size):
                rows = [int(val_idx[i]) for i in batch]
                ids, mask = vocab.encode_batch([texts[r] for r in rows], cfg.max_sequence_length)
                logits = model.logits(ids, mask)
                p = target_tensor[rows]
                losses.append(float(soft_cross_entropy_from_logits(p, logits)))
                true_labels = [label_order[int(i)] for i in p.argmax(dim=-1)]
                pred_labels = [label_order[int(i)] for i in logits.argmax(dim=-1)]
                f1s.append(_batch_macro_f1(true_labels, pred_labels))
                accs.append(
                    sum(1 for t, q in zip(true_labels, pred_labels) if t == q) / len(rows)
                )
        return batch_averaged(losses), batch_averaged(f1s), batch_averaged(accs)

    best_state = None
    best_loss = float("inf")
    best_epoch = -1
    for epoch in range(1, cfg.max_epochs + 1):
        model.train()
        epoch_order = rng.permutation(len(train_idx))
        train_losses = []
        for batch in _batches(len(train_idx), cfg.batch_size, epoch_order):
            rows = [int(train_idx[i]) for i in batch]
            ids, mask = vocab.encode_batch([texts[r] for r in rows], cfg.max_sequence_length)
            optimizer.zero_grad()
            loss = soft_cross_entropy_from_logits(target_tensor[rows], model.logits(ids, mask))
            loss.backward()
            optimizer.step()
            train_losses.append(float(loss))

        val_loss, val_f1, val_acc = run_validation()
        history.append(EpochStats(epoch, batch_averaged(train_losses), val_loss, val_f1, val_acc))
        if val_loss < best_loss:
            best_loss = val_loss
            best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())

    model.load_state_dict(best_state)
    model.best_epoch = best_epoch
    return model, history
