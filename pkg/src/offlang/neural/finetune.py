"""Fine-tuning loop with decoupled weight decay and early stopping.

The optimizer is AdamW with the weight-decay factor applied to every
parameter except biases and normalization-layer parameters, which form
a separate no-decay group.  Validation metrics recorded per epoch follow
the batch-averaged convention: the F1/accuracy of each validation batch
is computed separately and the epoch value is their mean.
"""

from __future__ import annotations

import copy
import csv
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..corpus import Dataset
from ..errors import EmptyDataset, IoFailure, OfflangError, TokenizerMismatch
from ..evaluate import batch_averaged
from ..labels import argmax_label
from .models import NeuralClassifier
from .vocab import WhitespaceVocab

_NORM_MODULES = (
    nn.LayerNorm,
    nn.BatchNorm1d,
    nn.BatchNorm2d,
    nn.BatchNorm3d,
    nn.GroupNorm,
    nn.InstanceNorm1d,
    nn.InstanceNorm2d,
    nn.InstanceNorm3d,
)


@dataclass(frozen=True)
class FinetuneConfig:
    learning_rate: float = 2e-5
    weight_decay: float = 0.01
    max_sequence_length: int = 64
    batch_size: int = 32
    max_epochs: int = 4
    early_stopping: bool = True
    patience: int = 2
    train_val_split: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise OfflangError("learning_rate must be > 0")
        if self.max_sequence_length < 2:
            raise OfflangError("max_sequence_length must be >= 2 (room for special tokens)")
        if not 0 < self.train_val_split < 1:
            raise OfflangError("train_val_split must be in (0,1)")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    val_f1_batchavg: float
    val_acc_batchavg: float


@dataclass
class TrainingHistory:
    epochs: list[EpochStats] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.epochs)

    def append(self, stats: EpochStats) -> None:
        self.epochs.append(stats)

    def to_csv(self, path) -> None:
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(
                    ["epoch", "train_loss", "val_loss", "val_f1_batchavg", "val_acc_batchavg"]
                )
                for e in self.epochs:
                    writer.writerow(
                        [e.epoch, repr(e.train_loss), repr(e.val_loss),
                         repr(e.val_f1_batchavg), repr(e.val_acc_batchavg)]
                    )
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc

    @classmethod
    def from_csv(cls, path) -> "TrainingHistory":
        history = cls()
        try:
            with open(path, encoding="utf-8", newline="") as fh:
                rows = list(csv.reader(fh))
        except OSError as exc:
            raise IoFailure(f"cannot read {path}: {exc}") from exc
        for row in rows[1:]:
            if not row:
                continue
            history.append(
                EpochStats(int(row[0]), float(row[1]), float(row[2]), float(row[3]), float(row[4]))
            )
        return history


def decay_parameter_split(model: nn.Module) -> tuple[list[str], list[str]]:
    """Names of (decayed, non-decayed) trainable parameters.

    Non-decayed: every parameter named ``*.bias`` plus all parameters of
    normalization modules.
    """
    norm_param_names = set()
    for module_name, module in model.named_modules():
        if isinstance(module, _NORM_MODULES):
            for param_name, _ in module.named_parameters(recurse=False):
                norm_param_names.add(f"{module_name}.{param_name}" if module_name else param_name)
    decay, no_decay = [], []
    for name, param in model.named_parameters():
        if not param.requires_grad:
            continue
        if name.endswith(".bias") or name == "bias" or name in norm_param_names:
            no_decay.append(name)
        else:
            decay.append(name)
    return decay, no_decay


def build_optimizer(model: nn.Module, cfg: FinetuneConfig) -> torch.optim.AdamW:
    decay_names, no_decay_names = decay_parameter_split(model)
    params = dict(model.named_parameters())
    groups = [
        {"params": [params[n] for n in decay_names], "weight_decay": cfg.weight_decay},
        {"params": [params[n] for n in no_decay_names], "weight_decay": 0.0},
    ]
    return torch.optim.AdamW(groups, lr=cfg.learning_rate)


def _batch_macro_f1(y_true: list[str], y_pred: list[str]) -> float:
    # Per-batch convention: labels observed in the batch (truth or
    # prediction) define the averaging set, as mainstream metric
    # libraries do when no label list is given.
    from ..evaluate import macro_f1

    observed = sorted(set(y_true) | set(y_pred))
    return macro_f1(y_true, y_pred, observed)


def _batches(n: int, batch_size: int, order=None):
    idx = list(range(n)) if order is None else list(order)
    for start in range(0, n, batch_size):
        yield idx[start : start + batch_size]


def _ensure_tokenizer(model: NeuralClassifier, train_texts: list[str]) -> None:
    if model.tokenizer is not None:
        return
    if model.encoder_spec.source == "random_init":
        model.tokenizer = WhitespaceVocab.fit(train_texts, max_size=model.encoder_spec.vocab_size)
    else:
        from .encoders import RegistryTokenizer

        model.tokenizer = RegistryTokenizer(model.encoder_spec.identifier)


def _validate(model, val_texts, val_labels, label_order, cfg):
    model.eval()
    losses, f1s, accs = [], [], []
    with torch.no_grad():
        for batch in _batches(len(val_texts), cfg.batch_size):
            texts = [val_texts[i] for i in batch]
            labels = [val_labels[i] for i in batch]
            ids, mask = model.tokenizer.encode_batch(texts, cfg.max_sequence_length)
            logits = model.logits(ids, mask)
            targets = torch.tensor([label_order.index(l) for l in labels], dtype=torch.long)
            losses.append(float(F.cross_entropy(logits, targets)))
            pred = [label_order[int(i)] for i in logits.argmax(dim=-1)]
            f1s.append(_batch_macro_f1(labels, pred))
            accs.append(sum(1 for t, p in zip(labels, pred) if t == p) / len(labels))
    return batch_averaged(losses), batch_averaged(f1s), batch_averaged(accs)


def finetune(
    model: NeuralClassifier, ds: Dataset, cfg: FinetuneConfig
) -> tuple[NeuralClassifier, TrainingHistory]:
    """Train a classifier on a hard-labeled dataset with a seeded split.

    Padding/truncation to ``max_sequence_length`` includes the special
    tokens.  With early stopping enabled, training halts once validation
    F1 has not improved for ``patience`` epochs and the weights of the
    best-F1 epoch are restored; otherwise the final epoch's weights are
    kept.  ``max_epochs == 0`` returns the untouched model with an empty
    history.
    """
    if len(ds) == 0:
        raise EmptyDataset("cannot fine-tune on an empty dataset")
    if len(ds) < 2 and cfg.max_epochs > 0:
        raise EmptyDataset("need at least 2 records for a train/validation split")
    label_order = ds.task.labels
    if len(label_order) != model.n_classes:
        raise TokenizerMismatch(
            f"model has {model.n_classes} classes but task {ds.task.value} "
            f"has {len(label_order)} labels"
        )
    model.label_order = label_order
    model.task_name = ds.task.value
    model.max_sequence_length = cfg.max_sequence_length

    history = TrainingHistory()
    if cfg.max_epochs == 0:
        return model, history

    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    texts = ds.texts()
    labels = ds.label_values()
    order = rng.permutation(len(texts))
    n_train = max(1, min(len(texts) - 1, int(round(len(texts) * cfg.train_val_split))))
    train_idx, val_idx = order[:n_train], order[n_train:]
    train_texts = [texts[i] for i in train_idx]
    train_labels = [labels[i] for i in train_idx]
    val_texts = [texts[i] for i in val_idx]
    val_labels = [labels[i] for i in val_idx]

    _ensure_tokenizer(model, train_texts)
    optimizer = build_optimizer(model, cfg)

    best_state = None
    best_f1 = -1.0
    best_epoch = -1
    epochs_since_best = 0

    for epoch in range(1, cfg.max_epochs + 1):
        model.train()
        epoch_order = rng.permutation(len(train_texts))
        train_losses = []
        for batch in _batches(len(train_texts), cfg.batch_size, epoch_order):
            batch_texts = [train_texts[i] for i in batch]
            batch_labels = [train_labels[i] for i in batch]
            ids, mask = model.tokenizer.encode_batch(batch_texts, cfg.max_sequence_length)
            targets = torch.tensor(
                [label_order.index(l) for l in batch_labels], dtype=torch.long
            )
            optimizer.zero_grad()
            loss = F.cross_entropy(model.logits(ids, mask), targets)
            loss.backward()
            optimizer.step()
            train_losses.append(float(loss))

        val_loss, val_f1, val_acc = _validate(model, val_texts, val_labels, label_order, cfg)
        history.append(EpochStats(epoch, batch_averaged(train_losses), val_loss, val_f1, val_acc))

        if val_f1 > best_f1:
            best_f1 = val_f1
            best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())
            epochs_since_best = 0
        else:
            epochs_since_best += 1
        if cfg.early_stopping and epochs_since_best >= cfg.patience:
            break

    if cfg.early_stopping and best_state is not None:
        model.load_state_dict(best_state)
        model.best_epoch = best_epoch
    return model, history


def finetune_sequential(
    model: NeuralClassifier, chunks, cfg: FinetuneConfig
) -> tuple[NeuralClassifier, TrainingHistory]:
    """Fine-tune over a sequence of dataset chunks, carrying weights over.

    For corpora too large to train in one go: each chunk is trained in
    turn starting from the weights the previous chunk produced.
    Histories are concatenated with continuing epoch numbers.
    """
    combined = TrainingHistory()
    for chunk in chunks:
        offset = len(combined.epochs)
        model, history = finetune(model, chunk, cfg)
        for stats in history.epochs:
            combined.append(
                EpochStats(
                    offset + stats.epoch, stats.train_loss, stats.val_loss,
                    stats.val_f1_batchavg, stats.val_acc_batchavg,
                )
            )
    return model, combined


def predict_neural(model, texts) -> list[tuple[np.ndarray, str]]:
    """Probability vector and argmax label per text, in evaluation mode.

    Deterministic: dropout is disabled and ties resolve to the earliest
    label in the model's label order.
    """
    if len(texts) == 0:
        return []
    if model.tokenizer is None or model.label_order is None:
        raise TokenizerMismatch("model has no bound tokenizer/labels; train it first")
    model.eval()
    out = []
    batch_size = 64
    with torch.no_grad():
        for start in range(0, len(texts), batch_size):
            chunk = list(texts[start : start + batch_size])
            ids, mask = model.tokenizer.encode_batch(chunk, model.max_sequence_length)
            probs = model(ids, mask).double().numpy()
            for row in probs:
                out.append((row, argmax_label(row, model.label_order)))
    return out
