"""Checkpoint directories for trained neural models.

Layout: ``config.json`` (family, architecture, label binding),
``weights.pt`` (state dict), ``vocab.txt`` (whitespace vocabulary, when
one is used), and ``history.csv`` with one row per training epoch.
"""

from __future__ import annotations

import dataclasses
import json
import os

import torch

from ..errors import IoFailure
from .encoders import EncoderSpec
from .finetune import TrainingHistory
from .models import HeadSpec, NeuralClassifier, build_classifier
from .soft_lstm import SoftLabelLstm, SoftLstmConfig
from .vocab import WhitespaceVocab

CONFIG_NAME = "config.json"
WEIGHTS_NAME = "weights.pt"
VOCAB_NAME = "vocab.txt"
HISTORY_NAME = "history.csv"


def save_checkpoint(model, history: TrainingHistory, out_dir, preprocess_preset: str = "none") -> None:
    os.makedirs(out_dir, exist_ok=True)
    if isinstance(model, NeuralClassifier):
        config = {
            "family": "finetune",
            "encoder": dataclasses.asdict(model.encoder_spec),
            "head": dataclasses.asdict(model.head_spec),
            "n_classes": model.n_classes,
        }
    elif isinstance(model, SoftLabelLstm):
        config = {
            "family": "soft_lstm",
            "config": dataclasses.asdict(model.cfg),
            "n_classes": model.n_classes,
        }
    else:
        raise IoFailure(f"cannot checkpoint model of type {type(model).__name__}")
    config.update(
        {
            "label_order": list(model.label_order) if model.label_order else None,
            "task": model.task_name,
            "max_sequence_length": model.max_sequence_length,
            "preprocess_preset": preprocess_preset,
        }
    )
    try:
        with open(os.path.join(out_dir, CONFIG_NAME), "w", encoding="utf-8") as fh:
            json.dump(config, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write checkpoint config: {exc}") from exc
    torch.save(model.state_dict(), os.path.join(out_dir, WEIGHTS_NAME))
    if isinstance(model.tokenizer, WhitespaceVocab):
        model.tokenizer.save(os.path.join(out_dir, VOCAB_NAME))
    history.to_csv(os.path.join(out_dir, HISTORY_NAME))


def load_checkpoint(out_dir):
    """Rebuild a trained model and its history from a checkpoint directory."""
    try:
        with open(os.path.join(out_dir, CONFIG_NAME), encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read checkpoint config in {out_dir}: {exc}") from exc

    vocab_path = os.path.join(out_dir, VOCAB_NAME)
    vocab = WhitespaceVocab.load(vocab_path) if os.path.exists(vocab_path) else None

    if config["family"] == "finetune":
        model = build_classifier(
            EncoderSpec(**config["encoder"]), HeadSpec(**config["head"]), config["n_classes"]
        )
        if vocab is not None:
            model.tokenizer = vocab
        else:
            from .encoders import RegistryTokenizer

            model.tokenizer = RegistryTokenizer(config["encoder"]["identifier"])
    elif config["family"] == "soft_lstm":
        if vocab is None:
            raise IoFailure(f"soft_lstm checkpoint in {out_dir} lacks {VOCAB_NAME}")
        model = SoftLabelLstm(len(vocab), SoftLstmConfig(**config["config"]), config["n_classes"])
        model.tokenizer = vocab
    else:
        raise IoFailure(f"unknown checkpoint family {config['family']!r}")

    model.label_order = tuple(config["label_order"]) if config["label_order"] else None
    model.task_name = config.get("task")
    model.max_sequence_length = config.get("max_sequence_length", 64)
    state = torch.load(os.path.join(out_dir, WEIGHTS_NAME), weights_only=True)
    model.load_state_dict(state)
    model.eval()

    history_path = os.path.join(out_dir, HISTORY_NAME)
    history = TrainingHistory.from_csv(history_path) if os.path.exists(history_path) else TrainingHistory()
    return model, history, config
