"""Neural classifiers: transformer fine-tuning and the soft-target LSTM."""

from .checkpoint import load_checkpoint, save_checkpoint
from .encoders import EncoderSpec, TinyTransformerEncoder, build_encoder
from .finetune import (
    FinetuneConfig,
    TrainingHistory,
    EpochStats,
    build_optimizer,
    decay_parameter_split,
    finetune,
    finetune_sequential,
    predict_neural,
)
from .losses import (
    PROBABILITY_EPSILON,
    soft_cross_entropy,
    soft_cross_entropy_from_logits,
    softmax,
)
from .models import HeadSpec, NeuralClassifier, build_classifier
from .soft_lstm import SoftLabelLstm, SoftLstmConfig, train_soft_lstm
from .vocab import WhitespaceVocab

__all__ = [
    "EncoderSpec",
    "EpochStats",
    "FinetuneConfig",
    "HeadSpec",
    "NeuralClassifier",
    "PROBABILITY_EPSILON",
    "SoftLabelLstm",
    "SoftLstmConfig",
    "TinyTransformerEncoder",
    "TrainingHistory",
    "WhitespaceVocab",
    "build_classifier",
    "build_encoder",
    "build_optimizer",
    "decay_parameter_split",
    "finetune",
    "finetune_sequential",
    "load_checkpoint",
    "predict_neural",
    "save_checkpoint",
    "soft_cross_entropy",
    "soft_cross_entropy_from_logits",
    "softmax",
    "train_soft_lstm",
]
