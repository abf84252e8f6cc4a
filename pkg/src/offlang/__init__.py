"""offlang: multilingual offensive-language classification toolkit.

Ingests hard- and soft-labeled tweet datasets, converts confidence
scores to hard labels, runs tf-idf classical baselines and neural
classifiers (transformer fine-tuning and a soft-target LSTM), augments
low-resource training sets through translation, and evaluates with
macro F1, confusion matrices, and misclassification reports.
"""

__version__ = "0.1.0"

from . import augment, baselines, corpus, evaluate, features, labels, neural, preprocess
from .corpus import Dataset, HardLabel, Language, Task, TweetRecord

__all__ = [
    "Dataset",
    "HardLabel",
    "Language",
    "Task",
    "TweetRecord",
    "augment",
    "baselines",
    "corpus",
    "evaluate",
    "features",
    "labels",
    "neural",
    "preprocess",
]
