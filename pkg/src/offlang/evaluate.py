"""Macro-F1 / accuracy metrics, confusion matrices, and error reports.

Two metric conventions coexist and are kept apart on purpose.  Corpus
level metrics (everything in this module) are computed once over the
whole evaluated set and are what an :class:`EvalReport` carries.  Neural
training histories instead average per-batch scores across an epoch; the
:func:`batch_averaged` helper implements that mean so both conventions
stay auditable.  Per-class F1 uses the F1 = 0 convention whenever
precision + recall is 0, which matters for rare classes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Sequence

from .corpus import Dataset
from .errors import EmptyList, IoFailure, LengthMismatch, UnknownLabel


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square count matrix; rows are true labels, columns predicted."""

    label_order: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    @property
    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(len(self.label_order)))

    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.counts)


@dataclass(frozen=True)
class PerClassScores:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    macro_f1: float
    accuracy: float
    per_class: dict[str, PerClassScores]
    confusion: ConfusionMatrix
    misclassified: tuple[tuple[str, str, str, str], ...]  # (id, text, true, predicted)
    metric_convention: str = "corpus"

    def to_dict(self) -> dict:
        return {
            "metric_convention": self.metric_convention,
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
            "per_class": {
                label: {"precision": s.precision, "recall": s.recall, "f1": s.f1}
                for label, s in self.per_class.items()
            },
            "confusion": {
                "label_order": list(self.confusion.label_order),
                "counts": [list(row) for row in self.confusion.counts],
            },
            "misclassified": [list(entry) for entry in self.misclassified],
        }

    def to_json(self, path) -> None:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(self.to_dict(), fh, ensure_ascii=False, indent=2)
                fh.write("\n")
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc


def _check_lengths(y_true: Sequence[str], y_pred: Sequence[str]) -> None:
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} true labels vs {len(y_pred)} predictions")
    if len(y_true) == 0:
        raise LengthMismatch("empty label sequences")


def _check_known(labels: Sequence[str], label_set: Sequence[str]) -> None:
    known = set(label_set)
    for lab in labels:
        if lab not in known:
            raise UnknownLabel(f"label {lab!r} not in {tuple(label_set)}")


def per_class_scores(
    y_true: Sequence[str], y_pred: Sequence[str], label_set: Sequence[str]
) -> dict[str, PerClassScores]:
    """Precision/recall/F1 per label from raw TP/FP/FN tallies."""
    _check_lengths(y_true, y_pred)
    _check_known(y_true, label_set)
    _check_known(y_pred, label_set)
    out = {}
    for label in label_set:
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == label and p == label)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != label and p == label)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == label and p != label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out[label] = PerClassScores(precision, recall, f1)
    return out


def macro_f1(y_true: Sequence[str], y_pred: Sequence[str], label_set: Sequence[str]) -> float:
    """Unweighted mean of per-class F1 over the full label set."""
    scores = per_class_scores(y_true, y_pred, label_set)
    return sum(s.f1 for s in scores.values()) / len(label_set)


def accuracy(y_true: Sequence[str], y_pred: Sequence[str]) -> float:
    _check_lengths(y_true, y_pred)
    return sum(1 for t, p in zip(y_true, y_pred) if t == p) / len(y_true)


def batch_averaged(values: Sequence[float]) -> float:
    """Arithmetic mean of per-batch metric values for one epoch."""
    if len(values) == 0:
        raise EmptyList("no batch values to average")
    return sum(values) / len(values)


def confusion(
    y_true: Sequence[str], y_pred: Sequence[str], label_order: Sequence[str]
) -> ConfusionMatrix:
    _check_lengths(y_true, y_pred)
    _check_known(y_true, label_order)
    _check_known(y_pred, label_order)
    index = {label: i for i, label in enumerate(label_order)}
    counts = [[0] * len(label_order) for _ in label_order]
    for t, p in zip(y_true, y_pred):
        counts[index[t]][index[p]] += 1
    return ConfusionMatrix(tuple(label_order), tuple(tuple(row) for row in counts))


def evaluate_predictions(
    ds: Dataset, y_pred: Sequence[str], metric_convention: str = "corpus"
) -> EvalReport:
    """Full corpus-level report for predictions against a hard-labeled dataset."""
    y_true = ds.label_values()
    _check_lengths(y_true, y_pred)
    label_order = ds.task.labels
    scores = per_class_scores(y_true, y_pred, label_order)
    cm = confusion(y_true, y_pred, label_order)
    mis = tuple(
        (rec.id, rec.text, t, p)
        for rec, t, p in zip(ds.records, y_true, y_pred)
        if t != p
    )
    return EvalReport(
        macro_f1=sum(s.f1 for s in scores.values()) / len(label_order),
        accuracy=accuracy(y_true, y_pred),
        per_class=scores,
        confusion=cm,
        misclassified=mis,
        metric_convention=metric_convention,
    )


def error_report(ds: Dataset, y_pred: Sequence[str]) -> dict[tuple[str, str], list[tuple[str, str]]]:
    """Misclassified records grouped by (true, predicted) confusion cell.

    Each group holds (id, text) pairs sorted by id, so specific failure
    modes (say, offensive tweets predicted as not offensive) can be read
    off directly.
    """
    y_true = ds.label_values()
    _check_lengths(y_true, y_pred)
    groups: dict[tuple[str, str], list[tuple[str, str]]] = {}
    for rec, t, p in zip(ds.records, y_true, y_pred):
        if t != p:
            groups.setdefault((t, p), []).append((rec.id, rec.text))
    for entries in groups.values():
        entries.sort(key=lambda pair: pair[0])
    return groups


def write_confusion_csv(cm: ConfusionMatrix, path) -> None:
    """Sidecar CSV: header row of predicted labels, leading column of true."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([""] + list(cm.label_order))
            for label, row in zip(cm.label_order, cm.counts):
                writer.writerow([label] + list(row))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def emit_confusion_figure(cm: ConfusionMatrix, path) -> None:
    """Write a count-annotated heatmap image plus the bit-exact CSV sidecar.

    The CSV (same path with a .csv suffix) is the contract; the image is
    for humans.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    data = np.asarray(cm.counts, dtype=float)
    n = len(cm.label_order)
    fig, ax = plt.subplots(figsize=(1.6 * n + 2, 1.4 * n + 1.5))
    im = ax.imshow(data, cmap="Blues")
    ax.set_xticks(range(n), cm.label_order)
    ax.set_yticks(range(n), cm.label_order)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    threshold = data.max() / 2 if data.max() > 0 else 0.5
    for i in range(n):
        for j in range(n):
            ax.text(
                j, i, str(cm.counts[i][j]),
                ha="center", va="center",
                color="white" if data[i][j] > threshold else "black",
            )
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    try:
        fig.savefig(path, dpi=120)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)
    write_confusion_csv(cm, str(path) + ".csv")
