"""Soft-score to hard-label conversion, class statistics, balanced weights.

The two binary conversion rules differ deliberately at the 0.5 boundary:
offensive-vs-not uses a strict ``mean > 0.5`` while targeted-vs-untargeted
uses an inclusive ``mean >= 0.5``.  Both are kept exactly as stated rather
than unified.  The 3-way conversion takes the argmax with a fixed
tie-break priority IND > GRP > OTH (the task's label order).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import (
    Dataset,
    HardLabel,
    SoftScoreA,
    SoftScoreB,
    SoftScoreC,
    Task,
    TweetRecord,
)
from .errors import EmptyClass, OutOfRange, UnlabeledRecord


@dataclass(frozen=True)
class ClassStats:
    """Counts and fractions per label; fractions is None on empty input."""

    counts: dict[str, int]
    fractions: dict[str, float] | None

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class ClassWeights:
    weights: dict[str, float]


def _check_unit_interval(mean: float) -> None:
    if not 0.0 <= mean <= 1.0:
        raise OutOfRange(f"mean score {mean} outside [0,1]")


def soft_to_hard_a(score: SoftScoreA) -> HardLabel:
    """OFF iff mean strictly greater than 0.5, else NOT."""
    _check_unit_interval(score.mean)
    return HardLabel(Task.A, "OFF" if score.mean > 0.5 else "NOT")


def soft_to_hard_b(score: SoftScoreB) -> HardLabel:
    """UNT iff mean greater than or equal to 0.5, else TIN."""
    _check_unit_interval(score.mean)
    return HardLabel(Task.B, "UNT" if score.mean >= 0.5 else "TIN")


def argmax_label(values: Sequence[float], label_order: Sequence[str]) -> str:
    """Label of the maximal value; ties resolve to the earliest label."""
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return label_order[best]


def soft_to_hard_c(score: SoftScoreC) -> HardLabel:
    """Label with the maximal mean score, ties broken IND > GRP > OTH."""
    return HardLabel(Task.C, argmax_label(score.as_tuple(), Task.C.labels))


_CONVERTERS = {Task.A: soft_to_hard_a, Task.B: soft_to_hard_b, Task.C: soft_to_hard_c}


def convert_dataset(ds: Dataset) -> Dataset:
    """Apply the per-task soft-to-hard converter record-wise."""
    convert = _CONVERTERS[ds.task]
    records = []
    for rec in ds.records:
        if not isinstance(rec.payload, (SoftScoreA, SoftScoreB, SoftScoreC)):
            raise UnlabeledRecord(f"record {rec.id!r} carries no soft score")
        try:
            label = convert(rec.payload)
        except OutOfRange as exc:
            raise OutOfRange(f"record {rec.id!r}: {exc}") from exc
        records.append(TweetRecord(rec.id, rec.text, rec.language, label))
    return Dataset(tuple(records), ds.task, ds.language, ds.provenance)


def class_distribution(ds: Dataset) -> ClassStats:
    """Label counts and fractions over the task's full label set.

    Labels absent from the data still appear with count 0.  On an empty
    dataset the fractions are undefined and reported as None.
    """
    counts = {label: 0 for label in ds.task.labels}
    for rec in ds.records:
        if not isinstance(rec.payload, HardLabel):
            raise UnlabeledRecord(f"record {rec.id!r} carries no hard label")
        counts[rec.payload.value] += 1
    total = sum(counts.values())
    if total == 0:
        return ClassStats(counts, None)
    return ClassStats(counts, {label: n / total for label, n in counts.items()})


def balanced_weights(stats: ClassStats | Mapping[str, int]) -> ClassWeights:
    """Per-class weights ``n_total / (n_classes * n_class)``.

    Satisfies the balancing identity sum(counts * weights) == sum(counts):
    every class contributes the same aggregate mass to a weighted loss.
    """
    counts = stats.counts if isinstance(stats, ClassStats) else dict(stats)
    zero = [label for label, n in counts.items() if n <= 0]
    if zero:
        raise EmptyClass(f"cannot balance classes with zero count: {zero}")
    total = sum(counts.values())
    k = len(counts)
    return ClassWeights({label: total / (k * n) for label, n in counts.items()})
