"""Dataset ingestion, validation, and canonical on-disk persistence.

Three kinds of files come in:

* hard-labeled TSV (OLID-style): header ``id  tweet  subtask_a ...``,
  one label column per sub-task, ``NULL`` where a row is unannotated;
* soft-labeled TSV: per-tweet mean confidence scores (plus standard
  deviation for the binary tasks, a 3-way probability vector for target
  classification);
* gold label CSV: ``id,label`` pairs released after an evaluation phase.

Everything is normalized into an immutable :class:`Dataset` of
:class:`TweetRecord` rows and can be persisted losslessly through the
canonical TSV schema (``save_canonical`` / ``load_canonical``).
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

from .errors import (
    DuplicateId,
    EmptyText,
    IdCollision,
    IoFailure,
    MalformedRow,
    MissingColumn,
    NonStochasticVector,
    OutOfRangeScore,
    SchemaVersionMismatch,
    UnknownLabel,
    UnmatchedId,
)

SCHEMA_VERSION = "ocp-v1"

# Tolerance inside which a 3-way score vector is renormalized to sum to 1;
# anything further off is rejected as genuinely broken.
SIMPLEX_TOLERANCE = 1e-3


class Task(enum.Enum):
    """The three classification sub-tasks."""

    A = "A"  # offensive vs not offensive
    B = "B"  # targeted insult vs untargeted profanity
    C = "C"  # target of the offense: individual / group / other

    @property
    def labels(self) -> tuple[str, ...]:
        """Label set in canonical (tie-priority) order."""
        return _TASK_LABELS[self]


_TASK_LABELS = {
    Task.A: ("OFF", "NOT"),
    Task.B: ("TIN", "UNT"),
    Task.C: ("IND", "GRP", "OTH"),
}


class Language(enum.Enum):
    EN = "en"
    DA = "da"
    EL = "el"
    TR = "tr"
    AR = "ar"


@dataclass(frozen=True)
class HardLabel:
    task: Task
    value: str

    def __post_init__(self):
        if self.value not in self.task.labels:
            raise UnknownLabel(
                f"label {self.value!r} not in task {self.task.value} set {self.task.labels}"
            )


@dataclass(frozen=True)
class SoftScoreA:
    """Mean offensiveness confidence in [0, 1], higher = more offensive."""

    mean: float
    std: float = 0.0


@dataclass(frozen=True)
class SoftScoreB:
    """Mean closeness to an untargeted insult in [0, 1]."""

    mean: float
    std: float = 0.0


@dataclass(frozen=True)
class SoftScoreC:
    """3-way probability vector over (IND, GRP, OTH); sums to 1."""

    p_ind: float
    p_grp: float
    p_oth: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_ind, self.p_grp, self.p_oth)


Payload = HardLabel | SoftScoreA | SoftScoreB | SoftScoreC | None


@dataclass(frozen=True)
class TweetRecord:
    id: str
    text: str
    language: Language
    payload: Payload = None


@dataclass(frozen=True)
class Dataset:
    """Ordered, immutable collection of records for one task and language."""

    records: tuple[TweetRecord, ...]
    task: Task
    language: Language
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise DuplicateId(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)
            if not rec.id:
                raise MalformedRow("empty record id")
            if not rec.text.strip():
                raise EmptyText(f"record {rec.id!r} has empty text")
            if rec.language is not self.language:
                raise MalformedRow(
                    f"record {rec.id!r} language {rec.language} != dataset {self.language}"
                )
            _check_payload(rec.payload, self.task, rec.id)
        kinds = {type(rec.payload) for rec in self.records}
        if len(kinds) > 1:
            raise MalformedRow(f"mixed payload kinds in one dataset: {kinds}")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def payload_kind(self) -> str:
        """One of 'none', 'hard', 'soft_a', 'soft_b', 'soft_c'."""
        if not self.records:
            return "none"
        return _PAYLOAD_KIND[type(self.records[0].payload)]

    def texts(self) -> list[str]:
        return [rec.text for rec in self.records]

    def ids(self) -> list[str]:
        return [rec.id for rec in self.records]

    def label_values(self) -> list[str]:
        """Hard label per record; raises if any record is unlabeled."""
        out = []
        for rec in self.records:
            if not isinstance(rec.payload, HardLabel):
                raise UnknownLabel(f"record {rec.id!r} carries no hard label")
            out.append(rec.payload.value)
        return out


_PAYLOAD_KIND = {
    type(None): "none",
    HardLabel: "hard",
    SoftScoreA: "soft_a",
    SoftScoreB: "soft_b",
    SoftScoreC: "soft_c",
}

_SOFT_PAYLOAD_FOR_TASK = {Task.A: SoftScoreA, Task.B: SoftScoreB, Task.C: SoftScoreC}


def _check_payload(payload: Payload, task: Task, rec_id: str) -> None:
    if payload is None:
        return
    if isinstance(payload, HardLabel):
        if payload.task is not task:
            raise MalformedRow(f"record {rec_id!r}: label for task {payload.task.value}")
        return
    expected = _SOFT_PAYLOAD_FOR_TASK[task]
    if not isinstance(payload, expected):
        raise MalformedRow(
            f"record {rec_id!r}: payload {type(payload).__name__} incompatible with task {task.value}"
        )
    if isinstance(payload, (SoftScoreA, SoftScoreB)):
        if not 0.0 <= payload.mean <= 1.0:
            raise OutOfRangeScore(f"record {rec_id!r}: mean {payload.mean} outside [0,1]")
        if payload.std < 0.0:
            raise OutOfRangeScore(f"record {rec_id!r}: std {payload.std} < 0")
    else:
        vec = payload.as_tuple()
        if any(not 0.0 <= v <= 1.0 for v in vec):
            raise OutOfRangeScore(f"record {rec_id!r}: component outside [0,1]: {vec}")
        if abs(sum(vec) - 1.0) > 1e-6:
            raise NonStochasticVector(f"record {rec_id!r}: scores sum to {sum(vec)}")


# ---------------------------------------------------------------------------
# hard-labeled TSV (OLID-style)
# ---------------------------------------------------------------------------


def _read_lines(path) -> list[str]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    # Tolerate CRLF files; embedded newlines in canonical files are escaped.
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [ln.rstrip("\r") for ln in lines]


def _header_index(header: list[str], column: str, path) -> int:
    lowered = [h.strip().lower() for h in header]
    if column not in lowered:
        raise MissingColumn(f"header lacks required column {column!r}", line=1, path=path)
    return lowered.index(column)


def load_hard_tsv(path, task: Task, language: Language) -> Dataset:
    """Load an OLID-style hard-labeled TSV for one sub-task.

    Rows whose label cell for the requested sub-task is the literal
    ``NULL`` are skipped (hierarchically unannotated rows); everything
    else must carry a label from the task's set.  Order is preserved.
    """
    lines = _read_lines(path)
    if not lines:
        raise MissingColumn("file is empty, no header", line=1, path=path)
    header = lines[0].split("\t")
    id_col = _header_index(header, "id", path)
    text_col = _header_index(header, "tweet", path)
    label_col = _header_index(header, f"subtask_{task.value.lower()}", path)

    records = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        cells = line.split("\t")
        if len(cells) != len(header):
            raise MalformedRow(
                f"expected {len(header)} fields, got {len(cells)}", line=lineno, path=path
            )
        rec_id = cells[id_col].strip()
        text = cells[text_col]
        label = cells[label_col].strip()
        if label == "NULL":
            continue
        if rec_id in seen:
            raise DuplicateId(f"duplicate id {rec_id!r}", line=lineno, path=path)
        seen.add(rec_id)
        if not text.strip():
            raise EmptyText(f"id {rec_id!r} has empty text", line=lineno, path=path)
        if label not in task.labels:
            raise MalformedRow(
                f"label {label!r} not in task {task.value} set {task.labels}",
                line=lineno,
                path=path,
            )
        records.append(
            TweetRecord(rec_id, text, language, HardLabel(task, label))
        )
    return Dataset(tuple(records), task, language, provenance=f"hard_tsv:{path}")


# ---------------------------------------------------------------------------
# soft-labeled TSV
# ---------------------------------------------------------------------------


def _parse_float(cell: str, what: str, lineno: int, path) -> float:
    try:
        return float(cell)
    except ValueError as exc:
        raise MalformedRow(f"{what} is not a number: {cell!r}", line=lineno, path=path) from exc


def _find_mean_columns(header: list[str], path) -> dict[str, int]:
    """Locate the three task-C mean columns by the label name in the header.

    Accepts either a 3-column layout (one mean per label) or a 6-column
    one with additional std columns, which are ignored.
    """
    lowered = [h.strip().lower() for h in header]
    found = {}
    for key in ("ind", "grp", "oth"):
        matches = [
            i
            for i, h in enumerate(lowered)
            if key in h and "std" not in h and "dev" not in h
        ]
        if not matches:
            raise MissingColumn(f"no mean column for label {key.upper()!r}", line=1, path=path)
        found[key] = matches[0]
    return found


def load_soft_tsv(path, task: Task, language: Language) -> Dataset:
    """Load a soft-score TSV: mean(+std) for tasks A/B, a 3-way vector for C.

    Task-C vectors within ``SIMPLEX_TOLERANCE`` of summing to 1 are
    renormalized to sum exactly 1; anything further off is rejected.
    """
    lines = _read_lines(path)
    if not lines:
        raise MissingColumn("file is empty, no header", line=1, path=path)
    header = lines[0].split("\t")
    id_col = _header_index(header, "id", path)
    try:
        text_col = _header_index(header, "text", path)
    except MissingColumn:
        text_col = _header_index(header, "tweet", path)

    if task in (Task.A, Task.B):
        avg_col = _header_index(header, "average", path)
        std_col = _header_index(header, "std", path)
    else:
        mean_cols = _find_mean_columns(header, path)

    records = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        cells = line.split("\t")
        if len(cells) != len(header):
            raise MalformedRow(
                f"expected {len(header)} fields, got {len(cells)}", line=lineno, path=path
            )
        rec_id = cells[id_col].strip()
        text = cells[text_col]
        if rec_id in seen:
            raise DuplicateId(f"duplicate id {rec_id!r}", line=lineno, path=path)
        seen.add(rec_id)
        if not text.strip():
            raise EmptyText(f"id {rec_id!r} has empty text", line=lineno, path=path)

        if task in (Task.A, Task.B):
            mean = _parse_float(cells[avg_col], "average", lineno, path)
            std = _parse_float(cells[std_col], "std", lineno, path)
            if not 0.0 <= mean <= 1.0:
                raise OutOfRangeScore(f"mean {mean} outside [0,1]", line=lineno, path=path)
            if std < 0.0:
                raise OutOfRangeScore(f"std {std} < 0", line=lineno, path=path)
            payload = SoftScoreA(mean, std) if task is Task.A else SoftScoreB(mean, std)
        else:
            vec = [
                _parse_float(cells[mean_cols[k]], f"mean_{k}", lineno, path)
                for k in ("ind", "grp", "oth")
            ]
            if any(not 0.0 <= v <= 1.0 for v in vec):
                raise OutOfRangeScore(f"component outside [0,1]: {vec}", line=lineno, path=path)
            total = sum(vec)
            if abs(total - 1.0) > SIMPLEX_TOLERANCE:
                raise NonStochasticVector(
                    f"scores sum to {total}, off by more than {SIMPLEX_TOLERANCE}",
                    line=lineno,
                    path=path,
                )
            vec = [v / total for v in vec]
            payload = SoftScoreC(*vec)
        records.append(TweetRecord(rec_id, text, language, payload))
    return Dataset(tuple(records), task, language, provenance=f"soft_tsv:{path}")


# ---------------------------------------------------------------------------
# gold labels
# ---------------------------------------------------------------------------


def join_gold(test: Dataset, labels_path) -> Dataset:
    """Attach gold hard labels (``id,label`` CSV, no header) to a test set.

    Every test id must appear exactly once in the labels file; ids in the
    file that are absent from the test set are ignored.  Record order is
    preserved.
    """
    try:
        with open(labels_path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoFailure(f"cannot read {labels_path}: {exc}") from exc

    gold: dict[str, str] = {}
    for lineno, row in enumerate(rows, start=1):
        if not row:
            continue
        if len(row) != 2:
            raise MalformedRow(
                f"expected 'id,label', got {row!r}", line=lineno, path=labels_path
            )
        rec_id, label = row[0].strip(), row[1].strip()
        if rec_id in gold:
            raise DuplicateId(f"duplicate gold id {rec_id!r}", line=lineno, path=labels_path)
        gold[rec_id] = label

    records = []
    for rec in test.records:
        if rec.id not in gold:
            raise UnmatchedId(f"test id {rec.id!r} missing from gold labels")
        label = gold[rec.id]
        if label not in test.task.labels:
            raise UnknownLabel(
                f"gold label {label!r} for id {rec.id!r} not in task "
                f"{test.task.value} set {test.task.labels}"
            )
        records.append(
            TweetRecord(rec.id, rec.text, rec.language, HardLabel(test.task, label))
        )
    return Dataset(
        tuple(records), test.task, test.language,
        provenance=f"{test.provenance} + gold:{labels_path}",
    )


# ---------------------------------------------------------------------------
# canonical persistence
# ---------------------------------------------------------------------------

_PAYLOAD_COLUMNS = {
    "none": (),
    "hard": ("label",),
    "soft_a": ("average", "std"),
    "soft_b": ("average", "std"),
    "soft_c": ("mean_ind", "mean_grp", "mean_oth"),
}


def _escape(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace("\t", "\\t")
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append({"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt, "\\" + nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _payload_cells(payload: Payload) -> tuple[str, ...]:
    if payload is None:
        return ()
    if isinstance(payload, HardLabel):
        return (payload.value,)
    if isinstance(payload, (SoftScoreA, SoftScoreB)):
        return (repr(payload.mean), repr(payload.std))
    return tuple(repr(v) for v in payload.as_tuple())


def save_canonical(ds: Dataset, path) -> None:
    """Write a dataset in the canonical TSV schema (lossless round trip).

    Line 1 is ``#ocp-v1`` plus the column names; line 2 is a ``#meta``
    line with task, language, and provenance.  Tabs, newlines, and
    backslashes inside text are backslash-escaped.
    """
    cols = _PAYLOAD_COLUMNS[ds.payload_kind]
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\t".join((f"#{SCHEMA_VERSION}", "id", "text") + cols) + "\n")
            fh.write(
                "\t".join(
                    (
                        "#meta",
                        f"task={ds.task.value}",
                        f"language={ds.language.value}",
                        f"payload={ds.payload_kind}",
                        f"provenance={_escape(ds.provenance)}",
                    )
                )
                + "\n"
            )
            for rec in ds.records:
                cells = (rec.id, _escape(rec.text)) + _payload_cells(rec.payload)
                fh.write("\t".join(cells) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_canonical(path) -> Dataset:
    """Load a dataset written by :func:`save_canonical`."""
    lines = _read_lines(path)
    if not lines or not lines[0].startswith("#"):
        raise SchemaVersionMismatch("missing canonical header", line=1, path=path)
    header = lines[0].split("\t")
    if header[0] != f"#{SCHEMA_VERSION}":
        raise SchemaVersionMismatch(
            f"expected #{SCHEMA_VERSION}, got {header[0]!r}", line=1, path=path
        )
    if len(lines) < 2 or not lines[1].startswith("#meta"):
        raise SchemaVersionMismatch("missing #meta line", line=2, path=path)
    meta = {}
    for cell in lines[1].split("\t")[1:]:
        key, _, value = cell.partition("=")
        meta[key] = value
    task = Task(meta["task"])
    language = Language(meta["language"])
    payload_kind = meta.get("payload", "none")
    provenance = _unescape(meta.get("provenance", ""))

    expected_cols = ("id", "text") + _PAYLOAD_COLUMNS[payload_kind]
    if tuple(header[1:]) != expected_cols:
        raise SchemaVersionMismatch(
            f"columns {header[1:]} do not match payload {payload_kind!r}", line=1, path=path
        )

    records = []
    for lineno, line in enumerate(lines[2:], start=3):
        if line == "":
            continue
        cells = line.split("\t")
        if len(cells) != len(expected_cols):
            raise MalformedRow(
                f"expected {len(expected_cols)} fields, got {len(cells)}",
                line=lineno,
                path=path,
            )
        rec_id = cells[0]
        text = _unescape(cells[1])
        if payload_kind == "none":
            payload: Payload = None
        elif payload_kind == "hard":
            payload = HardLabel(task, cells[2])
        elif payload_kind in ("soft_a", "soft_b"):
            cls = SoftScoreA if payload_kind == "soft_a" else SoftScoreB
            payload = cls(float(cells[2]), float(cells[3]))
        else:
            payload = SoftScoreC(float(cells[2]), float(cells[3]), float(cells[4]))
        records.append(TweetRecord(rec_id, text, language, payload))
    return Dataset(tuple(records), task, language, provenance=provenance)


def concat_datasets(first: Dataset, second: Dataset) -> Dataset:
    """Concatenate two datasets of the same task and language, first first."""
    if first.task is not second.task:
        raise IdCollision(
            f"cannot concatenate task {first.task.value} with {second.task.value}"
        )
    if first.language is not second.language:
        raise IdCollision(
            f"cannot concatenate language {first.language.value} with {second.language.value}"
        )
    overlap = set(first.ids()) & set(second.ids())
    if overlap:
        raise IdCollision(f"id collision on concat: {sorted(overlap)[:5]}")
    provenance = first.provenance
    if second.provenance:
        provenance = f"{provenance} + {second.provenance}" if provenance else second.provenance
    return Dataset(
        first.records + second.records, first.task, first.language, provenance
    )
