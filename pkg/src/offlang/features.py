"""Unigram tf-idf featurization for the classical baselines.

Terms are whitespace-separated unigrams of the (already preprocessed)
text.  The inverse document frequency uses the smooth variant

    idf(t) = ln((1 + n_documents) / (1 + df(t))) + 1

and transformed vectors are L2-normalized, so the features line up with
the dominant convention of mainstream text-classification toolkits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EmptyCorpus, IoFailure, MalformedRow, SchemaVersionMismatch

_PERSIST_HEADER = "#tfidf-v1"


@dataclass(frozen=True)
class Vocabulary:
    """Dense term index plus per-term document frequency."""

    term_to_index: dict[str, int]
    document_frequency: dict[str, int]

    def __len__(self) -> int:
        return len(self.term_to_index)


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: Vocabulary
    idf: dict[str, float]
    n_documents: int

    @property
    def dimension(self) -> int:
        return len(self.vocabulary)


@dataclass(frozen=True)
class SparseVector:
    """Sorted index/value pairs; indices strictly increasing, values nonzero."""

    indices: tuple[int, ...]
    values: tuple[float, ...]
    dimension: int

    def __post_init__(self):
        assert len(self.indices) == len(self.values)
        assert all(a < b for a, b in zip(self.indices, self.indices[1:]))
        assert all(v != 0.0 for v in self.values)
        assert all(0 <= i < self.dimension for i in self.indices)

    def l2_norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))

    def to_dense(self) -> list[float]:
        dense = [0.0] * self.dimension
        for i, v in zip(self.indices, self.values):
            dense[i] = v
        return dense


def fit_tfidf(corpus: list[str]) -> TfidfModel:
    """Fit vocabulary, document frequencies, and smooth idf on a corpus.

    Every term seen at least once is retained; indices are assigned in
    sorted term order so fitting is deterministic.
    """
    if not corpus:
        raise EmptyCorpus("cannot fit tf-idf on an empty corpus")
    df: dict[str, int] = {}
    for doc in corpus:
        for term in set(doc.split()):
            df[term] = df.get(term, 0) + 1
    terms = sorted(df)
    term_to_index = {t: i for i, t in enumerate(terms)}
    n = len(corpus)
    idf = {t: math.log((1 + n) / (1 + df[t])) + 1.0 for t in terms}
    return TfidfModel(Vocabulary(term_to_index, df), idf, n)


def transform(model: TfidfModel, text: str) -> SparseVector:
    """tf-idf vector of a text: count * idf per in-vocabulary term, L2-normalized.

    Out-of-vocabulary terms are dropped; a text with no known terms maps
    to the zero vector.
    """
    counts: dict[int, float] = {}
    vocab = model.vocabulary.term_to_index
    for term in text.split():
        idx = vocab.get(term)
        if idx is not None:
            counts[idx] = counts.get(idx, 0.0) + model.idf[term]
    if not counts:
        return SparseVector((), (), model.dimension)
    indices = tuple(sorted(counts))
    values = [counts[i] for i in indices]
    norm = math.sqrt(sum(v * v for v in values))
    return SparseVector(indices, tuple(v / norm for v in values), model.dimension)


def transform_corpus(model: TfidfModel, texts: list[str]) -> list[SparseVector]:
    return [transform(model, text) for text in texts]


def save_tfidf(model: TfidfModel, path) -> None:
    """Persist as TSV: header with n_documents, then term/index/df/idf rows."""
    index_to_term = sorted(model.vocabulary.term_to_index, key=model.vocabulary.term_to_index.get)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{_PERSIST_HEADER}\tn_documents={model.n_documents}\n")
            for term in index_to_term:
                idx = model.vocabulary.term_to_index[term]
                df = model.vocabulary.document_frequency[term]
                fh.write(f"{term}\t{idx}\t{df}\t{model.idf[term]!r}\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_tfidf(path) -> TfidfModel:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not lines or not lines[0].startswith(_PERSIST_HEADER):
        raise SchemaVersionMismatch(f"not a tf-idf file: {path}", line=1, path=path)
    n_documents = int(lines[0].split("\t")[1].split("=")[1])
    term_to_index: dict[str, int] = {}
    df: dict[str, int] = {}
    idf: dict[str, float] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split("\t")
        if len(cells) != 4:
            raise MalformedRow(f"expected 4 fields, got {len(cells)}", line=lineno, path=path)
        term, idx, freq, weight = cells
        term_to_index[term] = int(idx)
        df[term] = int(freq)
        idf[term] = float(weight)
    return TfidfModel(Vocabulary(term_to_index, df), idf, n_documents)
