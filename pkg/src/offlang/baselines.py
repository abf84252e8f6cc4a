"""Classical classifiers over tf-idf features.

Five classifier kinds are supported: linear SVM (hinge loss), logistic
regression, k-nearest neighbours, random forest, and gradient-boosted
trees.  scikit-learn backs the estimators; everything class-imbalance
related goes through :func:`offlang.labels.balanced_weights` so the
per-class weights used by the estimators are the ones this toolkit
computes, not an opaque library default.

Experiments are seeded and bit-reproducible: the same dataset, spec, and
seed produce the identical report.
"""

from __future__ import annotations

import pickle
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.ensemble import GradientBoostingClassifier, RandomForestClassifier
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.neighbors import KNeighborsClassifier
from sklearn.svm import LinearSVC

from .corpus import Dataset
from .errors import (
    DimensionMismatch,
    IoFailure,
    NonConvergenceWarning,
    OfflangError,
    SingleClassData,
)
from .evaluate import EvalReport, evaluate_predictions
from .features import SparseVector, TfidfModel, fit_tfidf, transform_corpus
from .labels import ClassWeights, balanced_weights
from .preprocess import NO_PREPROCESSING, PreprocessConfig, preprocess

KINDS = ("linear_svm", "logistic_regression", "knn", "random_forest", "gradient_boosted_trees")

# Defaults for everything the baseline table leaves unstated; every run
# manifest records the values actually used.
DEFAULT_HYPERPARAMS = {
    "linear_svm": {"C": 1.0, "max_iter": 5000},
    "logistic_regression": {"C": 1.0, "max_iter": 1000},
    "knn": {"k": 5},
    "random_forest": {"n_estimators": 100, "max_depth": None},
    "gradient_boosted_trees": {"n_estimators": 100, "max_depth": 6, "learning_rate": 0.3},
}


@dataclass(frozen=True)
class BaselineSpec:
    kind: str
    class_weighting: str = "none"  # "none" | "balanced"
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise OfflangError(f"unknown baseline kind {self.kind!r}; expected one of {KINDS}")
        if self.class_weighting not in ("none", "balanced"):
            raise OfflangError(f"class_weighting must be 'none' or 'balanced'")
        merged = dict(DEFAULT_HYPERPARAMS[self.kind])
        merged.update(self.hyperparams)
        if self.kind == "knn" and merged["k"] < 1:
            raise OfflangError("knn requires k >= 1")
        object.__setattr__(self, "hyperparams", merged)


@dataclass
class BaselineModel:
    spec: BaselineSpec
    estimator: object
    label_set: tuple[str, ...]
    dimension: int
    converged: bool = True


def _build_estimator(spec: BaselineSpec, weights: ClassWeights | None):
    hp = spec.hyperparams
    class_weight = dict(weights.weights) if weights is not None else None
    if spec.kind == "linear_svm":
        return LinearSVC(
            C=hp["C"], loss="hinge", class_weight=class_weight,
            max_iter=hp["max_iter"], random_state=spec.seed,
        )
    if spec.kind == "logistic_regression":
        return LogisticRegression(
            C=hp["C"], class_weight=class_weight,
            max_iter=hp["max_iter"], random_state=spec.seed,
        )
    if spec.kind == "knn":
        return KNeighborsClassifier(n_neighbors=hp["k"])
    if spec.kind == "random_forest":
        return RandomForestClassifier(
            n_estimators=hp["n_estimators"], max_depth=hp["max_depth"],
            class_weight=class_weight, random_state=spec.seed,
        )
    # Gradient-boosted trees: per-sample weights stand in for class_weight,
    # which the sklearn booster does not accept directly.
    return GradientBoostingClassifier(
        n_estimators=hp["n_estimators"], max_depth=hp["max_depth"],
        learning_rate=hp["learning_rate"], random_state=spec.seed,
    )


def _to_csr(X: Sequence[SparseVector]) -> sp.csr_matrix:
    if not X:
        raise DimensionMismatch("no feature vectors")
    dim = X[0].dimension
    data, indices, indptr = [], [], [0]
    for vec in X:
        if vec.dimension != dim:
            raise DimensionMismatch(f"vector dimension {vec.dimension} != {dim}")
        data.extend(vec.values)
        indices.extend(vec.indices)
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices), np.asarray(indptr)),
        shape=(len(X), dim),
    )


def train_baseline(
    spec: BaselineSpec,
    X: Sequence[SparseVector],
    y: Sequence[str],
    weights: ClassWeights | None = None,
) -> BaselineModel:
    """Fit one classical classifier on tf-idf vectors.

    With class_weighting="balanced" the per-sample loss contribution is
    scaled by the sample class's balanced weight.  If the optimizer hits
    its iteration cap a NonConvergenceWarning is emitted and the fitted
    model is returned anyway.
    """
    if len(X) != len(y):
        raise DimensionMismatch(f"{len(X)} vectors vs {len(y)} labels")
    if not X:
        raise SingleClassData("empty training data")
    classes = sorted(set(y))
    if len(classes) < 2:
        raise SingleClassData(f"training data contains a single class {classes}")

    if spec.class_weighting == "balanced" and weights is None:
        tallies = Counter(y)
        weights = balanced_weights({c: tallies[c] for c in classes})
    if spec.class_weighting == "none":
        weights = None

    estimator = _build_estimator(spec, weights)
    matrix = _to_csr(X)
    y_arr = np.asarray(y)

    converged = True
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        if spec.kind == "gradient_boosted_trees" and weights is not None:
            sample_weight = np.asarray([weights.weights[label] for label in y])
            estimator.fit(matrix, y_arr, sample_weight=sample_weight)
        else:
            estimator.fit(matrix, y_arr)
    for warning in caught:
        if issubclass(warning.category, ConvergenceWarning):
            converged = False
            warnings.warn(
                f"{spec.kind} hit its iteration cap "
                f"(max_iter={spec.hyperparams.get('max_iter')}); model returned as-is",
                NonConvergenceWarning,
                stacklevel=2,
            )
    return BaselineModel(spec, estimator, tuple(classes), matrix.shape[1], converged)


def predict_baseline(model: BaselineModel, X: Sequence[SparseVector]) -> list[str]:
    """One label per input vector; deterministic given the fitted model."""
    if not X:
        return []
    matrix = _to_csr(X)
    if matrix.shape[1] != model.dimension:
        raise DimensionMismatch(f"feature dimension {matrix.shape[1]} != {model.dimension}")
    return [str(label) for label in model.estimator.predict(matrix)]


@dataclass
class ExperimentResult:
    """Everything a baseline experiment produced, for auditing and manifests."""

    report: EvalReport
    model: BaselineModel
    tfidf: TfidfModel
    train_indices: tuple[int, ...]
    val_indices: tuple[int, ...]
    seed: int
    split: float


def run_baseline_experiment(
    ds: Dataset,
    spec: BaselineSpec,
    split: float = 0.8,
    seed: int = 0,
    preprocess_cfg: PreprocessConfig = NO_PREPROCESSING,
) -> ExperimentResult:
    """Seeded shuffle/split, leak-free tf-idf fit, train, validate.

    The tf-idf vocabulary is fitted on the training fold only, so
    validation-fold terms unseen in training contribute nothing.
    """
    if not 0.0 < split < 1.0:
        raise OfflangError(f"split must be in (0,1), got {split}")
    texts = [preprocess(t, preprocess_cfg) for t in ds.texts()]
    y = ds.label_values()
    n = len(texts)
    order = np.random.default_rng(seed).permutation(n)
    n_train = max(1, int(round(n * split)))
    if n_train >= n:
        n_train = n - 1
    train_idx = tuple(int(i) for i in order[:n_train])
    val_idx = tuple(int(i) for i in order[n_train:])

    train_texts = [texts[i] for i in train_idx]
    val_texts = [texts[i] for i in val_idx]
    y_train = [y[i] for i in train_idx]

    tfidf = fit_tfidf(train_texts)
    X_train = transform_corpus(tfidf, train_texts)
    X_val = transform_corpus(tfidf, val_texts)

    weights = None
    if spec.class_weighting == "balanced":
        counts = {c: y_train.count(c) for c in sorted(set(y_train))}
        weights = balanced_weights(counts)

    model = train_baseline(spec, X_train, y_train, weights)
    y_pred = predict_baseline(model, X_val)

    val_records = tuple(ds.records[i] for i in val_idx)
    val_ds = Dataset(val_records, ds.task, ds.language, ds.provenance + " [validation fold]")
    report = evaluate_predictions(val_ds, y_pred)
    return ExperimentResult(report, model, tfidf, train_idx, val_idx, seed, split)


_BASELINE_FORMAT = "offlang-baseline-v1"


def save_baseline(model: BaselineModel, tfidf: TfidfModel, path, preprocess_preset: str = "none") -> None:
    """Self-describing pickle container with spec, features, and estimator."""
    payload = {
        "format": _BASELINE_FORMAT,
        "spec": model.spec,
        "estimator": model.estimator,
        "label_set": model.label_set,
        "dimension": model.dimension,
        "tfidf": tfidf,
        "preprocess_preset": preprocess_preset,
    }
    try:
        with open(path, "wb") as fh:
            pickle.dump(payload, fh)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_baseline(path) -> tuple[BaselineModel, TfidfModel, str]:
    try:
        with open(path, "rb") as fh:
            payload = pickle.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != _BASELINE_FORMAT:
        raise IoFailure(f"{path} is not an {_BASELINE_FORMAT} container")
    model = BaselineModel(
        payload["spec"], payload["estimator"], payload["label_set"], payload["dimension"]
    )
    return model, payload["tfidf"], payload.get("preprocess_preset", "none")
