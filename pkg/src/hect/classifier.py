"""Probabilistic classifiers for r(x) = P(Y=1 | X=x) and out-of-fold cross-fitting.

Four estimators are available: a constant prior (the no-information
baseline), L2-regularised logistic regression, gradient boosted stumps and
k-nearest neighbours.  Predictions are always clipped to ``[EPS, 1 - EPS]``.

Cross-fitting assigns every sample to one of K folds through a key derived
from ``(seed, run id)``; each sample is predicted by the model fitted on the
other K-1 folds.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from ._util import id_keys
from .core import LabeledDataset
from .errors import InvalidConfig, NonFiniteLoss, SchemaMismatch, SingleClass, TooFewSamples

EPS = 1e-6


class Kind(str, Enum):
    CONSTANT = "constant"
    LOGISTIC = "logistic"
    GBSTUMPS = "gbstumps"
    KNN = "knn"


CLASS_WEIGHTS = ("auto", "balanced", "none")


@dataclass(frozen=True)
class ClassifierSpec:
    """Classifier choice plus hyperparameters.

    ``class_weight="auto"`` lets the calling test decide: inverse-frequency
    weights for the permutation two-sample test, none for the goodness-of-fit
    test.  Only the hyperparameters of ``kind`` are used.
    """
    kind: Kind = Kind.LOGISTIC
    folds: int = 5
    l2_lambda: float = 0.1
    max_iters: int = 1000
    tol: float = 1e-6
    n_rounds: int = 30
    learning_rate: float = 0.25
    max_leaves: int = 2
    k: int = 10
    class_weight: str = "auto"

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", Kind(self.kind))
        except ValueError:
            raise InvalidConfig(f"unknown classifier kind {self.kind!r}") from None
        checks = [
            (self.folds >= 2, "folds must be >= 2"),
            (self.l2_lambda >= 0, "l2_lambda must be >= 0"),
            (self.max_iters >= 1, "max_iters must be >= 1"),
            (self.tol > 0, "tol must be > 0"),
            (self.n_rounds >= 1, "n_rounds must be >= 1"),
            (0 < self.learning_rate <= 1, "learning_rate must lie in (0, 1]"),
            (self.max_leaves == 2, "only depth-1 trees (max_leaves=2) are supported"),
            (self.k >= 1, "k must be >= 1"),
            (self.class_weight in CLASS_WEIGHTS, f"class_weight must be one of {CLASS_WEIGHTS}"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InvalidConfig(msg)

    def to_dict(self):
        out = asdict(self)
        out["kind"] = self.kind.value
        return out

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise InvalidConfig(f"unknown classifier settings: {sorted(extra)}")
        return cls(**d)

    def resolve_weighting(self, default):
        if self.class_weight == "auto":
            return bool(default)
        return self.class_weight == "balanced"


@dataclass(frozen=True)
class FittedClassifier:
    kind: Kind
    n_features: int
    params: dict = field(repr=False)
    # logit(training prior) - logit(weighted prior): undoes class reweighting
    prior_offset: float = 0.0
    variable_names: tuple = ()


def _logit(p):
    return float(np.log(p / (1.0 - p)))


def _sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def class_weights(y, balanced):
    """Per-sample weights; inverse class frequency when ``balanced``."""
    if not balanced:
        return np.ones(y.shape[0])
    n1 = y.sum()
    n0 = y.shape[0] - n1
    return np.where(y == 1, y.shape[0] / (2.0 * n1), y.shape[0] / (2.0 * n0))


def _fit_arrays(spec, X, y, balanced=False, order=None):
    y = np.asarray(y, dtype=np.float64)
    n1 = y.sum()
    if n1 == 0 or n1 == y.shape[0]:
        raise SingleClass("training data contains a single class")
    X = np.ascontiguousarray(X, dtype=np.float64)
    prior = n1 / y.shape[0]
    kind = spec.kind
    if kind is Kind.CONSTANT:
        return FittedClassifier(kind, X.shape[1], {"prior": prior})
    if kind is Kind.KNN:
        return FittedClassifier(kind, X.shape[1], {"X": X, "y": y, "k": spec.k})

    w = class_weights(y, balanced)
    offset = _logit(prior) - _logit(np.dot(w, y) / w.sum()) if balanced else 0.0
    if kind is Kind.LOGISTIC:
        coef, bias, n_iter, loss = kernels.logistic_fit(
            X, y, w, spec.l2_lambda, spec.max_iters, spec.tol)
        if not (np.isfinite(loss) and np.all(np.isfinite(coef)) and np.isfinite(bias)):
            raise NonFiniteLoss("logistic regression diverged")
        params = {"coef": coef, "bias": bias, "n_iter": n_iter, "loss": loss}
    else:
        if order is None:
            order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)
        feat, thr, left, right, init, losses = kernels.stumps_fit(
            X, order, y, w, spec.n_rounds, spec.learning_rate, 1.0)
        if not np.all(np.isfinite(losses)):
            raise NonFiniteLoss("boosting diverged")
        params = {"feat": feat, "thr": thr, "left": left, "right": right,
                  "init": init, "losses": losses}
    return FittedClassifier(kind, X.shape[1], params, offset)


def fit(spec: ClassifierSpec, d: LabeledDataset, balanced=None) -> FittedClassifier:
    """Fit ``spec`` on the whole of ``d``.

    ``balanced`` overrides the spec's class weighting; ``None`` means weights
    only when ``class_weight="balanced"``.
    """
    if balanced is None:
        balanced = spec.resolve_weighting(False)
    f = _fit_arrays(spec, d.rows, d.labels, balanced)
    return FittedClassifier(f.kind, f.n_features, f.params, f.prior_offset,
                            d.variable_names)


def _knn_proba(params, X):
    Xt, yt = params["X"], params["y"]
    k = min(params["k"], Xt.shape[0])
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        dist = ((Xt - X[i]) ** 2).sum(axis=1)
        nearest = np.argsort(dist, kind="stable")[:k]
        out[i] = yt[nearest].mean()
    return out


def _predict_arrays(f, X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    p = f.params
    if f.kind is Kind.CONSTANT:
        out = np.full(X.shape[0], p["prior"])
    elif f.kind is Kind.KNN:
        out = _knn_proba(p, X)
    elif f.kind is Kind.LOGISTIC:
        out = _sigmoid(kernels.logistic_decision(X, p["coef"], p["bias"]) + f.prior_offset)
    else:
        z = kernels.stumps_decision(X, p["feat"], p["thr"], p["left"], p["right"], p["init"])
        out = _sigmoid(z + f.prior_offset)
    return np.clip(out, EPS, 1.0 - EPS)


def predict_proba(f: FittedClassifier, x):
    """Clipped estimate of P(Y=1 | x); a float for one vector, an array for rows."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != f.n_features:
        raise SchemaMismatch(
            f"classifier trained on {f.n_features} features, got {X.shape[-1]}")
    out = _predict_arrays(f, X)
    return float(out[0]) if single else out


# -- folds -------------------------------------------------------------------

def fold_keys(ids, seed):
    """Per-run fold keys; a pure function of (seed, run id)."""
    return id_keys(ids, seed)


def assign_folds(keys, labels, k):
    """Fold index per sample.

    Within each class the K samples with the smallest keys take one seat in
    each fold, so every training set keeps both classes.  All remaining samples
    go to fold ``floor(key * K)``.  Fold sizes therefore vary with the labeling,
    which is what lets a no-information classifier produce a non-degenerate
    statistic.
    """
    keys = np.asarray(keys)
    labels = np.asarray(labels)
    folds = np.minimum((keys * k).astype(np.int64), k - 1)
    for c in (0, 1):
        idx = np.flatnonzero(labels == c)
        if idx.shape[0] < k:
            raise TooFewSamples(
                f"{k}-fold cross-fitting needs >= {k} samples of label {c}, "
                f"found {idx.shape[0]}")
        seated = idx[np.lexsort((idx, keys[idx]))[:k]]
        folds[seated] = np.arange(k)
    return folds


class Pool:
    """Design matrix shared by many cross-fits that differ only in labels."""

    def __init__(self, X):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self._order = None

    @property
    def order(self):
        if self._order is None:
            self._order = np.ascontiguousarray(
                np.argsort(self.X, axis=0, kind="stable").T)
        return self._order

    def train_order(self, mask):
        """Stable per-column sort order restricted to the rows in ``mask``."""
        full = self.order
        local = np.cumsum(mask) - 1
        kept = full[mask[full]].reshape(full.shape[0], -1)
        return np.ascontiguousarray(local[kept])


@dataclass
class CrossFit:
    predictions: np.ndarray
    folds: np.ndarray
    models: list

    def predict(self, X):
        """Out-of-fold predictions for a row-aligned (e.g. perturbed) matrix."""
        out = np.empty(X.shape[0])
        for k, model in enumerate(self.models):
            rows = self.folds == k
            out[rows] = _predict_arrays(model, X[rows])
        return out


def cross_fit_arrays(spec, pool, y, folds, balanced):
    y = np.asarray(y, dtype=np.float64)
    preds = np.empty(y.shape[0])
    models = []
    for k in range(spec.folds):
        test = folds == k
        train = ~test
        order = pool.train_order(train) if spec.kind is Kind.GBSTUMPS else None
        model = _fit_arrays(spec, pool.X[train], y[train], balanced, order)
        preds[test] = _predict_arrays(model, pool.X[test])
        models.append(model)
    return CrossFit(preds, folds, models)


def cross_fit(spec: ClassifierSpec, d: LabeledDataset, seed: int, balanced=None) -> CrossFit:
    if balanced is None:
        balanced = spec.resolve_weighting(False)
    folds = assign_folds(fold_keys(d.ids, seed), d.labels, spec.folds)
    return cross_fit_arrays(spec, Pool(d.rows), d.labels, folds, balanced)


def cross_fit_predictions(spec: ClassifierSpec, d: LabeledDataset, seed: int,
                          balanced=None) -> np.ndarray:
    """One out-of-fold prediction per sample, in sample order."""
    return cross_fit(spec, d, seed, balanced).predictions
