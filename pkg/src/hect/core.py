"""Domain types (runs, ensembles, labeled pools, reports) and pooling."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (DuplicateRunId, EmptyEnsemble, LengthMismatch, NonFiniteValue,
                     SchemaMismatch, SingleClass)


class Role(str, Enum):
    TRUSTED = "trusted"
    TEST = "test"


class Decision(str, Enum):
    PASS = "Pass"
    FAIL = "Fail"


class Method(str, Enum):
    TWO_SAMPLE_PERMUTATION = "TwoSamplePermutation"
    GOODNESS_OF_FIT = "GoodnessOfFit"
    PCA_BASELINE = "PcaBaseline"


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Run:
    """One simulation output reduced to a feature vector."""
    features: np.ndarray
    variable_names: tuple
    id: str

    def __post_init__(self):
        x = _frozen(self.features)
        if x.ndim != 1:
            raise ValueError("run features must be a vector")
        names = tuple(self.variable_names)
        if len(names) != x.shape[0]:
            raise LengthMismatch(
                f"run {self.id!r}: {x.shape[0]} features but {len(names)} names")
        if not np.all(np.isfinite(x)):
            raise NonFiniteValue(f"run {self.id!r} contains non-finite values")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "variable_names", names)


@dataclass(frozen=True)
class Ensemble:
    """Runs sharing one feature schema, stored as a (runs x features) matrix.

    ``name`` identifies the ensemble in fitted parameters (e.g. which ensemble a
    standardization was fit on).
    """
    X: np.ndarray
    variable_names: tuple
    ids: tuple
    role: Role
    name: str = ""

    def __post_init__(self):
        X = _frozen(self.X)
        if X.ndim != 2:
            raise ValueError("ensemble matrix must be 2-D")
        if X.shape[0] == 0:
            raise EmptyEnsemble(f"{Role(self.role).value} ensemble is empty")
        names = tuple(self.variable_names)
        ids = tuple(str(i) for i in self.ids)
        if len(names) != X.shape[1]:
            raise LengthMismatch(f"{X.shape[1]} features but {len(names)} names")
        if len(ids) != X.shape[0]:
            raise LengthMismatch(f"{X.shape[0]} runs but {len(ids)} ids")
        if len(set(ids)) != len(ids):
            raise DuplicateRunId("run ids within an ensemble must be unique")
        if not np.all(np.isfinite(X)):
            bad = int(np.argwhere(~np.isfinite(X))[0, 0])
            raise NonFiniteValue(f"run {ids[bad]!r} contains non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "variable_names", names)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "role", Role(self.role))
        if not self.name:
            object.__setattr__(self, "name", self.role.value)

    @classmethod
    def from_runs(cls, runs: Sequence[Run], role, name=""):
        if len(runs) == 0:
            raise EmptyEnsemble(f"{Role(role).value} ensemble is empty")
        names = runs[0].variable_names
        for r in runs[1:]:
            if r.variable_names != names:
                raise SchemaMismatch(f"run {r.id!r} has a different variable schema")
        X = np.vstack([r.features for r in runs])
        return cls(X, names, [r.id for r in runs], role, name)

    @classmethod
    def from_matrix(cls, X, variable_names=None, role=Role.TRUSTED, ids=None,
                    name=""):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if variable_names is None:
            variable_names = [f"f{j}" for j in range(X.shape[1])]
        if ids is None:
            ids = [f"{Role(role).value}-{i:05d}" for i in range(X.shape[0])]
        return cls(X, variable_names, ids, role, name)

    @property
    def runs(self):
        return [Run(self.X[i], self.variable_names, self.ids[i])
                for i in range(self.X.shape[0])]

    @property
    def n_runs(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    def replace(self, X=None, variable_names=None, role=None, name=None):
        return Ensemble(self.X if X is None else X,
                        self.variable_names if variable_names is None else variable_names,
                        self.ids, self.role if role is None else role,
                        self.name if name is None else name)

    def subset(self, rows):
        rows = np.asarray(rows)
        return Ensemble(self.X[rows], self.variable_names,
                        [self.ids[i] for i in rows], self.role, self.name)


@dataclass(frozen=True)
class LabeledDataset:
    """Pooled runs with labels 0 (trusted) and 1 (test)."""
    rows: np.ndarray
    labels: np.ndarray
    variable_names: tuple
    ids: tuple

    def __post_init__(self):
        rows = _frozen(self.rows)
        labels = np.array(self.labels, dtype=np.int8)
        labels.setflags(write=False)
        if rows.ndim != 2 or labels.ndim != 1:
            raise ValueError("rows must be 2-D and labels 1-D")
        if rows.shape[0] != labels.shape[0]:
            raise LengthMismatch(
                f"{rows.shape[0]} rows but {labels.shape[0]} labels")
        if len(self.ids) != rows.shape[0]:
            raise LengthMismatch("one id per row required")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        n1 = int(labels.sum())
        if n1 == 0 or n1 == labels.shape[0]:
            raise SingleClass("dataset needs at least one run of each label")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "variable_names", tuple(self.variable_names))
        object.__setattr__(self, "ids", tuple(self.ids))

    @property
    def n_samples(self):
        return self.rows.shape[0]

    def relabel(self, labels):
        return LabeledDataset(self.rows, labels, self.variable_names, self.ids)


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # keep pytest from collecting this class

    statistic_observed: float
    null_statistics: tuple
    p_value: float | None
    alpha: float
    decision: Decision
    class_prior_hat: float
    seed: int
    classifier: dict
    method: Method
    config: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "statistic_observed": self.statistic_observed,
            "null_statistics": list(self.null_statistics),
            "p_value": self.p_value,
            "alpha": self.alpha,
            "decision": Decision(self.decision).value,
            "class_prior_hat": self.class_prior_hat,
            "seed": self.seed,
            "classifier": dict(self.classifier),
            "method": Method(self.method).value,
            "config": dict(self.config),
            "details": dict(self.details),
        }


def pool_and_label(trusted: Ensemble, test: Ensemble) -> LabeledDataset:
    """Stack trusted runs (label 0) above test runs (label 1)."""
    if trusted.role != Role.TRUSTED or test.role != Role.TEST:
        raise ValueError("expected a trusted and a test ensemble, in that order")
    if trusted.variable_names != test.variable_names:
        raise SchemaMismatch("trusted and test ensembles have different variables")
    if set(trusted.ids) & set(test.ids):
        raise DuplicateRunId("trusted and test ensembles share run ids")
    rows = np.vstack([trusted.X, test.X])
    labels = np.r_[np.zeros(trusted.n_runs, np.int8), np.ones(test.n_runs, np.int8)]
    return LabeledDataset(rows, labels, trusted.variable_names, trusted.ids + test.ids)


def estimate_class_prior(d: LabeledDataset) -> float:
    return int(d.labels.sum()) / d.labels.shape[0]
