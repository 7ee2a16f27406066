"""Synthetic Gaussian ensembles with known ground truth, and Monte Carlo studies.

Trusted runs are unit-variance Gaussian vectors with a configurable
correlation structure.  Test runs come from the same law, optionally modified
by a shift (mean, variance or correlation).  Trusted and test draws use
separate seeded streams, so changing ``n`` never changes the trusted draw.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._util import (TAG_STUDY_TRIAL, TAG_TEST_DRAW, TAG_TRUSTED_DRAW, derive_seed, ordered_map,
                    stream)
from .classifier import ClassifierSpec
from .core import Decision, Ensemble, Role
from .errors import InvalidConfig
from .pca_baseline import pca_baseline_test
from .preprocess import apply_standardize, fit_standardize
from .testing import GofConfig, PermConfig, gof_test, two_sample_test


@dataclass(frozen=True)
class Independent:
    pass


@dataclass(frozen=True)
class AR1:
    rho: float

    def __post_init__(self):
        if not -1 < self.rho < 1:
            raise InvalidConfig("rho must lie in (-1, 1)")


@dataclass(frozen=True)
class Blocks:
    block_size: int
    rho: float

    def __post_init__(self):
        if not -1 < self.rho < 1:
            raise InvalidConfig("rho must lie in (-1, 1)")
        if self.block_size < 1:
            raise InvalidConfig("block_size must be >= 1")


@dataclass(frozen=True)
class SynthConfig:
    d: int
    m: int
    n: int
    correlation: Independent | AR1 | Blocks = field(default_factory=Independent)
    seed: int = 0

    def __post_init__(self):
        if self.d < 1 or self.m < 1 or self.n < 1:
            raise InvalidConfig("d, m and n must all be >= 1")
        c = self.correlation
        if isinstance(c, Blocks):
            if self.d % c.block_size:
                raise InvalidConfig("block_size must divide d")
            if c.rho <= -1.0 / (c.block_size - 1 if c.block_size > 1 else 1):
                raise InvalidConfig("block correlation matrix is not positive definite")


@dataclass(frozen=True)
class NoShift:
    def label(self):
        return "none:0"


def _subset(features):
    feats = tuple(int(f) for f in features)
    if not feats:
        raise InvalidConfig("feature_subset must be nonempty")
    return feats


@dataclass(frozen=True)
class MeanShift:
    delta: float
    features: tuple

    def __post_init__(self):
        object.__setattr__(self, "features", _subset(self.features))

    def label(self):
        return f"mean:{self.delta!r}"


@dataclass(frozen=True)
class VarianceScale:
    """Multiplies the variance of ``features`` by ``factor``."""
    factor: float
    features: tuple

    def __post_init__(self):
        object.__setattr__(self, "features", _subset(self.features))
        if self.factor <= 0:
            raise InvalidConfig("factor must be > 0")

    def label(self):
        return f"variance:{self.factor!r}"


@dataclass(frozen=True)
class CorrelationBreak:
    """Replaces ``features`` by independent unit normals (marginals unchanged)."""
    features: tuple

    def __post_init__(self):
        object.__setattr__(self, "features", _subset(self.features))

    def label(self):
        return "corrbreak:1"


def correlation_matrix(d, correlation):
    if isinstance(correlation, Independent):
        return np.eye(d)
    if isinstance(correlation, AR1):
        idx = np.arange(d)
        return correlation.rho ** np.abs(idx[:, None] - idx[None, :])
    if isinstance(correlation, Blocks):
        b = correlation.block_size
        block = np.full((b, b), correlation.rho)
        np.fill_diagonal(block, 1.0)
        return np.kron(np.eye(d // b), block)
    raise InvalidConfig(f"unknown correlation {correlation!r}")


def generate(cfg: SynthConfig, shift=None, role=Role.TRUSTED) -> Ensemble:
    """Draw the trusted (size m) or test (size n) ensemble of ``cfg``."""
    role = Role(role)
    shift = NoShift() if shift is None else shift
    for f in getattr(shift, "features", ()):
        if not 0 <= f < cfg.d:
            raise InvalidConfig(f"shifted feature {f} outside 0..{cfg.d - 1}")
    L = np.linalg.cholesky(correlation_matrix(cfg.d, cfg.correlation))
    if role is Role.TRUSTED:
        rng = stream(cfg.seed, TAG_TRUSTED_DRAW)
        size = cfg.m
    else:
        rng = stream(cfg.seed, TAG_TEST_DRAW)
        size = cfg.n
    X = rng.standard_normal((size, cfg.d)) @ L.T
    if role is Role.TEST and not isinstance(shift, NoShift):
        S = list(shift.features)
        if isinstance(shift, MeanShift):
            X[:, S] += shift.delta
        elif isinstance(shift, VarianceScale):
            X[:, S] *= math.sqrt(shift.factor)
        elif isinstance(shift, CorrelationBreak):
            X[:, S] = rng.standard_normal((size, len(S)))
        else:
            raise InvalidConfig(f"unknown shift {shift!r}")
    names = [f"x{j}" for j in range(cfg.d)]
    return Ensemble.from_matrix(X, names, role)


# -- studies -------------------------------------------------------------------

STUDY_COLUMNS = ("shift", "classifier", "method", "trials", "rejections",
                 "rejection_rate", "mc_se", "mean_p")
METHODS = ("gof", "test2s", "pca")


@dataclass(frozen=True)
class StudyRow:
    shift: str
    classifier: str
    method: str
    trials: int
    rejections: int
    rejection_rate: float
    mc_se: float
    mean_p: float | None

    def as_tuple(self):
        return tuple(getattr(self, c) for c in STUDY_COLUMNS)


@dataclass(frozen=True)
class StudyTable:
    rows: tuple
    config: dict = field(default_factory=dict)

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(STUDY_COLUMNS)
        for r in self.rows:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v)
                        for v in r.as_tuple()])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                fh.write(text)
        return text

    def to_dict(self):
        return {"columns": list(STUDY_COLUMNS),
                "rows": [dict(zip(STUDY_COLUMNS, r.as_tuple())) for r in self.rows],
                "config": self.config}

    def lookup(self, shift=None, classifier=None, method=None):
        return [r for r in self.rows
                if (shift is None or r.shift == shift)
                and (classifier is None or r.classifier == classifier)
                and (method is None or r.method == method)]


@dataclass(frozen=True)
class StudyOptions:
    """Calibration and baseline settings shared by every trial."""
    alpha: float = 0.05
    B: int = 99
    E: int = 99
    m_e: int | None = None
    n_pc: int = 50
    z_threshold: float = 2.0
    fail_count: int = 3


def run_trial(method, spec, synth, shift, opts, t):
    """One simulated dataset and one test; returns ``(failed, p_value)``.

    Data for trial ``t`` depend only on (study seed, t), so every shift,
    classifier and method sees the same underlying noise.
    """
    cfg = SynthConfig(synth.d, synth.m, synth.n, synth.correlation,
                      derive_seed(synth.seed, TAG_STUDY_TRIAL, t))
    trusted = generate(cfg, None, Role.TRUSTED)
    test = generate(cfg, shift, Role.TEST)
    test_seed = derive_seed(synth.seed, TAG_STUDY_TRIAL, t, 1)
    if method == "pca":
        rep = pca_baseline_test(trusted, test, opts.n_pc, opts.z_threshold, opts.fail_count)
        return rep.decision is Decision.FAIL, None
    params = fit_standardize(trusted)
    trusted, test = apply_standardize(trusted, params), apply_standardize(test, params)
    if method == "gof":
        rep = gof_test(trusted, test, spec, GofConfig(opts.E, opts.m_e, opts.alpha, test_seed))
    elif method == "test2s":
        rep = two_sample_test(trusted, test, spec, PermConfig(opts.B, opts.alpha, test_seed))
    else:
        raise InvalidConfig(f"unknown method {method!r}")
    return rep.decision is Decision.FAIL, rep.p_value


def _summarise(label, classifier, method, results):
    trials = len(results)
    rej = sum(1 for failed, _ in results if failed)
    rate = rej / trials
    ps = [p for _, p in results if p is not None]
    return StudyRow(label, classifier, method, trials, rej, rate,
                    math.sqrt(rate * (1.0 - rate) / trials),
                    float(np.mean(ps)) if ps else None)


def run_study(study, trials, method, specs, synth: SynthConfig, shifts=None,
              opts: StudyOptions | None = None, sizes=None, jobs=1) -> StudyTable:
    """Monte Carlo rejection rates over shifts x ensemble sizes x classifiers.

    ``study`` is "type1" (no shift allowed) or "power".  ``sizes`` optionally
    varies the trusted ensemble size m.  Rows come out in the order
    size, shift, classifier.
    """
    if study not in ("type1", "power"):
        raise InvalidConfig("study must be 'type1' or 'power'")
    if trials < 1:
        raise InvalidConfig("trials must be >= 1")
    if method not in METHODS:
        raise InvalidConfig(f"method must be one of {METHODS}")
    opts = opts or StudyOptions()
    shifts = [NoShift() if s is None else s for s in (shifts or [NoShift()])]
    if study == "type1" and any(not isinstance(s, NoShift) for s in shifts):
        raise InvalidConfig("a type1 study runs under the null only")
    if isinstance(specs, ClassifierSpec):
        specs = [specs]
    if method == "pca":
        specs = [None]
    size_list = [synth.m] if sizes is None else list(sizes)
    rows = []
    for m in size_list:
        cfg = SynthConfig(synth.d, m, synth.n, synth.correlation, synth.seed)
        for shift in shifts:
            label = shift.label() if sizes is None else f"m={m};{shift.label()}"
            for spec in specs:
                results = ordered_map(run_trial, range(trials),
                                      args=(method, spec, cfg, shift, opts), jobs=jobs)
                name = "pca" if spec is None else spec.kind.value
                rows.append(_summarise(label, name, method, results))
    config = {"study": study, "trials": trials, "method": method,
              "classifiers": [None if s is None else s.to_dict() for s in specs],
              "d": synth.d, "m": synth.m, "n": synth.n,
              "correlation": repr(synth.correlation), "seed": synth.seed,
              "sizes": size_list, "shifts": [repr(s) for s in shifts],
              "options": asdict(opts)}
    return StudyTable(tuple(rows), config)
