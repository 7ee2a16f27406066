"""Classifier-based test statistic with permutation and goodness-of-fit calibration.

The statistic is the mean squared deviation of the out-of-fold class
posterior estimates from the pooled test fraction,

    T = 1/(n+m) * sum_i (r_hat(x_i) - pi_hat)^2,

which is zero when the classifier carries no information about the labels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._util import (TAG_GOF_REPLICATE, TAG_PERMUTATION, derive_seed, ordered_map,
                    stream)
from .classifier import ClassifierSpec, Pool, assign_folds, cross_fit_arrays, fold_keys
from .core import Decision, Ensemble, Method, TestReport, pool_and_label
from .errors import (EmptyNull, InsufficientTrusted, InvalidConfig, LengthMismatch,
                     SingleClass, TooFewSamples)

TAG_FOLDS = 7


@dataclass(frozen=True)
class PermConfig:
    B: int = 1000
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.B < 19:
            raise InvalidConfig("B must be >= 19 permutations")
        if not 0 < self.alpha < 1:
            raise InvalidConfig("alpha must lie in (0, 1)")
        if self.seed < 0:
            raise InvalidConfig("seed must be non-negative")


@dataclass(frozen=True)
class GofConfig:
    """``m_e`` is the pseudo-test size per null replicate; ``None`` means n."""
    E: int = 200
    m_e: int | None = None
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.E < 19:
            raise InvalidConfig("E must be >= 19 null ensembles")
        if self.m_e is not None and self.m_e < 1:
            raise InsufficientTrusted("m_e must be >= 1")
        if not 0 < self.alpha < 1:
            raise InvalidConfig("alpha must lie in (0, 1)")
        if self.seed < 0:
            raise InvalidConfig("seed must be non-negative")


def test_statistic(r_hats, labels) -> float:
    """Mean squared deviation of ``r_hats`` from the label-1 fraction.

    The sum is exactly rounded (``math.fsum``), so the value does not depend
    on sample order.
    """
    r = np.asarray(r_hats, dtype=np.float64)
    y = np.asarray(labels)
    if r.shape != y.shape or r.ndim != 1:
        raise LengthMismatch(f"{r.shape} predictions vs {y.shape} labels")
    n1 = int(np.count_nonzero(y == 1))
    if n1 == 0 or n1 == y.shape[0]:
        raise SingleClass("labels contain a single class")
    pi1 = n1 / y.shape[0]
    return math.fsum((r - pi1) ** 2) / y.shape[0]


test_statistic.__test__ = False


def p_value(observed: float, nulls) -> float:
    """Add-one resampling p-value; ties count against the null."""
    nulls = np.asarray(nulls, dtype=np.float64)
    if nulls.size == 0:
        raise EmptyNull("no null statistics")
    return (1 + int(np.count_nonzero(nulls >= observed))) / (nulls.size + 1)


def _statistic(spec, pool, y, keys, balanced):
    folds = assign_folds(keys, y, spec.folds)
    cf = cross_fit_arrays(spec, pool, y, folds, balanced)
    return test_statistic(cf.predictions, y)


def _permutation_replicate(spec, pool, labels, keys, seed, balanced, b):
    y = stream(seed, TAG_PERMUTATION, b).permutation(labels)
    return _statistic(spec, pool, y, keys, balanced)


def gof_null_labels(m, m_e, seed, e):
    """Labels for null replicate ``e``: ``m_e`` trusted runs relabeled as test."""
    y = np.zeros(m, dtype=np.int8)
    y[stream(seed, TAG_GOF_REPLICATE, e).choice(m, size=m_e, replace=False)] = 1
    return y


def _gof_replicate(spec, pool, m_e, keys, seed, balanced, e):
    y = gof_null_labels(pool.X.shape[0], m_e, seed, e)
    return _statistic(spec, pool, y, keys, balanced)


def _report(observed, nulls, prior, alpha, seed, spec, method, config, details):
    p = p_value(observed, nulls)
    return TestReport(
        statistic_observed=float(observed),
        null_statistics=tuple(float(v) for v in nulls),
        p_value=p,
        alpha=alpha,
        decision=Decision.FAIL if p <= alpha else Decision.PASS,
        class_prior_hat=prior,
        seed=seed,
        classifier=spec.to_dict(),
        method=method,
        config=config,
        details=details,
    )


def two_sample_test(trusted: Ensemble, test: Ensemble, spec: ClassifierSpec,
                    cfg: PermConfig, jobs=1) -> TestReport:
    """Permutation test of P_trusted = P_test via cross-fitted classification."""
    d = pool_and_label(trusted, test)
    counts = (trusted.n_runs, test.n_runs)
    if min(counts) < spec.folds:
        raise TooFewSamples(
            f"{spec.folds}-fold cross-fitting needs >= {spec.folds} runs per ensemble")
    balanced = spec.resolve_weighting(True)
    pool = Pool(d.rows)
    keys = fold_keys(d.ids, derive_seed(cfg.seed, TAG_FOLDS))
    labels = np.asarray(d.labels)
    observed = _statistic(spec, pool, labels, keys, balanced)
    nulls = ordered_map(_permutation_replicate, range(1, cfg.B + 1),
                        args=(spec, pool, labels, keys, cfg.seed, balanced), jobs=jobs)
    return _report(observed, nulls, test.n_runs / d.n_samples, cfg.alpha, cfg.seed,
                   spec, Method.TWO_SAMPLE_PERMUTATION,
                   {"B": cfg.B, "alpha": cfg.alpha, "seed": cfg.seed},
                   {"n_trusted": counts[0], "n_test": counts[1],
                    "class_weight": "balanced" if balanced else "none",
                    "kernel_backend": kernels.BACKEND})


def _check_gof(m, n, m_e, folds):
    if m_e < 1 or m - m_e < folds:
        raise InsufficientTrusted(
            f"need m - m_e >= {folds} and m_e >= 1 (m={m}, m_e={m_e})")
    if m_e < folds or n < folds:
        raise TooFewSamples(
            f"{folds}-fold cross-fitting needs >= {folds} test runs (n={n}, m_e={m_e})")


def gof_test(trusted: Ensemble, test: Ensemble, spec: ClassifierSpec,
             cfg: GofConfig, jobs=1) -> TestReport:
    """Goodness-of-fit test with a null built from trusted-only replicates.

    Each null replicate relabels ``m_e`` randomly chosen trusted runs as
    "test" and reruns the identical cross-fit pipeline on the trusted
    ensemble alone; the actual test runs never enter the null.
    """
    d = pool_and_label(trusted, test)
    m, n = trusted.n_runs, test.n_runs
    m_e = n if cfg.m_e is None else cfg.m_e
    _check_gof(m, n, m_e, spec.folds)
    balanced = spec.resolve_weighting(False)
    keys = fold_keys(d.ids, derive_seed(cfg.seed, TAG_FOLDS))
    observed = _statistic(spec, Pool(d.rows), np.asarray(d.labels), keys, balanced)
    nulls = ordered_map(_gof_replicate, range(1, cfg.E + 1),
                        args=(spec, Pool(trusted.X), m_e, keys[:m], cfg.seed, balanced),
                        jobs=jobs)
    return _report(observed, nulls, n / (m + n), cfg.alpha, cfg.seed, spec,
                   Method.GOODNESS_OF_FIT,
                   {"E": cfg.E, "m_e": m_e, "alpha": cfg.alpha, "seed": cfg.seed},
                   {"n_trusted": m, "n_test": n,
                    "class_weight": "balanced" if balanced else "none",
                    "kernel_backend": kernels.BACKEND})
