"""Baseline: pass/fail from leading PCA scores of the trusted ensemble.

A simplified z-score rule, kept for head-to-head comparison with the
classifier tests.  It is not a port of any released ECT tool.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import Decision, Ensemble, Method, Run, TestReport
from .errors import (DegenerateEnsemble, DegenerateVariance, InvalidConfig,
                     InvalidConfigWarning, SchemaMismatch)


@dataclass(frozen=True)
class PcaModel:
    means: np.ndarray
    sds: np.ndarray
    components: np.ndarray          # (features, n_pc), orthonormal columns
    explained_variance: np.ndarray  # non-increasing
    n_pc: int
    variable_names: tuple = ()


def fit_pca(trusted: Ensemble, n_pc: int = 50) -> PcaModel:
    """Top ``n_pc`` eigenvectors of the standardized trusted covariance.

    ``n_pc`` is capped at min(features, runs - 1), the largest possible rank
    of the sample covariance.  Each component is signed so that its
    largest-magnitude coordinate is positive.
    """
    X = trusted.X
    m, d = X.shape
    if m < 2:
        raise DegenerateEnsemble("PCA needs at least 2 trusted runs")
    if n_pc < 1:
        raise InvalidConfig("n_pc must be >= 1")
    means = X.mean(axis=0)
    sds = X.std(axis=0, ddof=1)
    if np.any(sds < 1e-12):
        raise DegenerateVariance("zero-variance features must be filtered before PCA")
    Z = (X - means) / sds
    cov = Z.T @ Z / (m - 1)
    evals, evecs = np.linalg.eigh(cov)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    k = min(n_pc, d, m - 1)
    comps = evecs[:, :k].copy()
    lead = np.argmax(np.abs(comps), axis=0)
    signs = np.sign(comps[lead, np.arange(k)])
    comps *= np.where(signs == 0, 1.0, signs)
    return PcaModel(means, sds, comps, np.maximum(evals[:k], 0.0), k,
                    trusted.variable_names)


def _check(model, names, n_features):
    if n_features != model.means.shape[0] or (
            model.variable_names and names and tuple(names) != model.variable_names):
        raise SchemaMismatch("run schema differs from the PCA fitting ensemble")


def project(model: PcaModel, run) -> np.ndarray:
    """PCA scores of a run (or of every row of a matrix)."""
    if isinstance(run, Run):
        _check(model, run.variable_names, run.features.shape[0])
        x = run.features
    else:
        x = np.asarray(run, dtype=np.float64)
        _check(model, None, x.shape[-1])
    return ((x - model.means) / model.sds) @ model.components


def reconstruction_error(model: PcaModel, X, k: int) -> float:
    """Mean squared error of standardized rows rebuilt from the first k components."""
    Z = (np.asarray(X) - model.means) / model.sds
    C = model.components[:, :k]
    return float(np.mean((Z - (Z @ C) @ C.T) ** 2))


def pca_ect(model: PcaModel, trusted_scores, test: Ensemble, z_threshold: float = 2.0,
            fail_count: int = 3) -> TestReport:
    """Flag runs with at least ``fail_count`` extreme scores; Fail on a majority.

    A score is extreme when ``|score_k| > z_threshold * sd_k`` with ``sd_k`` the
    sample sd of component k over the trusted scores.  Components with zero
    trusted variance carry no information and are never counted.
    """
    if z_threshold <= 0 or fail_count < 1:
        raise InvalidConfig("need z_threshold > 0 and fail_count >= 1")
    if fail_count > model.n_pc:
        warnings.warn(f"fail_count={fail_count} exceeds n_pc={model.n_pc}: "
                      "no run can ever fail", InvalidConfigWarning, stacklevel=2)
    _check(model, test.variable_names, test.n_features)
    ts = np.asarray(trusted_scores, dtype=np.float64)
    if ts.ndim != 2 or ts.shape[1] != model.n_pc:
        raise SchemaMismatch("trusted_scores do not match the model's components")
    sd = ts.std(axis=0, ddof=1)
    live = sd > 1e-12 * max(sd.max(), 1e-300)
    scores = project(model, test.X)
    extreme = (np.abs(scores) > z_threshold * sd) & live
    counts = extreme.sum(axis=1)
    failing = counts >= fail_count
    n_fail = int(failing.sum())
    decision = Decision.FAIL if 2 * n_fail > test.n_runs else Decision.PASS
    n_trusted = ts.shape[0]
    return TestReport(
        statistic_observed=n_fail / test.n_runs,
        null_statistics=(),
        p_value=None,
        alpha=0.0,
        decision=decision,
        class_prior_hat=test.n_runs / (test.n_runs + n_trusted),
        seed=0,
        classifier={"kind": "pca"},
        method=Method.PCA_BASELINE,
        config={"n_pc": model.n_pc, "z_threshold": z_threshold, "fail_count": fail_count},
        details={"n_trusted": n_trusted, "n_test": test.n_runs,
                 "extreme_counts": [int(c) for c in counts],
                 "failing_runs": [rid for rid, f in zip(test.ids, failing) if f]},
    )


def pca_baseline_test(trusted: Ensemble, test: Ensemble, n_pc: int = 50,
                      z_threshold: float = 2.0, fail_count: int = 3) -> TestReport:
    model = fit_pca(trusted, n_pc)
    return pca_ect(model, project(model, trusted.X), test, z_threshold, fail_count)
