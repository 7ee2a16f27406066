"""Where do test runs differ? Per-run discrepancies and per-feature importances."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._util import TAG_IMPORTANCE, derive_seed, ordered_map, stream
from .classifier import ClassifierSpec, Pool, assign_folds, cross_fit_arrays, fold_keys
from .core import LabeledDataset, Method, pool_and_label
from .errors import InvalidConfig, LengthMismatch, ShapeMismatch
from .testing import (TAG_FOLDS, GofConfig, _check_gof, _report, gof_null_labels,
                      test_statistic)


@dataclass(frozen=True)
class DiagnosticsReport:
    local_discrepancies: tuple
    feature_importances: tuple
    significant_features: list
    alpha: float
    variable_names: tuple = ()
    run_ids: tuple = ()
    null_importances: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "variable_names": list(self.variable_names),
            "feature_importances": list(self.feature_importances),
            "significant_features": [
                {"name": n, "importance": imp, "null_quantile_exceeded": q}
                for n, imp, q in self.significant_features],
            "local_discrepancies": [
                {"id": rid, "discrepancy": v}
                for rid, v in zip(self.run_ids, self.local_discrepancies)],
            "null_importances": [list(row) for row in self.null_importances],
        }


def local_discrepancy(d: LabeledDataset, r_hats) -> np.ndarray:
    """r_hat(x_i) - pi_hat; positive values mark runs that look test-like."""
    r = np.asarray(r_hats, dtype=np.float64)
    if r.shape != (d.n_samples,):
        raise LengthMismatch(f"{r.shape[0]} predictions for {d.n_samples} samples")
    return r - float(d.labels.sum()) / d.n_samples


def _importances(cf, X, y, n_shuffles, seed, replicate):
    base = test_statistic(cf.predictions, y)
    n, d = X.shape
    out = np.zeros(d)
    for j in range(d):
        drops = []
        for s in range(n_shuffles):
            perm = stream(seed, TAG_IMPORTANCE, replicate, j, s).permutation(n)
            Xp = X.copy()
            Xp[:, j] = X[perm, j]
            drops.append(base - test_statistic(cf.predict(Xp), y))
        out[j] = max(0.0, float(np.mean(drops)))
    return out


def feature_importance(spec: ClassifierSpec, d: LabeledDataset, n_shuffles: int,
                       seed: int, balanced=None) -> np.ndarray:
    """Predict-time permutation importance of every feature.

    Importance of feature j is the mean drop of the test statistic when that
    column is shuffled before the (already fitted) out-of-fold models predict,
    floored at zero.
    """
    if n_shuffles < 1:
        raise InvalidConfig("n_shuffles must be >= 1")
    if balanced is None:
        balanced = spec.resolve_weighting(False)
    keys = fold_keys(d.ids, derive_seed(seed, TAG_FOLDS))
    y = np.asarray(d.labels)
    pool = Pool(d.rows)
    cf = cross_fit_arrays(spec, pool, y, assign_folds(keys, y, spec.folds), balanced)
    return _importances(cf, pool.X, y, n_shuffles, seed, 0)


def significant_features(importances, null_importances, alpha, variable_names=None):
    """Features whose importance beats the (1 - alpha) quantile of their null column.

    The quantile is the order statistic ``ceil((1 - alpha) * E)`` of the E null
    values.  Returns ``(name, importance, q)`` triples where ``q`` is the
    fraction of null values strictly below the observed importance.
    """
    imp = np.asarray(importances, dtype=np.float64)
    null = np.asarray(null_importances, dtype=np.float64)
    if null.ndim != 2 or null.shape[1] != imp.shape[0] or null.shape[0] < 1:
        raise ShapeMismatch(f"null importances {null.shape} vs {imp.shape[0]} features")
    if not 0 < alpha < 1:
        raise InvalidConfig("alpha must lie in (0, 1)")
    if variable_names is None:
        variable_names = [f"f{j}" for j in range(imp.shape[0])]
    E = null.shape[0]
    rank = min(E, max(1, int(np.ceil((1.0 - alpha) * E - 1e-12))))
    cutoff = np.sort(null, axis=0)[rank - 1]
    out = []
    for j in range(imp.shape[0]):
        if imp[j] > cutoff[j]:
            q = float(np.count_nonzero(null[:, j] < imp[j])) / E
            out.append((variable_names[j], float(imp[j]), q))
    return out


def _gof_diag_replicate(spec, pool, m_e, keys, seed, balanced, n_shuffles, e):
    y = gof_null_labels(pool.X.shape[0], m_e, seed, e)
    cf = cross_fit_arrays(spec, pool, y, assign_folds(keys, y, spec.folds), balanced)
    return (test_statistic(cf.predictions, y),
            _importances(cf, pool.X, y, n_shuffles, seed, e))


def diagnose(trusted, test, spec: ClassifierSpec, cfg: GofConfig, n_shuffles=5, jobs=1):
    """Goodness-of-fit test plus diagnostics calibrated on the same null replicates.

    Returns ``(TestReport, DiagnosticsReport)``.  Null importances are
    recomputed inside every trusted-only replicate, so each feature is judged
    against its own null distribution.
    """
    if n_shuffles < 1:
        raise InvalidConfig("n_shuffles must be >= 1")
    d = pool_and_label(trusted, test)
    m, n = trusted.n_runs, test.n_runs
    m_e = n if cfg.m_e is None else cfg.m_e
    _check_gof(m, n, m_e, spec.folds)
    balanced = spec.resolve_weighting(False)
    keys = fold_keys(d.ids, derive_seed(cfg.seed, TAG_FOLDS))
    y = np.asarray(d.labels)
    pool = Pool(d.rows)
    cf = cross_fit_arrays(spec, pool, y, assign_folds(keys, y, spec.folds), balanced)
    observed = test_statistic(cf.predictions, y)
    importances = _importances(cf, pool.X, y, n_shuffles, cfg.seed, 0)
    reps = ordered_map(_gof_diag_replicate, range(1, cfg.E + 1),
                       args=(spec, Pool(trusted.X), m_e, keys[:m], cfg.seed, balanced,
                             n_shuffles), jobs=jobs)
    nulls = [r[0] for r in reps]
    null_imp = np.array([r[1] for r in reps])
    report = _report(observed, nulls, n / (m + n), cfg.alpha, cfg.seed, spec,
                     Method.GOODNESS_OF_FIT,
                     {"E": cfg.E, "m_e": m_e, "alpha": cfg.alpha, "seed": cfg.seed,
                      "n_shuffles": n_shuffles},
                     {"n_trusted": m, "n_test": n,
                      "class_weight": "balanced" if balanced else "none",
                      "kernel_backend": kernels.BACKEND})
    diag = DiagnosticsReport(
        local_discrepancies=tuple(float(v) for v in local_discrepancy(d, cf.predictions)),
        feature_importances=tuple(float(v) for v in importances),
        significant_features=significant_features(importances, null_imp, cfg.alpha,
                                                  d.variable_names),
        alpha=cfg.alpha,
        variable_names=d.variable_names,
        run_ids=d.ids,
        null_importances=null_imp.tolist(),
    )
    return report, diag
