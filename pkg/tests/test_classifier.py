import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hect import kernels
from hect.classifier import (EPS, ClassifierSpec, Kind, Pool, _fit_arrays, assign_folds,
                             class_weights, cross_fit, cross_fit_predictions, fit, fold_keys,
                             predict_proba)
from hect.core import LabeledDataset
from hect.errors import InvalidConfig, SchemaMismatch, SingleClass, TooFewSamples

BACKENDS = [b for b in ("cython", "python") if b in kernels.available()]


def dataset(n=80, d=4, shift=1.0, seed=0):
    rng = np.random.default_rng(seed)
    y = (np.arange(n) % 4 == 0).astype(np.int8)
    X = rng.standard_normal((n, d))
    X[y == 1, 0] += shift
    return LabeledDataset(X, y, [f"x{j}" for j in range(d)], [f"r{i}" for i in range(n)])


def newton_logistic(X, y, w, lam, iters=50):
    """Independent oracle: Newton's method on the same penalised objective."""
    n, d = X.shape
    A = np.c_[X, np.ones(n)]
    beta = np.zeros(d + 1)
    P = np.diag(np.r_[np.full(d, lam), 0.0])
    W = w / w.sum()
    for _ in range(iters):
        p = 1.0 / (1.0 + np.exp(-A @ beta))
        g = A.T @ (W * (p - y)) + P @ beta
        H = (A * (W * p * (1 - p))[:, None]).T @ A + P
        beta -= np.linalg.solve(H, g)
    return beta[:d], beta[d]


@pytest.mark.parametrize("backend", BACKENDS)
def test_logistic_matches_newton_oracle(backend):
    k = kernels.load(backend)
    rng = np.random.default_rng(3)
    X = rng.standard_normal((60, 3))
    y = (X[:, 0] + rng.standard_normal(60) > 0).astype(float)
    w = np.where(y == 1, 1.5, 0.7)
    coef, bias, _, _ = k.logistic_fit(X, y, w, 0.1, 5000, 1e-10)
    c_ref, b_ref = newton_logistic(X, y, w, 0.1)
    np.testing.assert_allclose(coef, c_ref, atol=1e-8)
    assert abs(bias - b_ref) < 1e-8


def test_sigmoid_of_log3():
    # weight ln 3 on a unit feature gives P = 3/4
    f = fit(ClassifierSpec(), dataset())
    f2 = type(f)(Kind.LOGISTIC, 1, {"coef": np.array([math.log(3.0)]), "bias": 0.0})
    assert predict_proba(f2, [1.0]) == pytest.approx(0.75, abs=1e-15)


@pytest.mark.parametrize("backend", BACKENDS)
def test_logistic_gradient_central_differences(backend):
    k = kernels.load(backend)
    rng = np.random.default_rng(4)
    X = rng.standard_normal((30, 4))
    y = (rng.random(30) < 0.4).astype(float)
    w = rng.random(30) + 0.5
    coef, bias = rng.standard_normal(4), 0.3
    _, gc, gb = k.logistic_loss_grad(X, y, w, coef, bias, 0.2)
    h = 1e-6
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        fd = (k.logistic_loss_grad(X, y, w, coef + e, bias, 0.2)[0]
              - k.logistic_loss_grad(X, y, w, coef - e, bias, 0.2)[0]) / (2 * h)
        assert abs(fd - gc[j]) <= 1e-5 * max(1.0, abs(gc[j]))
    fd = (k.logistic_loss_grad(X, y, w, coef, bias + h, 0.2)[0]
          - k.logistic_loss_grad(X, y, w, coef, bias - h, 0.2)[0]) / (2 * h)
    assert abs(fd - gb) <= 1e-5 * max(1.0, abs(gb))


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")
def test_backends_agree():
    c, p = kernels.load("cython"), kernels.load("python")
    rng = np.random.default_rng(5)
    X = rng.standard_normal((70, 5))
    y = (X[:, 1] + rng.standard_normal(70) > 0.5).astype(float)
    w = class_weights(y, True)
    a, b = c.logistic_fit(X, y, w, 0.1, 1000, 1e-6), p.logistic_fit(X, y, w, 0.1, 1000, 1e-6)
    np.testing.assert_allclose(a[0], b[0], atol=1e-10)
    assert a[2] == b[2]
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)
    sa = c.stumps_fit(X, order, y, w, 20, 0.25, 1.0)
    sb = p.stumps_fit(X, order, y, w, 20, 0.25, 1.0)
    np.testing.assert_array_equal(sa[0], sb[0])
    for u, v in zip(sa[1:], sb[1:]):
        np.testing.assert_allclose(u, v, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(c.stumps_decision(X, *sa[:5]), p.stumps_decision(X, *sb[:5]),
                               atol=1e-10)


def best_first_split(X, y):
    """Brute force: Newton gain of every midpoint split at the prior log-odds."""
    p = y.mean()
    g, h = p - y, np.full(len(y), p * (1 - p))
    best = (-np.inf, None, None)
    for j in range(X.shape[1]):
        xs = np.unique(X[:, j])
        for a, b in zip(xs[:-1], xs[1:]):
            left = X[:, j] <= (a + b) / 2
            gain = (g[left].sum() ** 2 / (h[left].sum() + 1.0)
                    + g[~left].sum() ** 2 / (h[~left].sum() + 1.0))
            if gain > best[0] + 1e-12:
                best = (gain, j, (a + b) / 2)
    return best[1], best[2]


@pytest.mark.parametrize("backend", BACKENDS)
def test_first_stump_matches_brute_force(backend):
    k = kernels.load(backend)
    rng = np.random.default_rng(6)
    X = np.round(rng.standard_normal((40, 3)), 2)
    y = (X[:, 2] > 0.3).astype(float)
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)
    feat, thr, *_ = k.stumps_fit(X, order, y, np.ones(40), 1, 1.0, 1.0)
    j, t = best_first_split(X, y)
    assert feat[0] == j
    assert thr[0] == pytest.approx(t)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(BACKENDS))
def test_stumps_training_loss_never_increases(seed, backend):
    k = kernels.load(backend)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((50, 3))
    y = (rng.random(50) < 0.3).astype(float)
    y[:2] = [0, 1]
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)
    losses = k.stumps_fit(X, order, y, rng.random(50) + 0.1, 25, 0.5, 1.0)[5]
    assert np.all(np.diff(losses) <= 1e-12)


def test_constant_and_knn():
    d = dataset()
    f = fit(ClassifierSpec(kind="constant"), d)
    assert predict_proba(f, np.zeros(4)) == pytest.approx(0.25)
    f = fit(ClassifierSpec(kind="knn", k=3), d)
    x = d.rows[7] + 1e-9
    dist = ((d.rows - x) ** 2).sum(axis=1)
    want = d.labels[np.argsort(dist, kind="stable")[:3]].mean()
    assert predict_proba(f, x) == pytest.approx(min(max(want, EPS), 1 - EPS))


@pytest.mark.parametrize("kind", ["constant", "logistic", "gbstumps", "knn"])
def test_predictions_clipped(kind):
    d = dataset(shift=50.0)
    p = cross_fit_predictions(ClassifierSpec(kind=kind), d, seed=1)
    assert p.min() >= EPS and p.max() <= 1 - EPS


def test_balanced_weights_keep_calibration():
    d = dataset(n=200, shift=0.0, seed=2)
    plain = fit(ClassifierSpec(), d, balanced=False)
    weighted = fit(ClassifierSpec(), d, balanced=True)
    assert predict_proba(weighted, d.rows).mean() == pytest.approx(
        predict_proba(plain, d.rows).mean(), abs=0.02)


def test_schema_and_config_errors():
    f = fit(ClassifierSpec(), dataset())
    with pytest.raises(SchemaMismatch):
        predict_proba(f, np.zeros(3))
    with pytest.raises(InvalidConfig):
        ClassifierSpec(kind="forest")
    with pytest.raises(InvalidConfig):
        ClassifierSpec(folds=1)
    with pytest.raises(SingleClass):
        _fit_arrays(ClassifierSpec(), np.zeros((4, 1)), np.zeros(4))


def test_spec_dict_round_trip():
    s = ClassifierSpec(kind="gbstumps", n_rounds=7)
    assert ClassifierSpec.from_dict(s.to_dict()) == s
    with pytest.raises(InvalidConfig):
        ClassifierSpec.from_dict({"kind": "logistic", "depth": 3})


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 40), st.integers(5, 40), st.integers(2, 5), st.integers(0, 10**6))
def test_folds_seat_both_classes(n0, n1, k, seed):
    labels = np.r_[np.zeros(n0), np.ones(n1)]
    folds = assign_folds(fold_keys([f"id{i}" for i in range(n0 + n1)], seed), labels, k)
    for f in range(k):
        for c in (0, 1):
            assert np.any((folds == f) & (labels == c))


def test_folds_too_few_samples():
    with pytest.raises(TooFewSamples):
        assign_folds(np.linspace(0, 0.9, 6), np.r_[np.zeros(4), np.ones(2)], 3)


def test_own_row_never_in_its_training_fold():
    d = dataset()
    cf = cross_fit(ClassifierSpec(), d, seed=3)
    i = 11
    rows = d.rows.copy()
    rows[i] += 100.0
    cf2 = cross_fit(ClassifierSpec(), LabeledDataset(rows, d.labels, d.variable_names, d.ids),
                    seed=3)
    k = cf.folds[i]
    np.testing.assert_array_equal(cf.models[k].params["coef"], cf2.models[k].params["coef"])


@pytest.mark.parametrize("kind", ["logistic", "gbstumps", "knn"])
def test_cross_fit_deterministic_and_permutation_equivariant(kind):
    d = dataset(seed=4)
    spec = ClassifierSpec(kind=kind)
    p = cross_fit_predictions(spec, d, seed=9)
    np.testing.assert_array_equal(p, cross_fit_predictions(spec, d, seed=9))
    perm = np.random.default_rng(0).permutation(d.n_samples)
    dp = LabeledDataset(d.rows[perm], d.labels[perm], d.variable_names,
                        [d.ids[i] for i in perm])
    np.testing.assert_allclose(cross_fit_predictions(spec, dp, seed=9), p[perm],
                               rtol=1e-7, atol=1e-9)


def test_pool_train_order_matches_direct_sort():
    X = np.random.default_rng(7).standard_normal((20, 3))
    mask = np.arange(20) % 3 != 0
    direct = np.argsort(X[mask], axis=0, kind="stable").T
    np.testing.assert_array_equal(Pool(X).train_order(mask), direct)


def test_separated_1d_logistic_against_grid_search():
    x = np.r_[np.linspace(-3, -0.5, 10), np.linspace(0.5, 3, 10)]
    y = (x > 0).astype(int)
    d = LabeledDataset(x[:, None], y, ["x"], [str(i) for i in range(20)])
    f = fit(ClassifierSpec(l2_lambda=0.1), d)
    assert predict_proba(f, [2.0]) > 0.9
    assert predict_proba(f, [-2.0]) < 0.1

    grid = np.linspace(-4, 4, 401)
    a, b = np.meshgrid(grid, grid, indexing="ij")
    z = a[..., None] * x + b[..., None]
    vals = np.mean(np.logaddexp(0, z) - y * z, axis=-1) + 0.05 * a * a
    ia, ib = np.unravel_index(np.argmin(vals), vals.shape)
    assert abs(f.params["coef"][0] - grid[ia]) <= 0.02
    assert abs(f.params["bias"] - grid[ib]) <= 0.02


def test_zero_weights_predict_half_and_log3_bias():
    f = type(fit(ClassifierSpec(), dataset()))
    z = f(Kind.LOGISTIC, 2, {"coef": np.zeros(2), "bias": 0.0})
    assert predict_proba(z, [5.0, -1.0]) == 0.5
    b = f(Kind.LOGISTIC, 2, {"coef": np.zeros(2), "bias": math.log(3.0)})
    assert predict_proba(b, [5.0, -1.0]) == pytest.approx(0.75, abs=1e-15)


def test_knn_memorized_point_returns_own_label():
    d = dataset()
    f = fit(ClassifierSpec(kind="knn", k=1), d)
    assert predict_proba(f, d.rows[0]) == 1 - EPS
    assert predict_proba(f, d.rows[1]) == EPS


def test_constant_prior_cross_fit_uses_other_folds():
    d = dataset(n=40)
    cf = cross_fit(ClassifierSpec(kind="constant", folds=2), d, seed=5)
    y = np.asarray(d.labels)
    for i in range(d.n_samples):
        other = cf.folds != cf.folds[i]
        assert cf.predictions[i] == pytest.approx(y[other].mean())


def test_constant_prior_two_by_two():
    d = LabeledDataset(np.zeros((4, 1)), [0, 0, 1, 1], ["x"], ["a", "b", "c", "d"])
    p = cross_fit_predictions(ClassifierSpec(kind="constant", folds=2), d, seed=0)
    assert p.tolist() == [0.5] * 4


def test_env_var_forces_fallback():
    import os
    import subprocess
    import sys
    env = dict(os.environ, HECT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import hect.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
