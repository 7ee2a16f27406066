import warnings

import numpy as np
import pytest

from hect.core import Decision, Ensemble, Role
from hect.errors import InvalidConfigWarning
from hect.pca_baseline import (PcaModel, fit_pca, pca_baseline_test, pca_ect, project,
                               reconstruction_error)


def jacobi_eigen(A, sweeps=100):
    """Independent oracle: cyclic Jacobi rotations for a symmetric matrix."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(A**2) - np.sum(np.diag(A) ** 2))
        if off < 1e-15:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1)) if theta else 1.0
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q], J[q, p] = s, -s
                A = J.T @ A @ J
                V = V @ J
    return np.diag(A), V


def _ens(X, role=Role.TRUSTED):
    return Ensemble.from_matrix(np.asarray(X, float), role=role)


def test_matches_jacobi_oracle_on_5x5():
    X = np.random.default_rng(0).standard_normal((40, 5))
    model = fit_pca(_ens(X))
    Z = (X - X.mean(0)) / X.std(0, ddof=1)
    vals, vecs = jacobi_eigen(Z.T @ Z / 39)
    order = np.argsort(vals)[::-1]
    np.testing.assert_allclose(model.explained_variance, vals[order], atol=1e-10)
    for k in range(5):
        v = vecs[:, order[k]]
        assert abs(abs(v @ model.components[:, k]) - 1) < 1e-8


def test_rank_one_line():
    t = np.linspace(-1, 1, 11)
    model = fit_pca(_ens(np.c_[t, t]))
    np.testing.assert_allclose(model.components[:, 0], np.array([1, 1]) / np.sqrt(2))
    assert model.explained_variance[1] == pytest.approx(0.0, abs=1e-12)


def test_n_pc_clamped():
    X = np.random.default_rng(1).standard_normal((30, 10))
    assert fit_pca(_ens(X), n_pc=50).n_pc == 10
    assert fit_pca(_ens(X[:6]), n_pc=50).n_pc == 5


def test_orthonormal_and_score_variances():
    X = np.random.default_rng(2).standard_normal((50, 8)) @ np.triu(np.ones((8, 8)))
    model = fit_pca(_ens(X))
    C = model.components
    np.testing.assert_allclose(C.T @ C, np.eye(8), atol=1e-8)
    scores = project(model, X)
    np.testing.assert_allclose(scores.var(axis=0, ddof=1), model.explained_variance,
                               atol=1e-8)
    assert reconstruction_error(model, X, 8) < 1e-20


def test_project_hand_fixture_and_mean():
    model = PcaModel(np.zeros(2), np.ones(2), np.array([[1.0], [0.0]]), np.ones(1), 1)
    assert project(model, np.array([3.0, 7.0])).tolist() == [3.0]
    X = np.random.default_rng(3).standard_normal((20, 3))
    m = fit_pca(_ens(X))
    np.testing.assert_allclose(project(m, X.mean(axis=0)), 0, atol=1e-12)


def test_pca_ect_pass_and_fail():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((100, 4))
    trusted = _ens(X)
    model = fit_pca(trusted)
    scores = project(model, X)
    near = _ens(X[np.argsort(np.abs(scores).sum(1))[:1]] , Role.TEST)
    assert pca_ect(model, scores, near).decision is Decision.PASS
    sd = scores[:, 0].std(ddof=1)
    shifted = X.mean(0) + 10 * sd * model.sds * model.components[:, 0]
    far = _ens(np.tile(shifted, (3, 1)), Role.TEST)
    rep = pca_ect(model, scores, far, fail_count=1)
    assert rep.decision is Decision.FAIL
    assert rep.p_value is None and rep.method.value == "PcaBaseline"


def test_fail_count_above_n_pc_warns_and_never_fails():
    X = np.random.default_rng(5).standard_normal((30, 3))
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        rep = pca_baseline_test(_ens(X), _ens(X[:3] + 100, Role.TEST), fail_count=4)
    assert any(issubclass(x.category, InvalidConfigWarning) for x in w)
    assert rep.decision is Decision.PASS
