import numpy as np
import pytest

from hect.core import (Decision, Ensemble, LabeledDataset, Role, Run, estimate_class_prior,
                       pool_and_label)
from hect.errors import (DuplicateRunId, EmptyEnsemble, LengthMismatch, NonFiniteValue,
                         SchemaMismatch, SingleClass)


def test_run_validates_names_and_values():
    r = Run([1.0, 2.0], ["a", "b"], "r0")
    assert r.variable_names == ("a", "b")
    with pytest.raises(LengthMismatch):
        Run([1.0, 2.0], ["a"], "r1")
    with pytest.raises(NonFiniteValue):
        Run([1.0, np.nan], ["a", "b"], "r2")


def test_ensemble_is_read_only():
    e = Ensemble.from_matrix(np.ones((3, 2)))
    with pytest.raises(ValueError):
        e.X[0, 0] = 5.0


def test_ensemble_default_ids_and_runs():
    e = Ensemble.from_matrix(np.arange(6.0).reshape(3, 2), ["a", "b"], Role.TEST)
    assert e.ids == ("test-00000", "test-00001", "test-00002")
    assert e.name == "test"
    runs = e.runs
    assert [r.id for r in runs] == list(e.ids)
    back = Ensemble.from_runs(runs, Role.TEST)
    np.testing.assert_array_equal(back.X, e.X)


def test_ensemble_contract_errors():
    with pytest.raises(EmptyEnsemble):
        Ensemble.from_matrix(np.empty((0, 2)))
    with pytest.raises(DuplicateRunId):
        Ensemble.from_matrix(np.ones((2, 1)), ids=["a", "a"])
    with pytest.raises(NonFiniteValue):
        Ensemble.from_matrix([[1.0], [np.inf]])
    with pytest.raises(SchemaMismatch):
        Ensemble.from_runs([Run([1.0], ["a"], "r0"), Run([1.0], ["b"], "r1")], Role.TRUSTED)


def test_pool_and_label_order_and_prior():
    t = Ensemble.from_matrix(np.zeros((3, 2)), ["a", "b"], Role.TRUSTED)
    s = Ensemble.from_matrix(np.ones((1, 2)), ["a", "b"], Role.TEST)
    d = pool_and_label(t, s)
    assert list(d.labels) == [0, 0, 0, 1]
    assert d.ids[-1] == "test-00000"
    assert estimate_class_prior(d) == 0.25


def test_pool_and_label_errors():
    t = Ensemble.from_matrix(np.zeros((3, 2)), ["a", "b"], Role.TRUSTED)
    with pytest.raises(SchemaMismatch):
        pool_and_label(t, Ensemble.from_matrix(np.ones((2, 2)), ["a", "c"], Role.TEST))
    with pytest.raises(DuplicateRunId):
        pool_and_label(t, Ensemble.from_matrix(np.ones((1, 2)), ["a", "b"], Role.TEST,
                                               ids=["trusted-00000"]))


def test_labeled_dataset_needs_both_classes():
    with pytest.raises(SingleClass):
        LabeledDataset(np.zeros((3, 1)), [0, 0, 0], ["a"], ["p", "q", "r"])
    with pytest.raises(LengthMismatch):
        LabeledDataset(np.zeros((3, 1)), [0, 1], ["a"], ["p", "q", "r"])


def test_decision_values():
    assert Decision.PASS.value == "Pass" and Decision.FAIL.value == "Fail"
