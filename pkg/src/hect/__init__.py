"""Classifier-based ensemble consistency testing."""
from .classifier import ClassifierSpec, Kind, cross_fit_predictions, fit, predict_proba
from .core import (Decision, Ensemble, LabeledDataset, Method, Role, Run, TestReport,
                   estimate_class_prior, pool_and_label)
from .diagnostics import DiagnosticsReport, diagnose, feature_importance, local_discrepancy
from .kernels import BACKEND
from .pca_baseline import fit_pca, pca_baseline_test, pca_ect, project
from .preprocess import (RawRun, apply_filter, apply_standardize, fit_filter,
                         fit_standardize, spatial_average)
from .testing import GofConfig, PermConfig, gof_test, p_value, test_statistic, two_sample_test

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ClassifierSpec", "Decision", "DiagnosticsReport", "Ensemble", "GofConfig",
    "Kind", "LabeledDataset", "Method", "PermConfig", "RawRun", "Role", "Run", "TestReport",
    "apply_filter", "apply_standardize", "cross_fit_predictions", "diagnose",
    "estimate_class_prior", "feature_importance", "fit", "fit_filter", "fit_pca",
    "fit_standardize", "gof_test", "local_discrepancy", "p_value", "pca_baseline_test",
    "pca_ect", "pool_and_label", "predict_proba", "project", "spatial_average",
    "test_statistic", "two_sample_test",
]
