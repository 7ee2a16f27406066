"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise (or when the
``HECT_PURE_PYTHON`` environment variable is set to a non-empty value other
than ``0``) the numpy implementation takes over.
"""
import importlib
import os

_NAMES = ("logistic_fit", "logistic_loss_grad", "logistic_decision",
          "stumps_fit", "stumps_decision")


def load(name):
    """Return the kernel module for ``name`` in {"cython", "python"}."""
    if name == "cython":
        return importlib.import_module("hect._kernels")
    if name == "python":
        return importlib.import_module("hect._fallback")
    raise ValueError(f"unknown kernel backend {name!r}")


def available():
    out = ["python"]
    try:
        load("cython")
        out.insert(0, "cython")
    except ImportError:
        pass
    return out


if os.environ.get("HECT_PURE_PYTHON", "") not in ("", "0"):
    BACKEND = "python"
else:
    BACKEND = available()[0]

_mod = load(BACKEND)
logistic_fit = _mod.logistic_fit
logistic_loss_grad = _mod.logistic_loss_grad
logistic_decision = _mod.logistic_decision
stumps_fit = _mod.stumps_fit
stumps_decision = _mod.stumps_decision
