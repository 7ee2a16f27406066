import numpy as np
import pytest

from hect import Ensemble, Role

ACCEPTANCE_LINES = []


def make_pair(m=60, n=20, d=5, delta=0.0, seed=0, features=None):
    rng = np.random.default_rng(seed)
    Xt = rng.standard_normal((m, d))
    Xs = rng.standard_normal((n, d))
    Xs[:, list(range(d)) if features is None else features] += delta
    names = [f"x{j}" for j in range(d)]
    return (Ensemble.from_matrix(Xt, names, Role.TRUSTED),
            Ensemble.from_matrix(Xs, names, Role.TEST))


@pytest.fixture
def pair():
    return make_pair


@pytest.fixture
def record_ac():
    def record(name, ok, detail):
        ACCEPTANCE_LINES.append(f"{name} {'PASS' if ok else 'FAIL'}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
