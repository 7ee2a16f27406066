"""Reduce gridded output to feature vectors; filter and standardize features.

All statistics are fit on the trusted ensemble only and then applied to any
ensemble with the same schema.  Nothing here is random.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import Ensemble, Run
from .errors import DegenerateEnsemble, DegenerateVariance, InvalidConfig, SchemaMismatch

ZERO_VARIANCE_TOL = 1e-12
TIME_SEP = "@"


class DropReason(str, Enum):
    ZERO_VARIANCE = "ZeroVariance"
    REDUNDANT = "Redundant"
    LOW_TEMPORAL_VARIABILITY = "LowTemporalVariability"


@dataclass(frozen=True)
class RawRun:
    """values[variable, time_step, level, cell] for one run."""
    values: np.ndarray
    cell_weights: np.ndarray | None = None
    variable_names: tuple | None = None
    id: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 4 or min(v.shape) < 1:
            raise ValueError(f"raw values must be 4-D with all dims >= 1, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("raw values contain non-finite entries")
        object.__setattr__(self, "values", v)
        if self.cell_weights is not None:
            w = np.asarray(self.cell_weights, dtype=np.float64)
            if w.shape != (v.shape[3],) or not np.all(w > 0):
                raise ValueError("cell_weights must be positive, one per cell")
            object.__setattr__(self, "cell_weights", w)
        names = self.variable_names
        if names is None:
            names = tuple(f"v{k}" for k in range(v.shape[0]))
        if len(names) != v.shape[0]:
            raise ValueError("one variable name per variable required")
        object.__setattr__(self, "variable_names", tuple(names))

    @property
    def dims(self):
        return self.values.shape


def spatial_average(raw: RawRun, last_time_only: bool = True) -> Run:
    """Weighted mean over (level, cell) for each variable and time step.

    Features are ordered variable-major, then time.  With several time steps
    kept, feature names read ``var@t``.
    """
    n_var, n_time, n_level, n_cell = raw.dims
    w = np.ones(n_cell) if raw.cell_weights is None else raw.cell_weights
    vals = raw.values[:, -1:] if last_time_only else raw.values
    # weights replicated equally across levels
    means = (vals * w).sum(axis=(2, 3)) / (n_level * w.sum())
    times = [n_time - 1] if last_time_only else range(n_time)
    if len(times) == 1:
        names = list(raw.variable_names)
    else:
        names = [f"{v}{TIME_SEP}{t}" for v in raw.variable_names for t in times]
    return Run(means.reshape(-1), names, raw.id)


@dataclass(frozen=True)
class FilterMask:
    kept: np.ndarray
    reasons: dict
    variable_names: tuple

    @property
    def kept_names(self):
        return [n for n, k in zip(self.variable_names, self.kept) if k]

    def to_dict(self):
        dropped = {r.value: [] for r in DropReason}
        for name, reason in self.reasons.items():
            dropped[DropReason(reason).value].append(name)
        return {"variable_names": list(self.variable_names),
                "kept": self.kept_names, "dropped": dropped}


def _time_groups(names):
    groups = {}
    for j, name in enumerate(names):
        if TIME_SEP in name:
            groups.setdefault(name.rsplit(TIME_SEP, 1)[0], []).append(j)
    return {g: idx for g, idx in groups.items() if len(idx) > 1}


def fit_filter(trusted: Ensemble, corr_threshold: float = 0.98,
               cv_threshold: float = 0.0) -> FilterMask:
    """Decide which features to keep, from trusted runs only.

    Drops, in this order: variables whose ensemble-mean time series has a
    coefficient of variation below ``cv_threshold`` (only for ``var@t``
    features with >= 2 time steps); features with sample variance below
    1e-12; and the later feature of any pair with |Pearson r| above
    ``corr_threshold``, scanning pairs greedily in index order against the
    features still kept.
    """
    if trusted.n_runs < 2:
        raise DegenerateEnsemble("filtering needs at least 2 trusted runs")
    if not 0 < corr_threshold < 1 or cv_threshold < 0:
        raise InvalidConfig("need 0 < corr_threshold < 1 and cv_threshold >= 0")
    X = trusted.X
    names = trusted.variable_names
    d = X.shape[1]
    kept = np.ones(d, dtype=bool)
    reasons = {}

    if cv_threshold > 0:
        for idx in _time_groups(names).values():
            series = X[:, idx].mean(axis=0)
            centre = abs(series.mean())
            cv = series.std(ddof=1) / centre if centre > 0 else np.inf
            if cv < cv_threshold:
                for j in idx:
                    kept[j] = False
                    reasons[names[j]] = DropReason.LOW_TEMPORAL_VARIABILITY

    var = X.var(axis=0, ddof=1)
    for j in np.flatnonzero(kept & (var < ZERO_VARIANCE_TOL)):
        kept[j] = False
        reasons[names[j]] = DropReason.ZERO_VARIANCE

    live = np.flatnonzero(kept)
    if live.size > 1:
        corr = np.corrcoef(X[:, live], rowvar=False)
        alive = np.ones(live.size, dtype=bool)
        for b in range(1, live.size):
            for a in range(b):
                if alive[a] and abs(corr[a, b]) > corr_threshold:
                    alive[b] = False
                    kept[live[b]] = False
                    reasons[names[live[b]]] = DropReason.REDUNDANT
                    break
    return FilterMask(kept, reasons, names)


def apply_filter(e: Ensemble, mask: FilterMask) -> Ensemble:
    if e.variable_names != mask.variable_names:
        raise SchemaMismatch("filter mask was fit on a different variable schema")
    return e.replace(X=e.X[:, mask.kept], variable_names=mask.kept_names)


@dataclass(frozen=True)
class StandardizationParams:
    means: np.ndarray
    sds: np.ndarray
    fitted_on: str
    variable_names: tuple = ()

    def to_dict(self):
        return {"fitted_on": self.fitted_on, "variable_names": list(self.variable_names),
                "means": self.means.tolist(), "sds": self.sds.tolist()}


def fit_standardize(trusted: Ensemble) -> StandardizationParams:
    if trusted.n_runs < 2:
        raise DegenerateEnsemble("standardization needs at least 2 trusted runs")
    means = trusted.X.mean(axis=0)
    sds = trusted.X.std(axis=0, ddof=1)
    bad = np.flatnonzero(sds < ZERO_VARIANCE_TOL)
    if bad.size:
        raise DegenerateVariance(
            f"zero-variance features must be filtered first: "
            f"{[trusted.variable_names[j] for j in bad]}")
    return StandardizationParams(means, sds, trusted.name, trusted.variable_names)


def apply_standardize(e: Ensemble, p: StandardizationParams) -> Ensemble:
    if p.variable_names and e.variable_names != p.variable_names:
        raise SchemaMismatch("standardization was fit on a different variable schema")
    return e.replace(X=(e.X - p.means) / p.sds)
