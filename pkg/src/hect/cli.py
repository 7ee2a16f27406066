"""Command-line entry point: ``hect <command> [options]``.

Exit status: 0 = Pass (or success), 1 = Fail, 2 = usage or parse error,
3 = schema mismatch, 4 = any other hect error.

Options may also come from ``--config FILE`` holding flat ``key = value``
lines (keys are option names without the leading dashes); command-line flags
override the file.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as hio
from .classifier import ClassifierSpec
from .core import Decision, Ensemble, Role
from .diagnostics import diagnose
from .errors import HectError, ParseError, SchemaMismatch
from .pca_baseline import pca_baseline_test
from .preprocess import (RawRun, apply_filter, apply_standardize, fit_filter,
                         fit_standardize, spatial_average)
from .synthgen import (AR1, Blocks, CorrelationBreak, Independent, MeanShift, NoShift,
                       StudyOptions, SynthConfig, VarianceScale, generate, run_study)
from .testing import GofConfig, PermConfig, gof_test, two_sample_test

SCHEMA_VERSION = 1
STOCHASTIC = {"test2s", "gof", "diagnose", "simulate", "study"}
# never echoed: they must not change the bytes of a report
NOT_ECHOED = {"jobs", "out", "config"}


class UsageError(Exception):
    pass


def _int_list(s):
    return [int(v) for v in str(s).split(",") if v.strip()]


def _float_list(s):
    return [float(v) for v in str(s).split(",") if v.strip()]


def _str_list(s):
    return [v.strip() for v in str(s).split(",") if v.strip()]


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# name -> (type, default, choices, help); shared by every command that uses it
OPTIONS = {
    "seed": (int, None, None, "master seed (required for stochastic commands)"),
    "jobs": (int, 1, None, "worker processes; output does not depend on it"),
    "out": (str, None, None, "output file (reports) or directory (preprocess, simulate)"),
    "alpha": (float, 0.05, None, "test level"),
    "classifier": (str, "logistic", ("constant", "logistic", "gbstumps", "knn"), "classifier"),
    "folds": (int, 5, None, "cross-fitting folds K"),
    "E": (int, 200, None, "null ensembles for the goodness-of-fit test"),
    "B": (int, 1000, None, "permutations for the two-sample test"),
    "m-e": (int, None, None, "pseudo-test runs per null ensemble (default: n)"),
    "l2-lambda": (float, 0.1, None, "logistic L2 penalty"),
    "max-iters": (int, 1000, None, "logistic gradient-descent iterations"),
    "tol": (float, 1e-6, None, "logistic gradient tolerance"),
    "n-rounds": (int, 30, None, "boosting rounds"),
    "learning-rate": (float, 0.25, None, "boosting shrinkage"),
    "k": (int, 10, None, "neighbours for knn"),
    "class-weight": (str, "auto", ("auto", "balanced", "none"), "class weighting"),
    "trusted": (str, None, None, "trusted ensemble file"),
    "test": (str, None, None, "test ensemble file"),
    "format": (str, None, ("csv", "rawf64"), "input format (default: from suffix)"),
    "trusted-names": (str, None, None, "names sidecar for a RAWF64 trusted file"),
    "test-names": (str, None, None, "names sidecar for a RAWF64 test file"),
    "standardize": (_bool, True, None, "standardize with trusted statistics first"),
    "corr-threshold": (float, 0.98, None, "drop the later of two features above this |r|"),
    "cv-threshold": (float, 0.0, None, "drop variables with temporal CV below this"),
    "raw-dims": (_int_list, None, None, "NVAR,NTIME,NLEVEL,NCELL: rows are flattened 4-D runs"),
    "var-names": (_str_list, None, None, "variable names for --raw-dims input"),
    "cell-weights": (str, None, None, "CSV file of one positive weight per cell"),
    "all-times": (_bool, False, None, "keep every time step when averaging (default: last)"),
    "n-shuffles": (int, 5, None, "shuffles per feature for permutation importance"),
    "n-pc": (int, 50, None, "PCA components"),
    "z-threshold": (float, 2.0, None, "PCA score z threshold"),
    "fail-count": (int, 3, None, "extreme scores that make a run fail"),
    "d": (int, 20, None, "features"),
    "m": (int, 100, None, "trusted runs"),
    "n": (int, 20, None, "test runs"),
    "correlation": (str, "independent", ("independent", "ar1", "blocks"), "feature correlation"),
    "rho": (float, 0.5, None, "correlation parameter"),
    "block-size": (int, 5, None, "block size for blocks correlation"),
    "shift": (str, "none", ("none", "mean", "variance", "corrbreak"), "test-run modification"),
    "delta": (float, 1.0, None, "mean shift size"),
    "factor": (float, 2.0, None, "variance factor"),
    "shift-features": (_int_list, None, None, "0-based shifted features (default: first 5)"),
    "type": (str, "power", ("type1", "power"), "study type"),
    "method": (str, "gof", ("gof", "test2s", "pca"), "test under study"),
    "classifiers": (_str_list, None, None, "comma list of classifiers (default: --classifier)"),
    "trials": (int, 100, None, "Monte Carlo trials per condition"),
    "deltas": (_float_list, None, None, "comma list of shift magnitudes"),
    "sizes": (_int_list, None, None, "comma list of trusted ensemble sizes"),
}

CLASSIFIER_OPTS = ["classifier", "folds", "l2-lambda", "max-iters", "tol", "n-rounds",
                   "learning-rate", "k", "class-weight"]
DATA_OPTS = ["trusted", "test", "format", "trusted-names", "test-names", "standardize"]
SYNTH_OPTS = ["d", "m", "n", "correlation", "rho", "block-size", "shift", "delta",
              "factor", "shift-features"]
COMMON = ["seed", "jobs", "out", "alpha"]

COMMANDS = {
    "preprocess": (["out", "trusted", "test", "format", "trusted-names", "test-names",
                    "corr-threshold", "cv-threshold", "raw-dims", "var-names",
                    "cell-weights", "all-times", "seed", "jobs"],
                   "average, filter and standardize ensembles"),
    "test2s": (COMMON + DATA_OPTS + CLASSIFIER_OPTS + ["B"], "permutation two-sample test"),
    "gof": (COMMON + DATA_OPTS + CLASSIFIER_OPTS + ["E", "m-e"], "goodness-of-fit test"),
    "diagnose": (COMMON + DATA_OPTS + CLASSIFIER_OPTS + ["E", "m-e", "n-shuffles"],
                 "goodness-of-fit test with feature diagnostics"),
    "baseline": (["out", "seed", "jobs"] + DATA_OPTS[:-1] + ["n-pc", "z-threshold", "fail-count"],
                 "PCA-score baseline"),
    "simulate": (["seed", "jobs", "out", "format"] + SYNTH_OPTS, "write synthetic ensembles"),
    "study": (COMMON + CLASSIFIER_OPTS + SYNTH_OPTS
              + ["type", "method", "classifiers", "trials", "deltas", "sizes", "B", "E",
                 "m-e", "n-pc", "z-threshold", "fail-count"],
              "Monte Carlo type-I / power study"),
}


def _key(name):
    return name.replace("-", "_")


def build_parser():
    parser = argparse.ArgumentParser(prog="hect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, (opts, help_) in COMMANDS.items():
        p = sub.add_parser(cmd, help=help_, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="flat key=value file; flags override it")
        for name in opts:
            typ, default, choices, h = OPTIONS[name]
            if default is not None:
                h = f"{h} [default: {default}]"
            p.add_argument(f"--{name}", dest=_key(name), type=typ, choices=choices, help=h)
    return parser


def read_config(path, allowed):
    """Parse a flat ``key = value`` file; '#' starts a comment."""
    out = {}
    allowed_keys = {_key(n): n for n in allowed}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}: expected key=value", lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            k = _key(key.lstrip("-"))
            if k not in allowed_keys:
                raise ParseError(f"{path}: unknown option {key!r}", lineno)
            typ, _, choices, _ = OPTIONS[allowed_keys[k]]
            try:
                v = typ(value)
            except ValueError as exc:
                raise ParseError(f"{path}: {key}: {exc}", lineno) from None
            if choices and v not in choices:
                raise ParseError(f"{path}: {key} must be one of {choices}", lineno)
            out[k] = v
    return out


def resolve(args):
    """Defaults < config file < command-line flags."""
    cmd = args.command
    opts = COMMANDS[cmd][0]
    cfg = {_key(n): OPTIONS[n][1] for n in opts}
    if getattr(args, "config", None):
        cfg.update(read_config(args.config, opts))
    cfg.update({k: v for k, v in vars(args).items() if k not in ("command", "config")})
    if cmd in STOCHASTIC and cfg.get("seed") is None:
        raise UsageError(f"'hect {cmd}' requires --seed")
    if cfg.get("seed") is not None and cfg["seed"] < 0:
        raise UsageError("--seed must be non-negative")
    return cfg


def _spec(cfg, kind=None):
    return ClassifierSpec(
        kind=kind or cfg["classifier"], folds=cfg["folds"], l2_lambda=cfg["l2_lambda"],
        max_iters=cfg["max_iters"], tol=cfg["tol"], n_rounds=cfg["n_rounds"],
        learning_rate=cfg["learning_rate"], k=cfg["k"], class_weight=cfg["class_weight"])


def _need(cfg, *keys):
    for k in keys:
        if cfg.get(k) is None:
            raise UsageError(f"--{k.replace('_', '-')} is required")


def _load(cfg, which, role):
    return hio.read_ensemble(cfg[which], cfg.get("format"), role,
                             names=cfg.get(f"{which}_names"), id_prefix=which)


def _load_pair(cfg):
    _need(cfg, "trusted", "test")
    trusted = _load(cfg, "trusted", Role.TRUSTED)
    test = _load(cfg, "test", Role.TEST)
    if trusted.variable_names != test.variable_names:
        raise SchemaMismatch("trusted and test files have different variables")
    if cfg.get("standardize", False):
        params = fit_standardize(trusted)
        trusted, test = apply_standardize(trusted, params), apply_standardize(test, params)
    return trusted, test


def _echo(cfg):
    return {k: v for k, v in sorted(cfg.items()) if k not in NOT_ECHOED}


def _dump(doc, out):
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _document(cmd, cfg, **payload):
    return {"schema_version": SCHEMA_VERSION, "command": cmd, "config": _echo(cfg),
            "seed": cfg.get("seed"), **payload}


def _verdict(report):
    return 1 if report.decision is Decision.FAIL else 0


# -- commands -------------------------------------------------------------------

def _raw_ensemble(e, cfg, role):
    dims = cfg["raw_dims"]
    if len(dims) != 4 or min(dims) < 1:
        raise UsageError("--raw-dims needs four positive integers")
    if int(np.prod(dims)) != e.n_features:
        raise SchemaMismatch(f"--raw-dims {dims} imply {int(np.prod(dims))} values per run, "
                             f"file has {e.n_features}")
    weights = None
    if cfg.get("cell_weights"):
        weights = np.loadtxt(cfg["cell_weights"], delimiter=",", ndmin=1)
    runs = [spatial_average(RawRun(e.X[i].reshape(dims), weights, cfg.get("var_names"),
                                   e.ids[i]),
                            last_time_only=not cfg["all_times"])
            for i in range(e.n_runs)]
    return Ensemble.from_runs(runs, role, e.name)


def cmd_preprocess(cfg):
    _need(cfg, "trusted", "out")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    trusted = _load(cfg, "trusted", Role.TRUSTED)
    test = _load(cfg, "test", Role.TEST) if cfg.get("test") else None
    if cfg.get("raw_dims"):
        trusted = _raw_ensemble(trusted, cfg, Role.TRUSTED)
        test = _raw_ensemble(test, cfg, Role.TEST) if test is not None else None
    if test is not None and test.variable_names != trusted.variable_names:
        raise SchemaMismatch("trusted and test files have different variables")
    mask = fit_filter(trusted, cfg["corr_threshold"], cfg["cv_threshold"])
    trusted = apply_filter(trusted, mask)
    params = fit_standardize(trusted)
    hio.write_csv(apply_standardize(trusted, params), out / "trusted.csv")
    if test is not None:
        hio.write_csv(apply_standardize(apply_filter(test, mask), params), out / "test.csv")
    _dump(_document("preprocess", cfg, mask=mask.to_dict()), out / "mask.json")
    _dump(_document("preprocess", cfg, standardization=params.to_dict()),
          out / "standardization.json")
    return 0


def cmd_test2s(cfg):
    trusted, test = _load_pair(cfg)
    rep = two_sample_test(trusted, test, _spec(cfg),
                          PermConfig(cfg["B"], cfg["alpha"], cfg["seed"]), jobs=cfg["jobs"])
    _dump(_document("test2s", cfg, report=rep.to_dict()), cfg.get("out"))
    return _verdict(rep)


def cmd_gof(cfg):
    trusted, test = _load_pair(cfg)
    rep = gof_test(trusted, test, _spec(cfg),
                   GofConfig(cfg["E"], cfg["m_e"], cfg["alpha"], cfg["seed"]), jobs=cfg["jobs"])
    _dump(_document("gof", cfg, report=rep.to_dict()), cfg.get("out"))
    return _verdict(rep)


def cmd_diagnose(cfg):
    trusted, test = _load_pair(cfg)
    rep, diag = diagnose(trusted, test, _spec(cfg),
                         GofConfig(cfg["E"], cfg["m_e"], cfg["alpha"], cfg["seed"]),
                         n_shuffles=cfg["n_shuffles"], jobs=cfg["jobs"])
    _dump(_document("diagnose", cfg, report=rep.to_dict(), diagnostics=diag.to_dict()),
          cfg.get("out"))
    return _verdict(rep)


def cmd_baseline(cfg):
    trusted, test = _load_pair(dict(cfg, standardize=False))
    rep = pca_baseline_test(trusted, test, cfg["n_pc"], cfg["z_threshold"], cfg["fail_count"])
    _dump(_document("baseline", cfg, report=rep.to_dict()), cfg.get("out"))
    return _verdict(rep)


def _synth(cfg):
    corr = {"independent": lambda: Independent(),
            "ar1": lambda: AR1(cfg["rho"]),
            "blocks": lambda: Blocks(cfg["block_size"], cfg["rho"])}[cfg["correlation"]]()
    return SynthConfig(cfg["d"], cfg["m"], cfg["n"], corr, cfg["seed"])


def _shift(cfg, kind, magnitude=None):
    feats = cfg.get("shift_features") or list(range(min(5, cfg["d"])))
    if kind == "none":
        return NoShift()
    if kind == "mean":
        return MeanShift(cfg["delta"] if magnitude is None else magnitude, feats)
    if kind == "variance":
        return VarianceScale(cfg["factor"] if magnitude is None else magnitude, feats)
    return CorrelationBreak(feats)


def cmd_simulate(cfg):
    _need(cfg, "out")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    synth = _synth(cfg)
    trusted = generate(synth, None, Role.TRUSTED)
    test = generate(synth, _shift(cfg, cfg["shift"]), Role.TEST)
    if cfg.get("format") == "rawf64":
        hio.write_rawf64(trusted, out / "trusted.rawf64")
        hio.write_rawf64(test, out / "test.rawf64")
    else:
        hio.write_csv(trusted, out / "trusted.csv")
        hio.write_csv(test, out / "test.csv")
    _dump(_document("simulate", cfg), out / "simulate.json")
    return 0


def cmd_study(cfg):
    _need(cfg, "out")
    synth = _synth(cfg)
    if cfg["type"] == "type1":
        shifts = [NoShift()]
    elif cfg.get("deltas"):
        shifts = [NoShift() if v == 0 and cfg["shift"] in ("none", "mean")
                  else _shift(cfg, "mean" if cfg["shift"] == "none" else cfg["shift"], v)
                  for v in cfg["deltas"]]
    else:
        shifts = [_shift(cfg, cfg["shift"])]
    kinds = cfg.get("classifiers") or [cfg["classifier"]]
    specs = [_spec(cfg, k) for k in kinds]
    opts = StudyOptions(cfg["alpha"], cfg["B"], cfg["E"], cfg["m_e"], cfg["n_pc"],
                        cfg["z_threshold"], cfg["fail_count"])
    table = run_study(cfg["type"], cfg["trials"], cfg["method"], specs, synth, shifts,
                      opts, sizes=cfg.get("sizes"), jobs=cfg["jobs"])
    out = Path(cfg["out"])
    table.to_csv(out)
    _dump(_document("study", cfg, table=table.to_dict()), out.with_suffix(".json"))
    return 0


HANDLERS = {"preprocess": cmd_preprocess, "test2s": cmd_test2s, "gof": cmd_gof,
            "diagnose": cmd_diagnose, "baseline": cmd_baseline, "simulate": cmd_simulate,
            "study": cmd_study}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        return HANDLERS[args.command](cfg)
    except (UsageError, ParseError) as exc:
        print(f"hect {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except SchemaMismatch as exc:
        print(f"hect {args.command}: schema mismatch: {exc}", file=sys.stderr)
        return 3
    except (HectError, OSError) as exc:
        print(f"hect {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
