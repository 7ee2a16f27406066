"""Ensemble file formats: CSV and RAWF64 (+ sidecar names header).

CSV: header row of variable names, one row per run, '.' decimal separator.
RAWF64: b"HECT", u32 version (=1), u64 n_runs, u64 n_features, then
row-major little-endian float64 values.  Variable names live in a sidecar
CSV file holding just the header row.
"""
from __future__ import annotations

import csv
import math
import struct
from pathlib import Path

import numpy as np

from .core import Ensemble, Role
from .errors import ParseError

MAGIC = b"HECT"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


def _ids(path, n, prefix=None):
    stem = prefix if prefix is not None else Path(path).stem
    return [f"{stem}:{i}" for i in range(n)]


def _parse_float(tok, line, col):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"column {col}: cannot parse {tok!r} as a number", line) from None
    if not math.isfinite(v):
        raise ParseError(f"column {col}: non-finite value {tok!r}", line)
    return v


def read_csv(path, role=Role.TRUSTED, id_prefix=None) -> Ensemble:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1) from None
        header = [h.strip() for h in header]
        if not header or any(h == "" for h in header):
            raise ParseError("header has empty variable names", 1)
        if len(set(header)) != len(header):
            raise ParseError("duplicate variable names in header", 1)
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, found {len(row)}", line)
            rows.append([_parse_float(tok.strip(), line, c + 1) for c, tok in enumerate(row)])
    if not rows:
        raise ParseError("no data rows", 2)
    X = np.array(rows, dtype=np.float64)
    return Ensemble(X, header, _ids(path, X.shape[0], id_prefix), role, path.stem)


def _fmt(v):
    return repr(float(v))


def write_csv(e: Ensemble, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(e.variable_names)
        for row in e.X:
            w.writerow([_fmt(v) for v in row])


def names_path(path):
    """Default sidecar location for a RAWF64 file: ``<stem>.names.csv``."""
    path = Path(path)
    return path.with_name(path.stem + ".names.csv")


def read_names(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        try:
            header = next(csv.reader(fh))
        except StopIteration:
            raise ParseError("empty names file", 1) from None
    return [h.strip() for h in header]


def read_rawf64(path, names=None, role=Role.TRUSTED, id_prefix=None) -> Ensemble:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise ParseError("file shorter than the RAWF64 header")
    magic, version, n_runs, n_features = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ParseError(f"unsupported RAWF64 version {version}")
    expected = _HEADER.size + 8 * n_runs * n_features
    if len(data) != expected:
        raise ParseError(f"payload size {len(data)} != expected {expected}")
    X = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n_runs, n_features)
    if not np.all(np.isfinite(X)):
        bad = int(np.argwhere(~np.isfinite(X))[0, 0])
        raise ParseError(f"run {bad}: non-finite value")
    if names is None:
        names = read_names(names_path(path))
    if len(names) != n_features:
        raise ParseError(f"{len(names)} names for {n_features} features")
    return Ensemble(X.astype(np.float64), names, _ids(path, n_runs, id_prefix), role,
                    path.stem)


def write_rawf64(e: Ensemble, path, names_file=None):
    path = Path(path)
    X = np.ascontiguousarray(e.X, dtype="<f8")
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, X.shape[0], X.shape[1]))
        fh.write(X.tobytes())
    names_file = names_path(path) if names_file is None else Path(names_file)
    with names_file.open("w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerow(e.variable_names)


def read_ensemble(path, fmt=None, role=Role.TRUSTED, names=None, id_prefix=None):
    """Read CSV or RAWF64, inferring the format from the suffix if not given."""
    path = Path(path)
    if fmt is None:
        fmt = "rawf64" if path.suffix.lower() in (".rawf64", ".bin", ".f64") else "csv"
    if fmt == "csv":
        return read_csv(path, role, id_prefix)
    if fmt == "rawf64":
        if isinstance(names, (str, Path)):
            names = read_names(names)
        return read_rawf64(path, names, role, id_prefix)
    raise ValueError(f"unknown format {fmt!r}")
