"""CSV and JSON helpers shared by the CLI.

DoE CSVs have a header of variable names and one row per point, with
categorical and ordinal values written as their level labels.
"""
from __future__ import annotations

import csv
import json
import os

import numpy as np

from .design_space import DesignSpace, DesignSpaceError

FORMAT_VERSION = 1


def write_doe_csv(path, space: DesignSpace, values, extra: dict | None = None):
    """Write rows of internal values; ``extra`` maps column name -> per-row values."""
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*space.names, *extra])
        for i, row in enumerate(np.atleast_2d(values)):
            w.writerow([*space.to_labels(row), *(repr(float(v[i])) for v in extra.values())])


def read_doe_csv(path, space: DesignSpace, extra_columns=()):
    """Read a DoE CSV into internal values, plus any requested extra columns."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DesignSpaceError(f"{path}: empty CSV")
    header, body = rows[0], [r for r in rows[1:] if r]
    missing = [n for n in (*space.names, *extra_columns) if n not in header]
    if missing:
        raise DesignSpaceError(f"{path}: missing columns {missing}")
    cols = [header.index(n) for n in space.names]
    values = np.array([space.from_labels([r[c] for c in cols]) for r in body]).reshape(len(body), space.n_dims)
    extras = {}
    for name in extra_columns:
        c = header.index(name)
        try:
            extras[name] = np.array([float(r[c]) for r in body])
        except ValueError as exc:
            raise DesignSpaceError(f"{path}: non-numeric {name!r} value: {exc}") from None
    return values, extras


def read_column_csv(path, name: str = "y") -> np.ndarray:
    """Single numeric column; a header row is optional."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and rows[0]:
        try:
            float(rows[0][0])
        except ValueError:
            header = rows.pop(0)
            col = header.index(name) if name in header else 0
            return _floats(path, [r[col] for r in rows])
    return _floats(path, [r[0] for r in rows])


def _floats(path, items):
    try:
        return np.array([float(v) for v in items])
    except ValueError as exc:
        raise DesignSpaceError(f"{path}: non-numeric value: {exc}") from None


def read_json(path) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DesignSpaceError(f"{path}: invalid JSON: {exc}") from None


def write_json(path, doc: dict):
    doc = {"format_version": FORMAT_VERSION, **doc}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(directory, doc: dict):
    write_json(os.path.join(directory or ".", "manifest.json"), doc)
