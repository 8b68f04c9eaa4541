"""CSV matrices with empty fields for missing entries, plus JSON sidecars."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InvalidDimensionError, ParseError


def _fmt(x):
    return "" if np.isnan(x) else format(float(x), ".17g")


def save_matrix(path, values, mask=None):
    """Write ``values`` as headerless CSV; entries with ``mask == 0`` (or NaN) are left empty."""
    values = np.asarray(values, dtype=float)
    if mask is not None:
        values = np.where(np.asarray(mask, dtype=bool), values, np.nan)
    with open(path, "w", newline="") as fh:
        for row in values:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def load_matrix(path):
    """Read a CSV written by :func:`save_matrix`; returns ``(values, mask)``.

    Missing entries come back as NaN with ``mask`` False.
    """
    rows = []
    with open(path, newline="") as fh:
        for r, fields in enumerate(csv.reader(fh)):
            if not fields:
                fields = [""]  # single-column row with a missing entry
            row = []
            for c, text in enumerate(fields):
                text = text.strip()
                if not text:
                    row.append(np.nan)
                    continue
                try:
                    val = float(text)
                except ValueError:
                    raise ParseError(f"not a number: {text!r}", row=r, column=c) from None
                if not np.isfinite(val):
                    raise ParseError(f"non-finite value {text!r}", row=r, column=c)
                row.append(val)
            if rows and len(row) != len(rows[0]):
                raise ParseError(f"expected {len(rows[0])} fields, found {len(row)}", row=r)
            rows.append(row)
    if not rows or not rows[0]:
        raise InvalidDimensionError(f"{path}: matrix has zero rows or columns")
    values = np.array(rows, dtype=float)
    return values, ~np.isnan(values)


def sidecar_path(path):
    return Path(path).with_suffix(".json")


def write_sidecar(path, meta):
    with open(sidecar_path(path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_sidecar(path):
    """Sidecar metadata for ``path``, or an empty dict if there is none."""
    side = sidecar_path(path)
    if not side.exists():
        return {}
    with open(side) as fh:
        return json.load(fh)
