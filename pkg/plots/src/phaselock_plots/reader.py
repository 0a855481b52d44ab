"""Strict reader for the phaselock time-series CSV schema."""

from __future__ import annotations

from pathlib import Path

import numpy as np

CSV_HEADER = "t,cc_tg_d1,cc_tg_d2,s_ctrl1,s_ctrl2,dp,en_control,target,phi_noise"
COLUMNS = CSV_HEADER.split(",")

INT_COLUMNS = {"t", "cc_tg_d1", "cc_tg_d2", "s_ctrl1", "s_ctrl2", "dp", "en_control"}


class SchemaError(ValueError):
    """The input file does not carry the documented CSV schema."""


class RangeError(ValueError):
    """A requested interval lies outside the data range."""


def read_run(path) -> dict[str, np.ndarray]:
    """Load one run CSV into column arrays.

    Leading ``#`` provenance lines are skipped; the header must match the
    documented schema exactly, and the error names whichever column is
    missing.
    """
    lines = [
        line
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line and not line.startswith("#")
    ]
    if not lines:
        raise SchemaError(f"{path}: empty file, expected header {CSV_HEADER!r}")
    header = lines[0].split(",")
    missing = [name for name in COLUMNS if name not in header]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    if header != COLUMNS:
        raise SchemaError(f"{path}: header must be exactly {CSV_HEADER!r}")

    rows = [line.split(",") for line in lines[1:]]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    for row in rows:
        if len(row) != len(COLUMNS):
            raise SchemaError(f"{path}: malformed row {','.join(row)!r}")

    data: dict[str, np.ndarray] = {}
    for i, name in enumerate(COLUMNS):
        column = [row[i] for row in rows]
        if name == "target":
            data[name] = np.asarray(column)
        elif name in INT_COLUMNS:
            data[name] = np.asarray(column, dtype=int)
        else:
            data[name] = np.asarray(column, dtype=float)
    return data


def check_interval(data: dict[str, np.ndarray], start: float, end: float) -> None:
    t = data["t"]
    if start >= end:
        raise RangeError(f"interval must satisfy start < end, got [{start}, {end}]")
    if start < t[0] or end > t[-1]:
        raise RangeError(
            f"interval [{start}, {end}] outside data range [{t[0]}, {t[-1]}]"
        )
