"""CSV ingestion, report serialization, and atomic file output.

CSV numbers are written with 17 significant digits so every float
round-trips exactly; JSON uses Python's shortest-repr floats, which also
round-trip.  All writes go through a temp file plus rename.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile

import numpy as np

from .core import MultiPopDataset
from .errors import DataFormatError, DimensionMismatchError


def _parse_csv_file(path: str):
    """Rows of floats plus optional header names from one numeric CSV."""
    with open(path, newline="") as fh:
        raw = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not raw:
        raise DataFormatError(f"{path}: empty file")

    def try_floats(row):
        try:
            return [float(c) for c in row]
        except ValueError:
            return None

    header = None
    first = try_floats(raw[0])
    if first is None:
        header = [c.strip() for c in raw[0]]
        raw = raw[1:]
        if not raw:
            raise DataFormatError(f"{path}: header but no data rows")

    width = len(raw[0])
    rows = []
    for r_idx, row in enumerate(raw):
        if len(row) != width:
            raise DataFormatError(
                f"{path}: ragged row {r_idx + 1} has {len(row)} cells, expected {width}"
            )
        parsed = []
        for c_idx, cell in enumerate(row):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise DataFormatError(
                    f"{path}: non-numeric cell at row {r_idx + 1}, column {c_idx + 1}: "
                    f"{cell!r}"
                ) from None
        rows.append(parsed)
    if header is not None and len(header) != width:
        raise DataFormatError(
            f"{path}: header has {len(header)} names for {width} columns"
        )
    return np.array(rows, dtype=float), header


def ingest_csv(
    paths,
    center: bool = False,
    standardize: bool = False,
    first_difference: bool = False,
    ddof: int = 1,
) -> MultiPopDataset:
    """Load one numeric CSV per population into a dataset.

    An initial non-numeric row is consumed as variable names.  Optional
    transforms, applied in order: consecutive-row differencing (n rows
    become n-1), column mean-centering, division by the column standard
    deviation (``ddof`` degrees of freedom, default the usual n-1).
    """
    mats = []
    names = None
    for k, path in enumerate(paths):
        try:
            x, header = _parse_csv_file(str(path))
        except OSError as exc:
            raise DataFormatError(f"cannot read {path}: {exc}") from exc
        if k == 0:
            names = header
        elif header is not None and names is not None and header != names:
            raise DataFormatError(f"{path}: variable names differ from first file")
        if mats and x.shape[1] != mats[0].shape[1]:
            raise DimensionMismatchError(
                f"{path}: {x.shape[1]} columns, expected {mats[0].shape[1]}"
            )
        if first_difference:
            if x.shape[0] < 3:
                raise DataFormatError(f"{path}: too few rows to difference")
            x = np.diff(x, axis=0)
        if center:
            x = x - x.mean(axis=0, keepdims=True)
        if standardize:
            sd = x.std(axis=0, ddof=ddof)
            if np.any(sd == 0):
                col = int(np.flatnonzero(sd == 0)[0]) + 1
                raise DataFormatError(f"{path}: column {col} is constant")
            x = x / sd
        mats.append(x)
    return MultiPopDataset(mats, variable_names=names)


def _format_cell(value) -> str:
    if isinstance(value, float) or isinstance(value, np.floating):
        return format(float(value), ".17g")
    return str(value)


def write_csv_atomic(rows, path: str) -> None:
    """Write rows to CSV with 17-significant-digit floats, atomically."""
    _atomic_write(
        path,
        "\n".join(",".join(_format_cell(c) for c in row) for row in rows) + "\n",
    )


def write_json_atomic(obj, path: str) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix_csv(matrix: np.ndarray, path: str) -> None:
    write_csv_atomic(np.asarray(matrix, dtype=float).tolist(), path)


def read_matrix_csv(path: str) -> np.ndarray:
    x, header = _parse_csv_file(str(path))
    if header is not None:
        raise DataFormatError(f"{path}: matrix files must not carry headers")
    return x


def write_data_csv(matrix: np.ndarray, path: str, names=None) -> None:
    rows = []
    if names is not None:
        rows.append(list(names))
    rows.extend(np.asarray(matrix, dtype=float).tolist())
    write_csv_atomic(rows, path)
