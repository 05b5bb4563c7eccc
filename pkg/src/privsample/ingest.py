"""Categorical table ingestion and one-hot encoding into the Boolean cube.

A categorical table is one-hot encoded column block by column block: a column
with vocabulary size v contributes v coordinates, the active category mapping
to +1 and every other coordinate in the block to -1.  The cube dimension p is
the sum of retained vocabulary sizes.

Rows with empty cells are rejected at load time (no imputation); vocabularies
are inferred by scanning and kept sorted so that identical input bytes always
produce identical encodings.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TableFormatError",
    "CategoricalTable",
    "DataMatrix",
    "DatasetStats",
    "load_csv",
    "one_hot_encode",
    "decode_rows",
    "empirical_stats",
    "read_sign_matrix",
    "write_sign_matrix",
]


class TableFormatError(ValueError):
    """Raised for malformed delimited input (ragged rows, empty cells, ...)."""


@dataclass
class CategoricalTable:
    """Column-labelled categorical data with sorted per-column vocabularies."""

    columns: list[str]
    vocabularies: list[list[str]]
    codes: np.ndarray  # (n, n_columns) vocabulary indices

    @property
    def n(self) -> int:
        return self.codes.shape[0]


@dataclass
class DataMatrix:
    """A sequence of points in {-1,+1}^p.

    ``coordinate_labels[j]`` records which (column, category) pair coordinate
    j encodes; it is empty for matrices read directly in +-1 form.
    """

    points: np.ndarray  # (n, p) int8, entries -1/+1
    coordinate_labels: list[tuple[str, str]]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def p(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class DatasetStats:
    """Empirical-density summary: n, p, log10(2^p) and the density sup-norm."""

    n: int
    p: int
    max_density: float
    log10_cube_size: float

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "log10_cube_size": self.log10_cube_size,
            "max_density": self.max_density,
        }

    def table1_row(self, name: str = "") -> list[str]:
        return [
            name,
            str(self.p),
            str(self.n),
            f"{self.log10_cube_size:.4f}",
            f"{self.max_density:.3g}",
        ]


def load_csv(source, has_header: bool = True, delimiter: str = ",") -> CategoricalTable:
    """Load a delimited categorical table, inferring sorted vocabularies.

    ``source`` may be a path or a text file object.  Raises TableFormatError
    on empty input, ragged rows, or empty cells (reported with a count).
    """
    if hasattr(source, "read"):
        rows = _read_rows(source, delimiter)
    else:
        with open(source, "r", encoding="utf-8", newline="") as handle:
            rows = _read_rows(handle, delimiter)
    if not rows:
        raise TableFormatError("empty input: no rows found")

    width = len(rows[0])
    ragged = [i for i, row in enumerate(rows) if len(row) != width]
    if ragged:
        raise TableFormatError(
            f"ragged input: {len(ragged)} row(s) do not have {width} fields "
            f"(first at line {ragged[0] + 1})"
        )

    if has_header:
        columns = [cell.strip() for cell in rows[0]]
        body = rows[1:]
        if not body:
            raise TableFormatError("empty input: header only, no data rows")
    else:
        columns = [f"col{i}" for i in range(width)]
        body = rows

    body = [[cell.strip() for cell in row] for row in body]
    empty_cells = sum(1 for row in body for cell in row if cell == "")
    if empty_cells:
        raise TableFormatError(f"{empty_cells} empty cell(s) found; rows with missing values are rejected")

    vocabularies = [sorted({row[j] for row in body}) for j in range(width)]
    lookups = [{cat: i for i, cat in enumerate(vocab)} for vocab in vocabularies]
    codes = np.empty((len(body), width), dtype=np.int32)
    for i, row in enumerate(body):
        for j, cell in enumerate(row):
            codes[i, j] = lookups[j][cell]
    return CategoricalTable(columns=columns, vocabularies=vocabularies, codes=codes)


def _read_rows(handle, delimiter: str) -> list[list[str]]:
    if isinstance(handle, (io.RawIOBase, io.BufferedIOBase)):
        handle = io.TextIOWrapper(handle, encoding="utf-8")
    reader = csv.reader(handle, delimiter=delimiter)
    return [row for row in reader if row]


def one_hot_encode(table: CategoricalTable, drop_columns: tuple[str, ...] = ()) -> DataMatrix:
    """One-hot encode a table into the cube, +1 for the active category.

    Each retained column with vocabulary size v contributes a block of v
    coordinates; p is the total across blocks.  Constant columns (vocabulary
    size 1) are retained with a warning so that p stays the sum of vocabulary
    sizes.
    """
    drop = set(drop_columns)
    unknown = drop - set(table.columns)
    if unknown:
        raise ValueError(f"drop columns not in table: {sorted(unknown)}")

    kept = [j for j, name in enumerate(table.columns) if name not in drop]
    if not kept:
        raise ValueError("all columns dropped; nothing to encode")

    labels: list[tuple[str, str]] = []
    offsets = {}
    p = 0
    for j in kept:
        vocab = table.vocabularies[j]
        if len(vocab) == 1:
            warnings.warn(
                f"column {table.columns[j]!r} has a single category; "
                "it contributes one constant coordinate",
                stacklevel=2,
            )
        offsets[j] = p
        labels.extend((table.columns[j], cat) for cat in vocab)
        p += len(vocab)

    points = np.full((table.n, p), -1, dtype=np.int8)
    for j in kept:
        points[np.arange(table.n), offsets[j] + table.codes[:, j]] = 1
    return DataMatrix(points=points, coordinate_labels=labels)


def decode_rows(data: DataMatrix) -> list[tuple[str, ...]]:
    """Recover category labels from an encoded matrix (round-trip check)."""
    if not data.coordinate_labels:
        raise ValueError("matrix carries no encoding map")
    rows = []
    for point in data.points:
        active = np.flatnonzero(point == 1)
        rows.append(tuple(data.coordinate_labels[j][1] for j in active))
    return rows


def empirical_stats(data: DataMatrix) -> DatasetStats:
    """n, p and the sup-norm of the empirical density (max row multiplicity / n)."""
    if data.n == 0:
        raise ValueError("empty data matrix")
    _, counts = np.unique(data.points, axis=0, return_counts=True)
    return DatasetStats(
        n=data.n,
        p=data.p,
        max_density=float(counts.max()) / data.n,
        log10_cube_size=data.p * math.log10(2.0),
    )


def read_sign_matrix(path) -> DataMatrix:
    """Read a +-1 matrix CSV (one point per row, no header)."""
    points = np.loadtxt(path, delimiter=",", dtype=np.int8, ndmin=2)
    if points.size == 0:
        raise TableFormatError("empty input: no rows found")
    if not np.all(np.abs(points) == 1):
        raise TableFormatError("sign matrix entries must be -1 or +1")
    return DataMatrix(points=points, coordinate_labels=[])


def write_sign_matrix(path, points) -> None:
    """Write cube points as a +-1 CSV, one point per row."""
    pts = np.asarray(points)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for row in pts:
            handle.write(",".join(str(int(v)) for v in row))
            handle.write("\n")
