"""Categorical datasets and contingency counting.

Variables are stored column-major: ``columns[i]`` holds the integer codes of
variable ``i`` for every sample, which is the access pattern of the CI tests
(few columns, all rows).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np


class DataFormatError(ValueError):
    """Malformed CSV input (ragged rows, missing values)."""


class SchemaError(ValueError):
    """Invalid header: duplicate or empty variable names."""


class EmptyDataError(ValueError):
    """CSV has a header but no data rows."""


@dataclass(frozen=True)
class ContingencyTable:
    dims: tuple[int, ...]
    counts: np.ndarray  # shape == dims

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable categorical sample matrix.

    Parameters
    ----------
    names : sequence of str
        Unique variable names, in schema order.
    cardinalities : sequence of int
        Number of categories of each variable (>= 1).
    columns : ndarray of shape (n_vars, n_rows)
        Category codes; ``columns[i, r]`` is in ``[0, cardinalities[i])``.
    labels : per-variable list of category labels, optional
        ``labels[i][c]`` is the original label of code ``c``. Used to write
        the data back out unchanged.
    """

    names: tuple[str, ...]
    cardinalities: tuple[int, ...]
    columns: np.ndarray
    labels: tuple[tuple[str, ...], ...] | None = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        names = tuple(self.names)
        cards = tuple(int(c) for c in self.cardinalities)
        cols = np.ascontiguousarray(self.columns, dtype=np.int64)
        if cols.ndim != 2 or cols.shape[0] != len(names):
            raise ValueError(
                f"columns must have shape (n_vars={len(names)}, n_rows), got {cols.shape}"
            )
        if len(cards) != len(names):
            raise ValueError("one cardinality per variable required")
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate variable names: {dupes}")
        for i, k in enumerate(cards):
            if k < 1:
                raise ValueError(f"cardinality of {names[i]!r} must be >= 1")
            if cols.shape[1] and (cols[i].min() < 0 or cols[i].max() >= k):
                raise ValueError(f"codes of {names[i]!r} outside [0, {k})")
        labels = self.labels
        if labels is not None:
            labels = tuple(tuple(lab) for lab in labels)
            if len(labels) != len(names) or any(len(l) != k for l, k in zip(labels, cards)):
                raise ValueError("labels must list exactly one label per category")
        cols.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "cardinalities", cards)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return self.columns.shape[1]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def check_var(self, v: int) -> int:
        if not (0 <= int(v) < self.n_vars):
            raise IndexError(f"variable id {v} out of range [0, {self.n_vars})")
        return int(v)

    def reorder(self, order: Sequence[int]) -> "Dataset":
        """Return a copy with variables permuted so that new id ``i`` is old id ``order[i]``."""
        order = list(order)
        return Dataset(
            names=[self.names[i] for i in order],
            cardinalities=[self.cardinalities[i] for i in order],
            columns=self.columns[order],
            labels=None if self.labels is None else [self.labels[i] for i in order],
        )


def load_csv(stream: TextIO | str) -> Dataset:
    """Read a categorical CSV with a header row.

    Labels are coded ``0..k-1`` by order of first appearance in each column.
    An empty cell is treated as a missing value and rejected.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyDataError("CSV is empty (no header)") from None
    header = [h.strip() for h in header]
    if any(h == "" for h in header):
        raise SchemaError("empty variable name in header")
    seen: set[str] = set()
    for h in header:
        if h in seen:
            raise SchemaError(f"duplicate header name {h!r}")
        seen.add(h)

    n_vars = len(header)
    codebooks: list[dict[str, int]] = [{} for _ in range(n_vars)]
    rows: list[list[int]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != n_vars:
            raise DataFormatError(
                f"row {lineno}: expected {n_vars} fields, found {len(row)}"
            )
        coded = []
        for j, raw in enumerate(row):
            label = raw.strip()
            if label == "":
                raise DataFormatError(f"row {lineno}: missing value in column {header[j]!r}")
            book = codebooks[j]
            code = book.get(label)
            if code is None:
                code = book[label] = len(book)
            coded.append(code)
        rows.append(coded)
    if not rows:
        raise EmptyDataError("CSV has a header but no data rows")

    columns = np.asarray(rows, dtype=np.int64).T
    labels = [tuple(book) for book in codebooks]
    return Dataset(header, [len(b) for b in codebooks], columns, labels)


def write_csv(data: Dataset, stream: TextIO) -> None:
    """Write ``data`` as CSV, using stored labels when available."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(data.names)
    if data.labels is None:
        table = data.columns.T.astype(str)
    else:
        table = np.empty(data.columns.T.shape, dtype=object)
        for i, labs in enumerate(data.labels):
            table[:, i] = np.asarray(labs, dtype=object)[data.columns[i]]
    writer.writerows(table.tolist())


def decode(data: Dataset, var: int, code: int) -> str:
    if data.labels is None:
        return str(code)
    return data.labels[var][code]


def joint_index(data: Dataset, vars: Sequence[int]) -> tuple[np.ndarray, tuple[int, ...]]:
    """Mixed-radix cell index of every row over ``vars`` (first var most significant)."""
    dims = tuple(data.cardinalities[v] for v in vars)
    idx = np.zeros(data.n_rows, dtype=np.int64)
    for v, k in zip(vars, dims):
        idx *= k
        idx += data.columns[v]
    return idx, dims


def count(data: Dataset, vars: Iterable[int]) -> ContingencyTable:
    """Dense contingency table over ``vars``; dimension order follows the query order."""
    vars = [data.check_var(v) for v in vars]
    if not vars:
        raise ValueError("count needs at least one variable")
    if len(set(vars)) != len(vars):
        raise ValueError(f"duplicate variable in count query: {vars}")
    idx, dims = joint_index(data, vars)
    counts = np.bincount(idx, minlength=int(np.prod(dims))).reshape(dims)
    return ContingencyTable(dims, counts)
