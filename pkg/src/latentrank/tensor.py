"""Dense contingency tensors over categorical variables.

Multi-indices are linearized row-major (C order) everywhere: the last axis
varies fastest. ``matricize`` groups axes the same way, so a row index of a
matricized tensor is the row-major linearization of the row-axis codes.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import EmptySelection, IndexOutOfRange, InvalidAxes, ShapeMismatch


@dataclass(frozen=True)
class CategoricalDataset:
    """N rows of integer category codes.

    Attributes
    ----------
    names : tuple of str
        One label per column.
    cards : tuple of int
        Per-column cardinality, each at least 2.
    rows : ndarray of shape (n_samples, n_vars)
        Codes, column ``i`` taking values in ``[0, cards[i])``.
    """

    names: tuple
    cards: tuple
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows)
        if rows.ndim != 2:
            raise ShapeMismatch("rows must be a 2-D array")
        if rows.shape[1] != len(self.names) or len(self.cards) != len(self.names):
            raise ShapeMismatch(
                f"{len(self.names)} names, {len(self.cards)} cards, {rows.shape[1]} columns"
            )
        if rows.size and not np.issubdtype(rows.dtype, np.integer):
            if not np.all(np.equal(np.mod(rows, 1), 0)):
                raise ValueError("category codes must be integers")
        rows = rows.astype(np.int64, copy=True)
        cards = tuple(int(c) for c in self.cards)
        if any(c < 2 for c in cards):
            raise ValueError(f"every cardinality must be >= 2, got {cards}")
        if rows.size:
            bad = (rows < 0) | (rows >= np.asarray(cards))
            if bad.any():
                col = int(np.nonzero(bad.any(axis=0))[0][0])
                raise IndexOutOfRange(
                    f"column {self.names[col]!r} has codes outside [0, {cards[col]})"
                )
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cards", cards)
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))

    @property
    def n_samples(self) -> int:
        return self.rows.shape[0]

    @property
    def n_vars(self) -> int:
        return self.rows.shape[1]

    def select(self, columns: Sequence[int]) -> "CategoricalDataset":
        columns = list(columns)
        return CategoricalDataset(
            names=tuple(self.names[i] for i in columns),
            cards=tuple(self.cards[i] for i in columns),
            rows=self.rows[:, columns],
        )


@dataclass(frozen=True)
class ContingencyTensor:
    """Joint probability table over an ordered variable subset.

    ``n_samples`` is the count the table was estimated from, 0 for exact
    (population) tensors.
    """

    values: np.ndarray
    n_samples: int = 0
    axis_vars: tuple = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim < 1:
            raise ShapeMismatch("a contingency tensor needs at least one axis")
        if np.any(values < 0):
            raise ValueError("contingency tensor entries must be non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        axis_vars = tuple(self.axis_vars) if self.axis_vars else tuple(range(values.ndim))
        if len(axis_vars) != values.ndim:
            raise ShapeMismatch(f"{len(axis_vars)} axis labels for a {values.ndim}-way tensor")
        object.__setattr__(self, "axis_vars", axis_vars)
        object.__setattr__(self, "n_samples", int(self.n_samples))

    @property
    def dims(self) -> tuple:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    def total(self) -> float:
        return float(self.values.sum())


def estimate_contingency(data: CategoricalDataset, vars: Sequence[int]) -> ContingencyTensor:
    """Empirical joint distribution of the columns ``vars`` (in that order)."""
    vars = [int(v) for v in vars]
    if not vars:
        raise EmptySelection("no variables selected")
    for v in vars:
        if not 0 <= v < data.n_vars:
            raise IndexOutOfRange(f"variable index {v} out of range for {data.n_vars} columns")
    if len(set(vars)) != len(vars):
        raise InvalidAxes(f"repeated variable in selection {vars}")
    if data.n_samples < 1:
        raise EmptySelection("dataset has no rows")
    dims = tuple(data.cards[v] for v in vars)
    flat = np.ravel_multi_index(tuple(data.rows[:, v] for v in vars), dims)
    counts = np.bincount(flat, minlength=int(np.prod(dims)))
    return ContingencyTensor(
        values=(counts / data.n_samples).reshape(dims),
        n_samples=data.n_samples,
        axis_vars=tuple(data.names[v] for v in vars),
    )


def _check_axes(t: ContingencyTensor, axes, *, strict: bool) -> list:
    axes = [int(a) for a in axes]
    if not axes or len(set(axes)) != len(axes):
        raise InvalidAxes(f"axes {axes} must be non-empty and distinct")
    if any(not 0 <= a < t.ndim for a in axes):
        raise InvalidAxes(f"axes {axes} out of range for a {t.ndim}-way tensor")
    if strict and len(axes) == t.ndim:
        raise InvalidAxes("row axes must be a strict subset of the tensor axes")
    return axes


def matricize(t: ContingencyTensor, row_axes: Sequence[int]) -> ContingencyTensor:
    """Reshape into a two-way table with ``row_axes`` grouped as rows.

    Row and column axes keep their relative order; each group is linearized
    row-major. The result's axis labels are tuples of the grouped labels.
    """
    row_axes = _check_axes(t, row_axes, strict=True)
    col_axes = [a for a in range(t.ndim) if a not in row_axes]
    moved = np.transpose(t.values, row_axes + col_axes)
    n_rows = int(np.prod([t.dims[a] for a in row_axes]))
    return ContingencyTensor(
        values=moved.reshape(n_rows, -1),
        n_samples=t.n_samples,
        axis_vars=(
            tuple(t.axis_vars[a] for a in row_axes),
            tuple(t.axis_vars[a] for a in col_axes),
        ),
    )


def unmatricize(m: ContingencyTensor, row_axes: Sequence[int], dims: Sequence[int],
                axis_vars: Sequence = ()) -> ContingencyTensor:
    """Inverse of :func:`matricize` for a tensor of shape ``dims``."""
    dims = tuple(int(d) for d in dims)
    row_axes = [int(a) for a in row_axes]
    col_axes = [a for a in range(len(dims)) if a not in row_axes]
    order = row_axes + col_axes
    if m.values.size != int(np.prod(dims)):
        raise ShapeMismatch(f"matrix of size {m.values.size} cannot hold dims {dims}")
    moved = m.values.reshape([dims[a] for a in order])
    return ContingencyTensor(
        values=np.transpose(moved, np.argsort(order)),
        n_samples=m.n_samples,
        axis_vars=tuple(axis_vars) or (),
    )


def marginalize(t: ContingencyTensor, keep: Sequence[int]) -> ContingencyTensor:
    """Sum out every axis not in ``keep``; kept axes retain their order."""
    keep = sorted(_check_axes(t, keep, strict=False))
    drop = tuple(a for a in range(t.ndim) if a not in keep)
    values = t.values.sum(axis=drop) if drop else t.values
    return ContingencyTensor(
        values=values,
        n_samples=t.n_samples,
        axis_vars=tuple(t.axis_vars[a] for a in keep),
    )


def read_dataset(path, cards: Sequence[int] | None = None) -> CategoricalDataset:
    """Load a comma-separated file: a header of labels, then integer codes.

    Cardinalities default to ``max code + 1`` per column (at least 2).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            names = [n.strip() for n in next(reader)]
        except StopIteration:
            raise EmptySelection(f"{path} is empty") from None
        rows = [[int(x) for x in line] for line in reader if line]
    arr = np.asarray(rows, dtype=np.int64).reshape(-1, len(names))
    if cards is None:
        cards = [max(int(arr[:, i].max()) + 1, 2) if len(arr) else 2 for i in range(len(names))]
    return CategoricalDataset(names=tuple(names), cards=tuple(cards), rows=arr)


def write_dataset(data: CategoricalDataset, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(data.names)
        writer.writerows(data.rows.tolist())
