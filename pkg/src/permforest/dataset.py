"""Typed datasets: CSV loading, validation, train/test splitting, feature muting.

A :class:`Dataset` is an immutable (n, p) feature matrix with a real-valued
response.  Categorical columns are stored as level indices 0..L-1 in the same
float matrix, with the column typing carried in a parallel list of
:class:`FeatureKind` values.  All muting transformations (exclusion, shared
row permutation, knockoff substitution) act on datasets and never touch the
response vector.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np


class DataError(ValueError):
    """Base class for dataset construction failures."""


class SchemaError(DataError):
    """A required column is missing or the header is malformed."""


class ParseError(DataError):
    """A cell could not be parsed under the column's declared kind."""


class ValidationError(DataError):
    """Parsed values violate a dataset invariant (NaN, bad level, ...)."""


@dataclass(frozen=True)
class FeatureKind:
    """Column type: numeric, or categorical with a fixed level count.

    ``level_count is None`` means numeric; otherwise the column holds integer
    level indices in ``[0, level_count)`` and ``level_count >= 2``.
    """

    level_count: Optional[int] = None

    def __post_init__(self):
        if self.level_count is not None and self.level_count < 2:
            raise ValidationError("categorical features need at least 2 levels")

    @property
    def is_categorical(self) -> bool:
        return self.level_count is not None

    def __repr__(self):
        if self.level_count is None:
            return "FeatureKind(numeric)"
        return f"FeatureKind(categorical[{self.level_count}])"


NUMERIC = FeatureKind()


def categorical(level_count: int) -> FeatureKind:
    return FeatureKind(level_count)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable feature matrix plus response.

    Attributes
    ----------
    X : ndarray of shape (n, p)
        Feature values.  Categorical columns hold level indices as floats.
    y : ndarray of shape (n,)
        Real-valued response (binary responses are stored as 0/1 reals).
    kinds : tuple of FeatureKind, length p
    names : tuple of str, length p
        Column names; synthesized as ``x1..xp`` when not given.
    response_name : str
    level_labels : per-column tuple of level label strings, or None
        Only populated for CSV columns encoded by first appearance; used to
        round-trip string-valued categorical columns through ``write_csv``.
    """

    X: np.ndarray
    y: np.ndarray
    kinds: tuple
    names: tuple = ()
    response_name: str = "y"
    level_labels: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if X.ndim != 2:
            raise ValidationError("X must be a 2-d matrix")
        if y.ndim != 1:
            raise ValidationError("y must be a 1-d vector")
        n, p = X.shape
        if n < 2:
            raise ValidationError(f"need at least 2 rows, got {n}")
        if p < 1:
            raise ValidationError("need at least 1 feature column")
        if len(y) != n:
            raise ValidationError(f"response length {len(y)} != row count {n}")
        kinds = tuple(self.kinds)
        if len(kinds) != p:
            raise ValidationError(f"{len(kinds)} kinds for {p} columns")
        names = tuple(self.names) if self.names else tuple(f"x{j + 1}" for j in range(p))
        if len(names) != p:
            raise ValidationError(f"{len(names)} names for {p} columns")
        if not np.all(np.isfinite(X)):
            raise ValidationError("X contains NaN or infinite entries")
        if not np.all(np.isfinite(y)):
            raise ValidationError("y contains NaN or infinite entries")
        for j, kind in enumerate(kinds):
            if kind.is_categorical:
                col = X[:, j]
                if not np.all(col == np.floor(col)):
                    raise ValidationError(f"column {names[j]!r}: non-integer level index")
                if col.min() < 0 or col.max() >= kind.level_count:
                    raise ValidationError(
                        f"column {names[j]!r}: level outside [0, {kind.level_count})"
                    )
        labels = tuple(self.level_labels) if self.level_labels else (None,) * p
        if len(labels) != p:
            raise ValidationError(f"{len(labels)} label entries for {p} columns")
        object.__setattr__(self, "X", _freeze(X))
        object.__setattr__(self, "y", _freeze(y))
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "level_labels", labels)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def take(self, rows) -> "Dataset":
        """New dataset restricted to the given row indices (in order)."""
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(
            self.X[rows],
            self.y[rows],
            self.kinds,
            self.names,
            self.response_name,
            self.level_labels,
        )

    def column_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"no feature column named {name!r}") from None

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.kinds == other.kinds
            and self.names == other.names
            and self.response_name == other.response_name
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )


@dataclass(frozen=True)
class FeatureSubset:
    """Ordered set of feature column indices to mute / test jointly."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise ValueError("feature subset must be non-empty")
        if len(set(idx)) != len(idx):
            raise ValueError("feature subset indices must be distinct")
        if any(i < 0 for i in idx):
            raise ValueError("feature subset indices must be non-negative")
        object.__setattr__(self, "indices", idx)

    def validate_for(self, d: Dataset) -> None:
        for i in self.indices:
            if i >= d.p:
                raise ValueError(f"feature index {i} out of range for p={d.p}")

    @staticmethod
    def all_columns(d: Dataset) -> "FeatureSubset":
        return FeatureSubset(tuple(range(d.p)))


@dataclass(frozen=True)
class Exclude:
    """Mute by dropping the selected columns from the design matrix."""


@dataclass(frozen=True)
class PermuteRows:
    """Mute by applying one shared row permutation to all selected columns.

    When ``seed`` is None the permutation comes from the caller-supplied
    stream (the test harness resamples it per replicate).
    """

    seed: Optional[int] = None


class KnockoffColumns:
    """Mute by substituting externally generated knockoff columns.

    ``columns`` must be (n, |S|) with the same kinds as the muted features,
    column k replacing the k-th index of the feature subset.  Generation of
    knockoffs is out of scope here; any generator can plug in through this
    hook.
    """

    def __init__(self, columns):
        self.columns = np.asarray(columns, dtype=np.float64)

    def __repr__(self):
        return f"KnockoffColumns(shape={self.columns.shape})"


MutingStrategy = Union[Exclude, PermuteRows, KnockoffColumns]


def load_csv(path, response: str, schema: Optional[dict] = None) -> Dataset:
    """Load a UTF-8, header-first CSV into a validated :class:`Dataset`.

    Columns parse as numeric unless a cell fails float conversion, in which
    case the column becomes categorical with levels assigned in first
    appearance order.  ``schema`` maps column names to ``"numeric"``,
    ``"categorical"``, or a :class:`FeatureKind`; an explicit categorical
    kind with a level count expects integer level indices already in
    ``[0, level_count)``.

    Raises
    ------
    SchemaError   missing header or response column
    ParseError    unparseable cell (message names row and column)
    ValidationError   NaN/infinite values or invariant violations
    """
    schema = dict(schema or {})
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header row required") from None
        rows = [row for row in reader if row]
    if response not in header:
        raise SchemaError(f"{path}: response column {response!r} not in header {header}")
    for name in schema:
        if name not in header:
            raise SchemaError(f"{path}: schema names unknown column {name!r}")
    n = len(rows)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {i + 2} has {len(row)} cells, expected {len(header)}")

    resp_col = header.index(response)
    feat_cols = [c for c in range(len(header)) if c != resp_col]
    names = tuple(header[c] for c in feat_cols)

    y = np.empty(n)
    for i, row in enumerate(rows):
        y[i] = _parse_numeric_cell(row[resp_col], i, response, path)

    columns, kinds, labels = [], [], []
    for c, name in zip(feat_cols, names):
        raw = [rows[i][c] for i in range(n)]
        kind_req = schema.get(name)
        col, kind, labs = _parse_column(raw, name, kind_req, path)
        columns.append(col)
        kinds.append(kind)
        labels.append(labs)

    X = np.column_stack(columns) if columns else np.empty((n, 0))
    if X.shape[1] == 0:
        raise SchemaError(f"{path}: no feature columns besides the response")
    return Dataset(X, y, tuple(kinds), names, response, tuple(labels))


def _parse_numeric_cell(cell: str, i: int, name: str, path) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(
            f"{path}: row {i + 2}, column {name!r}: cannot parse {cell!r} as a number"
        ) from None
    if not math.isfinite(v):
        raise ValidationError(f"{path}: row {i + 2}, column {name!r}: value is {cell!r}")
    return v


def _parse_column(raw, name, kind_req, path):
    if isinstance(kind_req, FeatureKind) and kind_req.is_categorical:
        col = np.empty(len(raw))
        for i, cell in enumerate(raw):
            try:
                lev = int(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: row {i + 2}, column {name!r}: expected an integer level, got {cell!r}"
                ) from None
            if not 0 <= lev < kind_req.level_count:
                raise ValidationError(
                    f"{path}: row {i + 2}, column {name!r}: level {lev} outside "
                    f"[0, {kind_req.level_count})"
                )
            col[i] = lev
        return col, kind_req, None

    numeric_req = kind_req == "numeric" or (
        isinstance(kind_req, FeatureKind) and not kind_req.is_categorical
    )
    if kind_req is None or numeric_req:
        try:
            col = np.array([_parse_numeric_cell(cell, i, name, path) for i, cell in enumerate(raw)])
            return col, NUMERIC, None
        except ParseError:
            if numeric_req:
                raise
            # fall through to first-appearance categorical encoding
        except ValidationError:
            raise

    levels: dict = {}
    col = np.empty(len(raw))
    for i, cell in enumerate(raw):
        if cell not in levels:
            levels[cell] = len(levels)
        col[i] = levels[cell]
    if len(levels) < 2:
        raise ValidationError(f"{path}: column {name!r}: categorical with fewer than 2 levels")
    return col, FeatureKind(len(levels)), tuple(levels)


def write_csv(d: Dataset, path) -> None:
    """Emit the same CSV dialect ``load_csv`` reads (header, UTF-8, '.' decimal).

    Categorical columns with stored labels are written as labels; otherwise
    as their integer level indices.  ``load_csv(write_csv(d))`` with the
    dataset's kinds passed as the schema reproduces ``d`` exactly.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(d.names) + [d.response_name])
        for i in range(d.n):
            row = []
            for j, kind in enumerate(d.kinds):
                v = d.X[i, j]
                if kind.is_categorical:
                    labs = d.level_labels[j]
                    row.append(labs[int(v)] if labs is not None else str(int(v)))
                else:
                    row.append(repr(float(v)))
            row.append(repr(float(d.y[i])))
            writer.writerow(row)


def split_indices(n: int, test_fraction: float, seed: int):
    """Row index sets for a uniform-random train/test split.

    The test set gets ``floor(test_fraction * n)`` rows; errors if that is
    below 1 or leaves fewer than 2 training rows.  The two sorted index
    arrays are disjoint and together cover ``0..n-1``.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n_test = int(math.floor(test_fraction * n))
    if n_test < 1 or n - n_test < 2:
        raise ValueError(
            f"test_fraction {test_fraction} degenerate for n={n} "
            f"(test={n_test}, train={n - n_test})"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def split_train_test(d: Dataset, test_fraction: float, seed: int):
    """Disjoint uniform-random train/test split, deterministic given ``seed``."""
    train_idx, test_idx = split_indices(d.n, test_fraction, seed)
    return d.take(train_idx), d.take(test_idx)


def mute_with_permutation(d: Dataset, s: FeatureSubset, perm) -> Dataset:
    """Apply one explicit row permutation jointly to all columns in ``s``.

    The shared permutation preserves the joint distribution of the selected
    columns while severing their link to the response and to the remaining
    columns.  The response is never modified.
    """
    s.validate_for(d)
    perm = np.asarray(perm, dtype=np.intp)
    if perm.shape != (d.n,) or not np.array_equal(np.sort(perm), np.arange(d.n)):
        raise ValueError("perm must be a permutation of 0..n-1")
    X = d.X.copy()
    cols = list(s.indices)
    X[:, cols] = X[perm][:, cols]
    return Dataset(X, d.y, d.kinds, d.names, d.response_name, d.level_labels)


def mute_features(
    d: Dataset,
    s: FeatureSubset,
    strategy: MutingStrategy,
    rng: Optional[np.random.Generator] = None,
) -> Dataset:
    """Return the muted dataset D^pi for the selected feature subset.

    ``PermuteRows`` applies one shared row permutation to every column in
    ``s`` (drawn from ``strategy.seed`` when set, else from ``rng``);
    ``Exclude`` drops the columns; ``KnockoffColumns`` substitutes the
    supplied matrix.  ``d.y`` is returned byte-identical in all cases.
    """
    s.validate_for(d)
    if isinstance(strategy, Exclude):
        keep = [j for j in range(d.p) if j not in set(s.indices)]
        if not keep:
            raise ValueError("cannot exclude every feature column")
        return Dataset(
            d.X[:, keep],
            d.y,
            tuple(d.kinds[j] for j in keep),
            tuple(d.names[j] for j in keep),
            d.response_name,
            tuple(d.level_labels[j] for j in keep),
        )
    if isinstance(strategy, PermuteRows):
        if strategy.seed is not None:
            rng = np.random.default_rng(strategy.seed)
        elif rng is None:
            raise ValueError("PermuteRows without a seed needs an rng")
        return mute_with_permutation(d, s, rng.permutation(d.n))
    if isinstance(strategy, KnockoffColumns):
        cols = strategy.columns
        if cols.shape != (d.n, len(s.indices)):
            raise ValueError(
                f"knockoff matrix shape {cols.shape} != ({d.n}, {len(s.indices)})"
            )
        if not np.all(np.isfinite(cols)):
            raise ValueError("knockoff matrix contains non-finite values")
        for k, j in enumerate(s.indices):
            kind = d.kinds[j]
            if kind.is_categorical:
                col = cols[:, k]
                if not np.all(col == np.floor(col)) or col.min() < 0 or col.max() >= kind.level_count:
                    raise ValueError(
                        f"knockoff column {k} does not match categorical kind of feature {j}"
                    )
        X = d.X.copy()
        X[:, list(s.indices)] = cols
        return Dataset(X, d.y, d.kinds, d.names, d.response_name, d.level_labels)
    raise TypeError(f"unknown muting strategy: {strategy!r}")
