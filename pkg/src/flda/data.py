"""Datasets, file ingestion and the statistics the transfer model is built on.

Two on-disk formats are supported.

Delimited text
    One sample per line, cells separated by ``delimiter`` (default ``,``),
    optional header row.  One column may hold the label.  A cell equal to
    ``missing_token`` is zero-imputed and flagged in ``missing_mask``.

Sparse indexed text
    ``<label> <index>:<value> <index>:<value> ...`` with 1-based, strictly
    increasing indices.  Unlisted entries are exact zeros.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DataError, ParseError

__all__ = [
    "Dataset",
    "NonZeroFrequencies",
    "encode_labels",
    "load_delimited",
    "load_sparse_indexed",
    "save_delimited",
    "save_sparse_indexed",
    "nonzero_frequencies",
    "missing_data_split",
    "subsample",
]


def _as_features(features):
    if sp.issparse(features):
        features = sp.csr_matrix(features, dtype=np.float64)
        # explicit zeros would be counted as non-zero by the sparse structure
        features.eliminate_zeros()
        features.sort_indices()
        return features
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise DataError(f"features must be a 2-D matrix, got shape {features.shape}")
    return features


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ``n x m`` feature matrix with optional labels.

    Binary labels are stored as -1/+1, multiclass labels as ``0..K-1``
    (see :func:`encode_labels`).  ``features`` may be a dense ndarray or a
    scipy sparse matrix; every downstream operation gives identical results
    for both.  Instances are treated as immutable.
    """

    features: np.ndarray | sp.csr_matrix
    labels: Optional[np.ndarray] = None
    feature_names: Optional[tuple] = None
    missing_mask: Optional[np.ndarray] = None
    n_classes: Optional[int] = None

    def __post_init__(self):
        X = _as_features(self.features)
        object.__setattr__(self, "features", X)
        n, m = X.shape
        if self.labels is not None:
            y = np.asarray(self.labels)
            if y.ndim != 1 or y.shape[0] != n:
                raise DataError(f"expected {n} labels, got shape {y.shape}")
            if y.size and not np.all(np.isfinite(y)):
                raise DataError("labels must be finite")
            if y.size and np.any(y != np.round(y)):
                raise DataError("labels must be integral class ids")
            y = y.astype(np.int64)
            values = set(np.unique(y).tolist())
            k = self.n_classes
            if k is None and values <= {-1, 1}:
                k = 2
            if k == 2:
                if not values <= {-1, 1}:
                    raise DataError("binary labels must be -1/+1")
            else:
                if values and min(values) < 0:
                    raise DataError(
                        "labels must be -1/+1 (binary) or 0..K-1 (multiclass)"
                    )
                if k is None:
                    k = max(values) + 1 if values else 0
                if values and max(values) >= k:
                    raise DataError(f"label {max(values)} out of range for K={k}")
            object.__setattr__(self, "n_classes", int(k))
            y.setflags(write=False)
            object.__setattr__(self, "labels", y)
        elif self.n_classes is not None:
            object.__setattr__(self, "n_classes", None)
        if self.feature_names is not None:
            names = tuple(str(s) for s in self.feature_names)
            if len(names) != m:
                raise DataError(f"expected {m} feature names, got {len(names)}")
            object.__setattr__(self, "feature_names", names)
        if self.missing_mask is not None:
            mask = np.asarray(self.missing_mask, dtype=bool)
            if mask.shape != (n, m):
                raise DataError(f"missing_mask shape {mask.shape} != {(n, m)}")
            mask.setflags(write=False)
            object.__setattr__(self, "missing_mask", mask)
        if isinstance(X, np.ndarray):
            X.setflags(write=False)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.features)

    @property
    def is_binary(self) -> bool:
        return self.labels is not None and self.n_classes == 2

    def dense(self) -> np.ndarray:
        """Feature matrix as a dense float64 array."""
        if self.is_sparse:
            return self.features.toarray()
        return self.features

    def take(self, rows) -> "Dataset":
        """Sub-dataset with the given row indices (in the given order)."""
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            self.features[rows],
            None if self.labels is None else self.labels[rows],
            self.feature_names,
            None if self.missing_mask is None else self.missing_mask[rows],
            self.n_classes,
        )

    def unlabeled(self) -> "Dataset":
        return Dataset(self.features, None, self.feature_names, self.missing_mask)

    def to_sparse(self) -> "Dataset":
        return Dataset(
            sp.csr_matrix(self.dense()),
            self.labels,
            self.feature_names,
            self.missing_mask,
            self.n_classes,
        )

    def to_dense(self) -> "Dataset":
        return Dataset(
            np.array(self.dense()),
            self.labels,
            self.feature_names,
            self.missing_mask,
            self.n_classes,
        )

    def onehot(self) -> np.ndarray:
        """Labels as an ``n x K`` indicator matrix (binary: column 0 is -1)."""
        if self.labels is None:
            raise DataError("dataset has no labels")
        ids = (self.labels + 1) // 2 if self.n_classes == 2 else self.labels
        Y = np.zeros((self.n, self.n_classes))
        Y[np.arange(self.n), ids] = 1.0
        return Y


@dataclass(frozen=True)
class NonZeroFrequencies:
    freq: np.ndarray
    n: int


def encode_labels(raw: Sequence) -> tuple[np.ndarray, tuple]:
    """Map raw label values to internal class ids.

    Two distinct values become -1/+1 by ascending sort order, anything else
    becomes ``0..K-1``.  Numeric values sort numerically, others as strings.
    Returns the encoded array and the sorted original values.
    """
    raw = list(raw)
    try:
        keyed = [float(v) for v in raw]
        values = sorted(set(keyed))
    except (TypeError, ValueError):
        keyed = [str(v) for v in raw]
        values = sorted(set(keyed))
    if len(values) == 1 and values[0] in (-1.0, 1.0):
        # a single-class file that is already in binary coding stays binary
        return np.array(keyed, dtype=np.int64), tuple(values)
    index = {v: i for i, v in enumerate(values)}
    ids = np.array([index[v] for v in keyed], dtype=np.int64)
    if len(values) == 2:
        ids = 2 * ids - 1
    return ids, tuple(values)


def _parse_float(cell, path, line):
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric cell {cell!r}", path, line) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite cell {cell!r}", path, line)
    return value


def load_delimited(
    path,
    label_column=None,
    delimiter: str = ",",
    missing_token: Optional[str] = None,
    header: bool = False,
) -> Dataset:
    """Read a delimited text file.

    Parameters
    ----------
    path : str or Path
    label_column : int or str, optional
        Column index (negative counts from the end) or, with ``header``, a
        column name.  ``None`` means the file is unlabeled.
    delimiter : str
    missing_token : str, optional
        Cells equal to this token become 0 and are flagged in ``missing_mask``.
    header : bool
        Whether the first row holds column names.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [
            (i, [c.strip() for c in row])
            for i, row in enumerate(csv.reader(fh, delimiter=delimiter), start=1)
            if row and any(c.strip() for c in row)
        ]
    if not rows:
        raise ParseError("empty file", path)
    names = None
    if header:
        _, names = rows[0]
        rows = rows[1:]
        if not rows:
            raise ParseError("file has a header but no data rows", path)
    width = len(names) if names is not None else len(rows[0][1])
    for line, cells in rows:
        if len(cells) != width:
            raise ParseError(f"expected {width} columns, found {len(cells)}", path, line)

    label_idx = None
    if label_column is not None:
        if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
            if names is None or label_column not in names:
                raise ConfigError(f"unknown label column {label_column!r}")
            label_idx = names.index(label_column)
        else:
            label_idx = int(label_column)
            if not -width <= label_idx < width:
                raise ConfigError(f"label column {label_column} out of range for {width} columns")
            label_idx %= width

    cols = [j for j in range(width) if j != label_idx]
    X = np.zeros((len(rows), len(cols)))
    mask = np.zeros_like(X, dtype=bool)
    raw_labels = []
    for i, (line, cells) in enumerate(rows):
        for k, j in enumerate(cols):
            cell = cells[j]
            if missing_token is not None and cell == missing_token:
                mask[i, k] = True
            else:
                X[i, k] = _parse_float(cell, path, line)
        if label_idx is not None:
            cell = cells[label_idx]
            if missing_token is not None and cell == missing_token:
                raise ParseError("missing label", path, line)
            raw_labels.append(cell)

    labels = None
    if label_idx is not None:
        labels, _ = encode_labels(raw_labels)
    feature_names = None if names is None else [names[j] for j in cols]
    return Dataset(
        X,
        labels,
        feature_names,
        mask if missing_token is not None else None,
    )


def load_sparse_indexed(path) -> Dataset:
    """Read ``label idx:val ...`` lines (1-based indices) into a sparse Dataset."""
    path = Path(path)
    raw_labels, indptr, indices, data = [], [0], [], []
    m = 0
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            raw_labels.append(_parse_float(parts[0], path, line_no))
            last = 0
            for item in parts[1:]:
                idx, sep, val = item.partition(":")
                if not sep:
                    raise ParseError(f"expected index:value, got {item!r}", path, line_no)
                try:
                    j = int(idx)
                except ValueError:
                    raise ParseError(f"bad index {idx!r}", path, line_no) from None
                if j < 1:
                    raise ParseError(f"index {j} < 1", path, line_no)
                if j <= last:
                    raise ParseError(
                        f"indices must be strictly increasing ({j} after {last})",
                        path,
                        line_no,
                    )
                last = j
                v = _parse_float(val, path, line_no)
                if v != 0.0:
                    indices.append(j - 1)
                    data.append(v)
            m = max(m, last)
            indptr.append(len(indices))
    if not raw_labels:
        raise ParseError("empty file", path)
    X = sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), indptr),
        shape=(len(raw_labels), m),
    )
    labels, _ = encode_labels(raw_labels)
    return Dataset(X, labels)


def _label_cell(dataset, i):
    return str(int(dataset.labels[i]))


def save_delimited(dataset: Dataset, path, delimiter: str = ",", header: bool = False):
    """Write a dataset as delimited text, label (if any) in the last column.

    Floats are written with ``repr`` so reading the file back reproduces the
    matrix bit for bit.
    """
    X = dataset.dense()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        if header:
            names = dataset.feature_names or tuple(f"x{j + 1}" for j in range(dataset.m))
            writer.writerow(list(names) + (["label"] if dataset.labels is not None else []))
        for i in range(dataset.n):
            row = [repr(float(v)) for v in X[i]]
            if dataset.labels is not None:
                row.append(_label_cell(dataset, i))
            writer.writerow(row)


def save_sparse_indexed(dataset: Dataset, path):
    if dataset.labels is None:
        raise DataError("sparse indexed format requires labels")
    X = sp.csr_matrix(dataset.features)
    with open(path, "w") as fh:
        for i in range(dataset.n):
            start, stop = X.indptr[i], X.indptr[i + 1]
            items = [
                f"{j + 1}:{float(v)!r}" for j, v in zip(X.indices[start:stop], X.data[start:stop])
            ]
            fh.write(" ".join([_label_cell(dataset, i)] + items) + "\n")


def nonzero_frequencies(dataset: Dataset) -> NonZeroFrequencies:
    """Fraction of samples with a non-zero value, per feature (exact ``!= 0``)."""
    n = dataset.n
    if n == 0:
        raise DataError("cannot compute non-zero frequencies of an empty dataset")
    if dataset.is_sparse:
        counts = np.asarray(dataset.features.getnnz(axis=0), dtype=np.int64)
    else:
        counts = np.count_nonzero(dataset.features, axis=0).astype(np.int64)
    return NonZeroFrequencies(counts / n, n)


def missing_data_split(dataset: Dataset) -> tuple[Dataset, Dataset]:
    """Complete rows form the source, rows with any missing value the target.

    Missing cells are already zero-imputed by the loader; row order is kept.
    """
    if dataset.missing_mask is None:
        raise DataError("dataset has no missing_mask; load it with a missing token")
    if dataset.labels is None:
        raise DataError("missing-data split needs a labeled dataset")
    incomplete = dataset.missing_mask.any(axis=1)
    source_rows = np.flatnonzero(~incomplete)
    if source_rows.size == 0:
        raise DataError("no complete rows: cannot form a source domain")
    return dataset.take(source_rows), dataset.take(np.flatnonzero(incomplete))


def subsample(dataset: Dataset, size: int, seed) -> Dataset:
    """Uniform sample of ``size`` rows without replacement."""
    if not 1 <= size <= dataset.n:
        raise DataError(f"subsample size {size} outside [1, {dataset.n}]")
    rng = np.random.default_rng(seed)
    rows = rng.choice(dataset.n, size=size, replace=False)
    return dataset.take(rows)
