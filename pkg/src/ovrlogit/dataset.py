"""Loading, validation, stratified partitioning and one-vs-rest encoding."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DataError,
    EmptyDatasetError,
    MissingLabelColumnError,
    NonFiniteValueError,
    NonNumericCellError,
)

DEFAULT_LABEL_COLUMN = "target"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Feature matrix with integer class labels in ``0..class_count-1``."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    class_count: int

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        n, d = X.shape
        if n == 0:
            raise EmptyDatasetError("empty dataset")
        if d == 0:
            raise DataError("dataset has no feature columns")
        if y.shape != (n,):
            raise DataError(f"labels shape {y.shape} does not match {n} rows")
        if not np.issubdtype(y.dtype, np.integer):
            raise DataError("labels must be integers")
        if len(self.feature_names) != d:
            raise DataError(f"{len(self.feature_names)} feature names for {d} columns")
        if self.class_count < 2:
            raise DataError("at least two classes are required")
        if y.min() < 0 or y.max() >= self.class_count:
            raise DataError(f"labels must lie in 0..{self.class_count - 1}")
        if not np.all(np.isfinite(X)):
            raise NonFiniteValueError("features contain NaN or infinite values")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y.astype(np.int64)))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def take(self, indices: Sequence[int]) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.features[idx], self.labels[idx], self.feature_names, self.class_count)

    def with_features(self, features: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(features, self.labels, self.feature_names, self.class_count)

    def select_features(self, columns: Sequence[int]) -> "LabeledDataset":
        cols = list(columns)
        return LabeledDataset(
            self.features[:, cols],
            self.labels,
            tuple(self.feature_names[j] for j in cols),
            self.class_count,
        )


@dataclass(frozen=True, eq=False)
class BinaryDataset:
    features: np.ndarray
    targets: np.ndarray
    positive_class: int

    def __post_init__(self):
        t = np.asarray(self.targets)
        if not np.all((t == 0) | (t == 1)):
            raise DataError("binary targets must be 0 or 1")
        positives = int(t.sum())
        if positives == 0 or positives == t.size:
            raise DataError(
                f"class {self.positive_class} vs rest needs both positive and negative examples"
            )
        object.__setattr__(self, "targets", _frozen(t.astype(np.int64)))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True, eq=False)
class SplitPair:
    train: LabeledDataset
    test: LabeledDataset
    seed: int
    test_fraction: float
    train_indices: np.ndarray
    test_indices: np.ndarray


def load_csv(path: str | os.PathLike, label_column: str = DEFAULT_LABEL_COLUMN) -> LabeledDataset:
    """Read a comma-separated file with a header row into a dataset.

    Every column other than ``label_column`` becomes a feature, in header
    order. Distinct label values are remapped to ``0..K-1`` preserving their
    numeric order.

    Raises:
        FileNotFoundError: ``path`` does not exist.
        MissingLabelColumnError: the header lacks ``label_column``.
        NonNumericCellError: a cell cannot be parsed as a number, or a label
            is not integral.
        NonFiniteValueError: a cell parses to NaN or an infinity.
        EmptyDatasetError: the file has a header but no data rows.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"data file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDatasetError("empty dataset") from None
        if label_column not in header:
            raise MissingLabelColumnError(f"label column {label_column!r} not in header")
        label_pos = header.index(label_column)
        names = [h for i, h in enumerate(header) if i != label_pos]

        rows: list[list[float]] = []
        raw_labels: list[float] = []
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise DataError(f"row {lineno} has {len(record)} cells, expected {len(header)}")
            values = []
            for col, cell in zip(header, record):
                try:
                    v = float(cell)
                except ValueError:
                    raise NonNumericCellError(lineno, col, cell) from None
                if not math.isfinite(v):
                    raise NonFiniteValueError(f"non-finite value at row {lineno}, column {col!r}")
                values.append(v)
            label = values.pop(label_pos)
            if label != int(label):
                raise NonNumericCellError(lineno, label_column, record[label_pos])
            raw_labels.append(label)
            rows.append(values)

    if not rows:
        raise EmptyDatasetError("empty dataset")
    distinct = sorted(set(raw_labels))
    remap = {v: k for k, v in enumerate(distinct)}
    labels = np.array([remap[v] for v in raw_labels], dtype=np.int64)
    return LabeledDataset(np.array(rows, dtype=np.float64), labels, tuple(names), len(distinct))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def allocate_test_counts(class_counts: Sequence[int], test_fraction: float) -> np.ndarray:
    """Per-class test sizes summing to ``round(test_fraction * n)``.

    Largest-remainder allocation: each class first receives
    ``floor(fraction * count)``; the leftover slots go one at a time to the
    classes with the largest fractional parts, ties to the lower class index.
    """
    counts = np.asarray(class_counts, dtype=np.int64)
    raw = test_fraction * counts
    alloc = np.floor(raw).astype(np.int64)
    target = _round_half_up(test_fraction * int(counts.sum()))
    order = np.argsort(-(raw - alloc), kind="stable")
    for k in order[: max(target - int(alloc.sum()), 0)]:
        alloc[k] += 1
    return alloc


def stratified_split(ds: LabeledDataset, test_fraction: float, seed: int) -> SplitPair:
    """Partition ``ds`` into train/test sets preserving class proportions.

    Rows of each class are shuffled by one numpy ``PCG64`` stream seeded with
    ``seed`` (reduced modulo 2**64), visiting classes in ascending order. The
    first ``allocate_test_counts(...)[k]`` shuffled rows of class ``k`` form its test
    share. Both partitions keep the original row order.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    counts = ds.class_counts()
    if counts.min() < 2:
        small = int(np.argmin(counts))
        raise DataError(f"class {small} has {int(counts[small])} sample(s); need at least 2")

    rng = np.random.Generator(np.random.PCG64(int(seed) % 2**64))
    alloc = allocate_test_counts(counts, test_fraction)
    if alloc.sum() == 0:
        raise DataError(f"test_fraction {test_fraction} leaves the test set empty")
    if np.any(alloc >= counts):
        k = int(np.argmax(alloc >= counts))
        raise DataError(f"test_fraction {test_fraction} leaves class {k} without training rows")
    test_idx: list[np.ndarray] = []
    for k in range(ds.class_count):
        members = np.flatnonzero(ds.labels == k)
        test_idx.append(rng.permutation(members)[: alloc[k]])
    test = np.sort(np.concatenate(test_idx))
    mask = np.ones(ds.n, dtype=bool)
    mask[test] = False
    train = np.flatnonzero(mask)
    return SplitPair(
        train=ds.take(train),
        test=ds.take(test),
        seed=int(seed),
        test_fraction=float(test_fraction),
        train_indices=_frozen(train),
        test_indices=_frozen(test),
    )


def ovr_encode(ds: LabeledDataset, k: int) -> BinaryDataset:
    """Binary targets for class ``k`` versus all other classes."""
    if not 0 <= k < ds.class_count:
        raise DataError(f"class index {k} out of range 0..{ds.class_count - 1}")
    return BinaryDataset(ds.features, (ds.labels == k).astype(np.int64), k)


def write_split_indices(split: SplitPair, directory: str | os.PathLike) -> None:
    directory = Path(directory)
    for name, idx in (("train_indices.csv", split.train_indices), ("test_indices.csv", split.test_indices)):
        with (directory / name).open("w", encoding="utf-8", newline="") as fh:
            fh.writelines(f"{int(i)}\n" for i in idx)


def default_wine_path() -> Path:
    """Checked-in copy of the UCI Wine data (178 rows, 13 features + ``target``)."""
    return Path(__file__).with_name("data") / "wine.csv"
