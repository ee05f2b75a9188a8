"""Dataset loading, encoding, normalization, splitting, and synthetic
generators.

A dataset couples a feature matrix with a target matrix: regression targets
are raw columns, classification targets are exact one-hot rows over a
stable (sorted) label vocabulary. Normalization is a z-score per column
with population standard deviation; constant columns map to zero.
Normalization statistics ride along so the transform can be undone.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np


class Task(str, Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"

    def __str__(self) -> str:
        return self.value


class ParseError(ValueError):
    """A data file row could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class ColumnStats:
    mean: np.ndarray
    std: np.ndarray  # as used for scaling: zero-variance columns stored as 0


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray                      # (n, d) features
    t: np.ndarray                      # (n, c) targets
    task: Task
    classes: tuple[str, ...] | None = None   # classification label vocabulary
    feature_stats: ColumnStats | None = None
    target_stats: ColumnStats | None = None

    def __post_init__(self):
        if self.x.ndim != 2 or self.t.ndim != 2:
            raise ValueError("features and targets must be 2-D")
        if self.x.shape[0] != self.t.shape[0]:
            raise ValueError(
                f"row mismatch: {self.x.shape[0]} feature rows, "
                f"{self.t.shape[0]} target rows")
        if self.x.shape[0] < 1:
            raise ValueError("dataset must contain at least one row")
        if self.task == Task.CLASSIFICATION:
            if self.classes is None:
                raise ValueError("classification dataset needs a class list")
            ok = np.all(np.isin(self.t, (0.0, 1.0))) and np.all(self.t.sum(axis=1) == 1.0)
            if not ok:
                raise ValueError("classification targets must be exact one-hot rows")

    @property
    def n_examples(self) -> int:
        return self.x.shape[0]

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.t.shape[1]

    def labels(self) -> np.ndarray:
        """Class index per row (classification only)."""
        if self.task != Task.CLASSIFICATION:
            raise ValueError("labels() requires a classification dataset")
        return np.argmax(self.t, axis=1)

    def take(self, idx) -> "Dataset":
        """Row subset, preserving metadata."""
        idx = np.asarray(idx)
        return replace(self, x=self.x[idx], t=self.t[idx])


def load_csv(path, target_cols, task: Task, header: bool = False,
             classes: list[str] | None = None) -> Dataset:
    """Load a comma-separated file into a dataset.

    ``target_cols`` lists the target column indices (negative indices count
    from the end); every other column is a feature and must parse as a
    number. Classification expects exactly one target column of labels,
    one-hot encoded over sorted distinct labels (or over ``classes`` when
    given, rejecting anything outside it). Row order is preserved.
    """
    task = Task(task)
    if isinstance(target_cols, int):
        target_cols = [target_cols]
    if task == Task.CLASSIFICATION and len(target_cols) != 1:
        raise ValueError("classification expects exactly one target column")
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, 1):
            if not row:
                continue
            if header and line_no == 1:
                continue
            rows.append((line_no, [cell.strip() for cell in row]))
    if not rows:
        raise ParseError(f"{path}: no data rows")

    width = len(rows[0][1])
    targets = []
    for col in target_cols:
        resolved = col if col >= 0 else width + col
        if not 0 <= resolved < width:
            raise ValueError(f"target column {col} out of range for width {width}")
        targets.append(resolved)
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target columns: {target_cols}")
    feature_cols = [i for i in range(width) if i not in targets]
    if not feature_cols:
        raise ValueError("no feature columns remain")

    x_rows, t_raw = [], []
    for line_no, row in rows:
        if len(row) != width:
            raise ParseError(
                f"{path}:{line_no}: expected {width} columns, got {len(row)}",
                line=line_no)
        try:
            x_rows.append([float(row[i]) for i in feature_cols])
        except ValueError:
            bad = next(i for i in feature_cols if not _is_number(row[i]))
            raise ParseError(
                f"{path}:{line_no}: non-numeric feature {row[bad]!r} "
                f"in column {bad}", line=line_no) from None
        if task == Task.REGRESSION:
            try:
                t_raw.append([float(row[i]) for i in targets])
            except ValueError:
                raise ParseError(
                    f"{path}:{line_no}: non-numeric target", line=line_no) from None
        else:
            t_raw.append(row[targets[0]])

    x = np.array(x_rows, dtype=np.float64)
    if task == Task.REGRESSION:
        return Dataset(x=x, t=np.array(t_raw, dtype=np.float64), task=task)

    vocab = tuple(classes) if classes is not None else tuple(sorted(set(t_raw)))
    index = {label: i for i, label in enumerate(vocab)}
    t = np.zeros((len(t_raw), len(vocab)))
    for row_i, label in enumerate(t_raw):
        if label not in index:
            line_no = rows[row_i][0]
            raise ParseError(
                f"{path}:{line_no}: unknown label {label!r}", line=line_no)
        t[row_i, index[label]] = 1.0
    return Dataset(x=x, t=t, task=task, classes=vocab)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _column_stats(m: np.ndarray) -> ColumnStats:
    mean = m.mean(axis=0)
    std = m.std(axis=0)  # population std
    return ColumnStats(mean=mean, std=std)


def _apply_stats(m: np.ndarray, stats: ColumnStats) -> np.ndarray:
    safe = np.where(stats.std == 0.0, 1.0, stats.std)
    return (m - stats.mean) / safe


def _undo_stats(m: np.ndarray, stats: ColumnStats) -> np.ndarray:
    safe = np.where(stats.std == 0.0, 1.0, stats.std)
    return m * safe + stats.mean


def normalize(ds: Dataset) -> Dataset:
    """Z-score features per column; regression targets too.

    Constant columns map to zero. The statistics are stored on the result
    so denormalize can reproduce the original values. Normalizing an
    already-normalized dataset is rejected.
    """
    if ds.feature_stats is not None:
        raise ValueError("dataset is already normalized")
    fstats = _column_stats(ds.x)
    x = _apply_stats(ds.x, fstats)
    if ds.task == Task.REGRESSION:
        tstats = _column_stats(ds.t)
        t = _apply_stats(ds.t, tstats)
    else:
        tstats = None
        t = ds.t
    return replace(ds, x=x, t=t, feature_stats=fstats, target_stats=tstats)


def denormalize(ds: Dataset) -> Dataset:
    """Undo normalize, restoring the raw columns."""
    if ds.feature_stats is None:
        raise ValueError("dataset carries no normalization statistics")
    x = _undo_stats(ds.x, ds.feature_stats)
    t = _undo_stats(ds.t, ds.target_stats) if ds.target_stats is not None else ds.t
    return replace(ds, x=x, t=t, feature_stats=None, target_stats=None)


def denormalize_outputs(ds: Dataset, y: np.ndarray) -> np.ndarray:
    """Map model outputs from the normalized target scale back to raw units."""
    if ds.target_stats is None:
        return y
    return _undo_stats(y, ds.target_stats)


def split(ds: Dataset, fractions, seed: int, stratify: bool = False) -> list[Dataset]:
    """Random disjoint covering partitions of the rows.

    Fractions must sum to 1. Partition sizes follow cumulative rounding of
    the fractions. With stratify=True (classification only) each class is
    partitioned separately so per-class proportions match the fractions as
    closely as rounding allows.
    """
    fractions = [float(f) for f in fractions]
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
    if any(f < 0 for f in fractions):
        raise ValueError(f"fractions must be non-negative, got {fractions}")
    if stratify and ds.task != Task.CLASSIFICATION:
        raise ValueError("stratified split requires a classification dataset")
    rng = np.random.default_rng(seed)
    parts = [[] for _ in fractions]
    if stratify:
        labels = ds.labels()
        for c in np.unique(labels):
            idx = np.flatnonzero(labels == c)
            rng.shuffle(idx)
            for p, chunk in enumerate(_cut(idx, fractions)):
                parts[p].extend(chunk)
    else:
        idx = rng.permutation(ds.n_examples)
        for p, chunk in enumerate(_cut(idx, fractions)):
            parts[p].extend(chunk)
    return [ds.take(np.sort(np.array(p, dtype=int))) for p in parts]


def _cut(idx: np.ndarray, fractions: list[float]):
    """Slice indices at cumulative-rounded fraction boundaries."""
    n = len(idx)
    bounds = [0]
    acc = 0.0
    for f in fractions:
        acc += f
        bounds.append(int(round(acc * n)))
    bounds[-1] = n
    return [idx[bounds[i]:bounds[i + 1]] for i in range(len(fractions))]


def synth_regression(kind: str, n: int, noise_std: float, seed: int) -> Dataset:
    """1-D regression curves on an equispaced grid.

    linear: t = 2x + 1 on [-2, 2]; sin: t = sin(x) on [-pi, pi];
    abs: t = |x| on [-2, 2]. Gaussian noise of the given std is added to
    the targets.
    """
    if n < 4:
        raise ValueError(f"n must be >= 4, got {n}")
    rng = np.random.default_rng(seed)
    if kind == "linear":
        x = np.linspace(-2.0, 2.0, n)
        t = 2.0 * x + 1.0
    elif kind == "sin":
        x = np.linspace(-math.pi, math.pi, n)
        t = np.sin(x)
    elif kind == "abs":
        x = np.linspace(-2.0, 2.0, n)
        t = np.abs(x)
    else:
        raise ValueError(f"unknown regression kind: {kind!r}")
    if noise_std > 0.0:
        t = t + rng.normal(0.0, noise_std, n)
    return Dataset(x=x[:, None], t=t[:, None], task=Task.REGRESSION)


def synth_classification(kind: str, n: int, seed: int) -> Dataset:
    """2-D two-class point clouds, shuffled.

    two-gaussians: unit-variance clusters at (-5, 0) and (5, 0), so the
    class means sit 10 standard deviations apart (linearly separable).
    xor-clusters: four clusters of std 0.5 at (+-2, +-2), class = sign
    parity of the quadrant (not linearly separable).
    """
    if n < 4:
        raise ValueError(f"n must be >= 4, got {n}")
    rng = np.random.default_rng(seed)
    n0 = n // 2 + n % 2
    n1 = n // 2
    if kind == "two-gaussians":
        x0 = rng.normal(0.0, 1.0, (n0, 2)) + np.array([-5.0, 0.0])
        x1 = rng.normal(0.0, 1.0, (n1, 2)) + np.array([5.0, 0.0])
    elif kind == "xor-clusters":
        quads0 = [(2.0, 2.0), (-2.0, -2.0)]
        quads1 = [(2.0, -2.0), (-2.0, 2.0)]
        x0 = np.concatenate([rng.normal(0.0, 0.5, (c, 2)) + q for c, q in
                             zip((n0 // 2 + n0 % 2, n0 // 2), quads0)])
        x1 = np.concatenate([rng.normal(0.0, 0.5, (c, 2)) + q for c, q in
                             zip((n1 // 2 + n1 % 2, n1 // 2), quads1)])
    else:
        raise ValueError(f"unknown classification kind: {kind!r}")
    x = np.concatenate([x0, x1])
    labels = np.concatenate([np.zeros(n0, dtype=int), np.ones(n1, dtype=int)])
    order = rng.permutation(n)
    x, labels = x[order], labels[order]
    t = np.zeros((n, 2))
    t[np.arange(n), labels] = 1.0
    return Dataset(x=x, t=t, task=Task.CLASSIFICATION, classes=("0", "1"))
