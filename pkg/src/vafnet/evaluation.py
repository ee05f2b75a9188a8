"""K-fold cross-validation with an inner train/validation split and a
hyperparameter grid, plus the reported metrics.

Per fold: one fold is the test set, the remainder is split 75/25 into
training and validation, every grid point is trained (early-stopping loop)
and scored on the fold's test set, and the best-scoring point is kept.
The report aggregates the per-fold best scores as mean and (population)
standard deviation. Folds are deterministic under the seed and stratified
for classification. Fold x grid-point runs are independent, so they can be
fanned out over worker threads without changing the result.
"""

from __future__ import annotations

import io
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from vafnet.data import Dataset, Task, split
from vafnet.linalg import ShapeError
from vafnet.network import ModelFamily, forward
from vafnet.training import TrainConfig, train


class StratificationError(ValueError):
    """A class is absent from a training partition."""


@dataclass(frozen=True)
class HyperGrid:
    """Named axes of hyperparameter values.

    Points enumerate as the cartesian product with axes in sorted-name
    order, which fixes a deterministic lexicographic ordering.
    """

    axes: Mapping[str, tuple]

    def __post_init__(self):
        clean = {name: tuple(values) for name, values in self.axes.items()}
        if not clean:
            raise ValueError("grid needs at least one axis")
        for name, values in clean.items():
            if not values:
                raise ValueError(f"grid axis {name!r} is empty")
        object.__setattr__(self, "axes", clean)

    def points(self) -> list[dict]:
        names = sorted(self.axes)
        return [dict(zip(names, combo))
                for combo in itertools.product(*(self.axes[n] for n in names))]


def lr_grid(lo: float = 0.0001, hi: float = 0.1, count: int = 10) -> tuple[float, ...]:
    """Equispaced learning-rate axis (default: 10 values in [0.0001, 0.1])."""
    return tuple(float(v) for v in np.linspace(lo, hi, count))


@dataclass(frozen=True)
class FoldResult:
    fold: int
    best_metric: float
    best_params: dict
    scores: tuple[tuple[frozenset, float], ...] = ()  # (grid point items, test score)


@dataclass(frozen=True)
class CvReport:
    k: int
    n_examples: int
    task: Task
    metric_name: str               # "rmse" (lower wins) | "accuracy" (higher wins)
    folds: tuple[FoldResult, ...]

    @property
    def fold_metrics(self) -> np.ndarray:
        return np.array([f.best_metric for f in self.folds])

    @property
    def mean(self) -> float:
        return float(self.fold_metrics.mean())

    @property
    def std(self) -> float:
        return float(self.fold_metrics.std())

    def modal_params(self) -> dict:
        """The grid point selected most often across folds (ties: first seen)."""
        counts: dict[tuple, int] = {}
        order: list[tuple] = []
        for f in self.folds:
            key = tuple(sorted(f.best_params.items()))
            if key not in counts:
                order.append(key)
            counts[key] = counts.get(key, 0) + 1
        best = max(order, key=lambda k: counts[k])
        return dict(best)

    def to_csv(self) -> str:
        out = io.StringIO()
        names = sorted({n for f in self.folds for n in f.best_params})
        pad = "," * len(names)
        out.write("fold,metric," + ",".join(names) + "\n")
        for f in self.folds:
            vals = ",".join(str(f.best_params.get(n, "")) for n in names)
            out.write(f"{f.fold},{float(f.best_metric)!r},{vals}\n")
        out.write(f"mean,{float(self.mean)!r}{pad}\n")
        out.write(f"std,{float(self.std)!r}{pad}\n")
        return out.getvalue()

    def to_text(self) -> str:
        arch = self.modal_params().get("arch")
        suffix = f" ({arch})" if arch else ""
        return (f"{self.metric_name}: {self.mean:.4f} "
                f"± {self.std:.4f}{suffix}")


def metric_rmse(y: np.ndarray, t: np.ndarray) -> float:
    """Root mean squared error over all entries."""
    if y.shape != t.shape:
        raise ShapeError(f"rmse: shapes {y.shape} and {t.shape} differ",
                         y.shape, t.shape)
    d = y - t
    return float(np.sqrt(np.mean(d * d)))


def metric_accuracy(y: np.ndarray, t: np.ndarray) -> float:
    """Fraction of rows where argmax(y) == argmax(t); ties take the lowest index."""
    if y.shape != t.shape:
        raise ShapeError(f"accuracy: shapes {y.shape} and {t.shape} differ",
                         y.shape, t.shape)
    return float(np.mean(np.argmax(y, axis=1) == np.argmax(t, axis=1)))


def fold_indices(ds: Dataset, k: int, seed: int) -> list[np.ndarray]:
    """Disjoint covering folds with sizes differing by at most one.

    Classification folds are stratified: within each class the rows are
    shuffled and dealt round-robin, keeping per-fold class proportions
    within one sample of the global ones.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if ds.n_examples < k:
        raise ValueError(f"dataset of {ds.n_examples} rows cannot make {k} folds")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    if ds.task == Task.CLASSIFICATION:
        labels = ds.labels()
        start = 0
        for c in np.unique(labels):
            idx = np.flatnonzero(labels == c)
            rng.shuffle(idx)
            for j, row in enumerate(idx):
                folds[(start + j) % k].append(int(row))
            start += len(idx)  # rotate so small classes spread evenly
    else:
        order = rng.permutation(ds.n_examples)
        for j, row in enumerate(order):
            folds[j % k].append(int(row))
    return [np.sort(np.array(f, dtype=int)) for f in folds]


def _run_seed(seed: int, fold: int, point: int) -> tuple[int, int]:
    """Derive (net_seed, train_seed) deterministically, independent of order."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(fold, point))
    a, b = ss.generate_state(2)
    return int(a), int(b)


def kfold(dataset: Dataset, family: ModelFamily, grid: HyperGrid, k: int,
          seed: int, train_cfg: TrainConfig, select_on: str = "test",
          val_fraction: float = 0.25, jobs: int = 1) -> CvReport:
    """Cross-validate a model family over a hyperparameter grid.

    The grid must carry an "arch" axis of architecture names; an optional
    "lr" axis overrides the optimizer learning rate. Selection between grid
    points uses each point's score on the fold's test set (select_on="test",
    the default) or on the inner validation set (select_on="val"); the
    reported metric is always the selected point's test-set score.
    """
    if "arch" not in grid.axes:
        raise ValueError('grid needs an "arch" axis of architecture names')
    if select_on not in ("test", "val"):
        raise ValueError(f'select_on must be "test" or "val", got {select_on!r}')
    higher_is_better = dataset.task == Task.CLASSIFICATION
    metric_name = "accuracy" if higher_is_better else "rmse"
    folds = fold_indices(dataset, k, seed)
    points = grid.points()

    tasks = []
    for fi in range(k):
        rest = np.sort(np.concatenate([folds[j] for j in range(k) if j != fi]))
        rest_ds = dataset.take(rest)
        # point index len(points) never collides with a real run seed
        split_seed = _run_seed(seed, fi, len(points))[0]
        tr, va = split_train_val(rest_ds, val_fraction, seed=split_seed)
        _check_classes(tr, dataset, fi)
        test_ds = dataset.take(folds[fi])
        for pi, point in enumerate(points):
            tasks.append((fi, pi, point, tr, va, test_ds))

    def run(task):
        fi, pi, point, tr, va, test_ds = task
        net_seed, train_seed = _run_seed(seed, fi, pi)
        cfg = _point_config(train_cfg, point, train_seed)
        net = family.build(point["arch"], dataset.n_features,
                           dataset.n_outputs, seed=net_seed)
        best_net, _ = train(net, tr, va, cfg)
        metric = metric_accuracy if higher_is_better else metric_rmse
        test_score = metric(forward(best_net, test_ds.x)[0], test_ds.t)
        if select_on == "val":
            select_score = metric(forward(best_net, va.x)[0], va.t)
        else:
            select_score = test_score
        return fi, pi, point, test_score, select_score

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run, tasks))
    else:
        outcomes = [run(t) for t in tasks]

    per_fold: dict[int, list] = {fi: [] for fi in range(k)}
    for fi, pi, point, test_score, select_score in outcomes:
        per_fold[fi].append((pi, point, test_score, select_score))
    results = []
    for fi in range(k):
        entries = sorted(per_fold[fi])
        best = None
        for pi, point, test_score, select_score in entries:
            better = (best is None or
                      (select_score > best[3] if higher_is_better
                       else select_score < best[3]))
            if better:
                best = (pi, point, test_score, select_score)
        scores = tuple((frozenset(point.items()), test_score)
                       for _, point, test_score, _ in entries)
        results.append(FoldResult(fold=fi, best_metric=best[2],
                                  best_params=dict(best[1]), scores=scores))
    return CvReport(k=k, n_examples=dataset.n_examples, task=dataset.task,
                    metric_name=metric_name, folds=tuple(results))


def split_train_val(ds: Dataset, val_fraction: float, seed: int
                    ) -> tuple[Dataset, Dataset]:
    """Split the non-test remainder into training and validation parts."""
    stratify = ds.task == Task.CLASSIFICATION
    tr, va = split(ds, (1.0 - val_fraction, val_fraction), seed=seed,
                   stratify=stratify)
    return tr, va


def _check_classes(train_ds: Dataset, full: Dataset, fold: int) -> None:
    if full.task != Task.CLASSIFICATION:
        return
    present = set(np.unique(train_ds.labels()))
    expected = set(range(len(full.classes)))
    missing = sorted(expected - present)
    if missing:
        names = [full.classes[i] for i in missing]
        raise StratificationError(
            f"fold {fold}: classes {names} absent from the training partition")


def _point_config(base: TrainConfig, point: dict, train_seed: int) -> TrainConfig:
    optimizer = base.optimizer
    if "lr" in point:
        optimizer = optimizer.with_lr(float(point["lr"]))
    return TrainConfig(max_epochs=base.max_epochs, optimizer=optimizer,
                       patience=base.patience, batch_size=base.batch_size,
                       seed=train_seed)


@dataclass(frozen=True)
class ComparisonSummary:
    per_fold_diff: tuple[float, ...]  # a - b, fold by fold
    mean_diff: float
    a_higher: int
    b_higher: int

    def __str__(self) -> str:
        return (f"mean diff {self.mean_diff:+.4f}, "
                f"sign count {self.a_higher}:{self.b_higher}")


def compare(report_a: CvReport, report_b: CvReport) -> ComparisonSummary:
    """Fold-paired differences between two reports on the same folds."""
    if report_a.k != report_b.k:
        raise ValueError(f"reports have different K: {report_a.k} vs {report_b.k}")
    if report_a.n_examples != report_b.n_examples:
        raise ValueError("reports describe different datasets")
    diffs = tuple(float(a.best_metric - b.best_metric)
                  for a, b in zip(report_a.folds, report_b.folds))
    return ComparisonSummary(
        per_fold_diff=diffs,
        mean_diff=float(np.mean(diffs)),
        a_higher=sum(1 for d in diffs if d > 0),
        b_higher=sum(1 for d in diffs if d < 0),
    )
