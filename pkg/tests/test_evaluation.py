"""Cross-validation harness: folds, grid search, metrics, comparisons."""

import numpy as np
import pytest

from vafnet.data import Dataset, Task, synth_classification, synth_regression
from vafnet.evaluation import (CvReport, FoldResult, HyperGrid,
                               StratificationError, compare, fold_indices,
                               kfold, lr_grid, metric_accuracy, metric_rmse)
from vafnet.linalg import ShapeError
from vafnet.network import ModelFamily
from vafnet.optim import OptimizerSpec
from vafnet.training import TrainConfig


def quick_cfg(max_epochs=40, patience=25):
    return TrainConfig(max_epochs=max_epochs, optimizer=OptimizerSpec("rprop"),
                       patience=patience)


class TestMetrics:
    def test_perfect(self, rng):
        y = rng.standard_normal((5, 3))
        assert metric_rmse(y, y) == 0.0
        assert metric_accuracy(y, y) == 1.0

    def test_accuracy_half(self):
        y = np.array([[0.0, 1.0], [1.0, 0.0]])
        t = np.array([[1.0, 0.0], [1.0, 0.0]])
        assert metric_accuracy(y, t) == 0.5

    def test_accuracy_ties_take_lowest_index(self):
        y = np.array([[0.5, 0.5]])
        assert metric_accuracy(y, np.array([[1.0, 0.0]])) == 1.0
        assert metric_accuracy(y, np.array([[0.0, 1.0]])) == 0.0

    def test_rmse_matches_scalar_oracle(self, rng):
        y = rng.standard_normal((50, 3))
        t = rng.standard_normal((50, 3))
        acc = 0.0
        for i in range(50):
            for j in range(3):
                acc += (y[i, j] - t[i, j]) ** 2
        expected = (acc / 150.0) ** 0.5
        assert metric_rmse(y, t) == pytest.approx(expected, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            metric_rmse(np.zeros((2, 2)), np.zeros((3, 2)))
        with pytest.raises(ShapeError):
            metric_accuracy(np.zeros((2, 2)), np.zeros((2, 3)))


class TestHyperGrid:
    def test_lexicographic_points(self):
        grid = HyperGrid({"lr": (0.1, 0.2), "arch": ("a", "b")})
        assert grid.points() == [
            {"arch": "a", "lr": 0.1}, {"arch": "a", "lr": 0.2},
            {"arch": "b", "lr": 0.1}, {"arch": "b", "lr": 0.2}]

    def test_rejects_empty_axis(self):
        with pytest.raises(ValueError):
            HyperGrid({"arch": ()})

    def test_lr_grid_default(self):
        axis = lr_grid()
        assert len(axis) == 10
        assert axis[0] == 0.0001 and axis[-1] == 0.1
        diffs = np.diff(axis)
        np.testing.assert_allclose(diffs, diffs[0])


class TestFolds:
    def test_two_folds_partition(self):
        ds = synth_regression("linear", 10, 0.0, 0)
        folds = fold_indices(ds, 2, seed=1)
        assert [len(f) for f in folds] == [5, 5]
        union = np.sort(np.concatenate(folds))
        np.testing.assert_array_equal(union, np.arange(10))

    def test_sizes_within_one(self):
        ds = synth_regression("sin", 47, 0.0, 0)
        folds = fold_indices(ds, 10, seed=3)
        sizes = [len(f) for f in folds]
        assert sum(sizes) == 47
        assert max(sizes) - min(sizes) <= 1

    def test_stratified_class_proportions(self, wine_dataset):
        folds = fold_indices(wine_dataset, 10, seed=0)
        labels = wine_dataset.labels()
        global_counts = np.bincount(labels, minlength=3)
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1
        for f in folds:
            counts = np.bincount(labels[f], minlength=3)
            for c in range(3):
                # every fold holds its per-class share up to rounding
                assert abs(counts[c] - global_counts[c] / 10) < 1

    def test_deterministic(self, wine_dataset):
        a = fold_indices(wine_dataset, 5, seed=7)
        b = fold_indices(wine_dataset, 5, seed=7)
        for fa, fb in zip(a, b):
            np.testing.assert_array_equal(fa, fb)

    def test_validation(self):
        ds = synth_regression("linear", 10, 0.0, 0)
        with pytest.raises(ValueError):
            fold_indices(ds, 1, seed=0)
        with pytest.raises(ValueError):
            fold_indices(ds, 11, seed=0)


class TestKfold:
    def test_single_point_selected_everywhere(self):
        ds = synth_regression("linear", 40, 0.05, 2)
        report = kfold(ds, ModelFamily(), HyperGrid({"arch": ("net_3",)}),
                       k=2, seed=5, train_cfg=quick_cfg(max_epochs=15))
        assert report.k == 2
        for fold in report.folds:
            assert fold.best_params == {"arch": "net_3"}

    def test_separable_classification_high_accuracy(self):
        """Oracle first: the midpoint hyperplane scores 1.0, so the set is
        linearly separable; a small grid should then reach 0.95 mean."""
        ds = synth_classification("two-gaussians", 200, seed=1)
        assert np.array_equal((ds.x[:, 0] > 0).astype(int), ds.labels())

        report = kfold(ds, ModelFamily(), HyperGrid({"arch": ("net_5",)}),
                       k=10, seed=3, train_cfg=quick_cfg(max_epochs=40))
        assert report.metric_name == "accuracy"
        assert report.mean >= 0.95

    def test_deterministic_report(self):
        ds = synth_regression("sin", 60, 0.1, 4)
        grid = HyperGrid({"arch": ("net_3", "net_5")})
        a = kfold(ds, ModelFamily(), grid, k=3, seed=9,
                  train_cfg=quick_cfg(max_epochs=10))
        b = kfold(ds, ModelFamily(), grid, k=3, seed=9,
                  train_cfg=quick_cfg(max_epochs=10))
        assert a == b

    def test_parallel_equals_serial(self):
        ds = synth_regression("sin", 60, 0.1, 4)
        grid = HyperGrid({"arch": ("net_3", "net_5")})
        serial = kfold(ds, ModelFamily(), grid, k=3, seed=9,
                       train_cfg=quick_cfg(max_epochs=10), jobs=1)
        parallel = kfold(ds, ModelFamily(), grid, k=3, seed=9,
                         train_cfg=quick_cfg(max_epochs=10), jobs=4)
        assert serial == parallel

    def test_selection_is_extremum_of_retained_scores(self):
        ds = synth_regression("sin", 60, 0.1, 4)
        grid = HyperGrid({"arch": ("net_3", "net_5")})
        report = kfold(ds, ModelFamily(), grid, k=3, seed=2,
                       train_cfg=quick_cfg(max_epochs=10))
        for fold in report.folds:
            scores = [s for _, s in fold.scores]
            assert fold.best_metric == min(scores)  # rmse: lower is better

    def test_aggregate_recomputable(self):
        ds = synth_regression("sin", 60, 0.1, 4)
        report = kfold(ds, ModelFamily(), HyperGrid({"arch": ("net_3",)}),
                       k=3, seed=2, train_cfg=quick_cfg(max_epochs=10))
        metrics = [f.best_metric for f in report.folds]
        assert report.mean == pytest.approx(np.mean(metrics), abs=0)
        assert report.std == pytest.approx(np.std(metrics), abs=0)

    def test_lr_axis_feeds_optimizer(self):
        ds = synth_regression("sin", 80, 0.1, 4)
        grid = HyperGrid({"arch": ("net_3",), "lr": (0.05, 0.01)})
        cfg = TrainConfig(max_epochs=10, optimizer=OptimizerSpec("rmsprop"),
                          batch_size=16)
        report = kfold(ds, ModelFamily(), grid, k=2, seed=0, train_cfg=cfg)
        for fold in report.folds:
            assert fold.best_params["lr"] in (0.05, 0.01)
            assert len(fold.scores) == 2

    def test_missing_class_raises_stratification_error(self):
        x = np.arange(20, dtype=float).reshape(10, 2)
        t = np.zeros((10, 3))
        t[:9, 0] = 1.0
        t[9, 1] = 1.0  # class "b" has one sample, class "c" none... invalid
        t[0, 0] = 0.0
        t[0, 2] = 1.0  # ...so give "c" exactly one as well
        ds = Dataset(x=x, t=t, task=Task.CLASSIFICATION, classes=("a", "b", "c"))
        with pytest.raises(StratificationError):
            kfold(ds, ModelFamily(), HyperGrid({"arch": ("net_3",)}),
                  k=2, seed=0, train_cfg=quick_cfg(max_epochs=5))

    def test_requires_arch_axis(self):
        ds = synth_regression("linear", 20, 0.0, 0)
        with pytest.raises(ValueError, match="arch"):
            kfold(ds, ModelFamily(), HyperGrid({"lr": (0.1,)}), k=2, seed=0,
                  train_cfg=quick_cfg())

    def test_select_on_validation_flag(self):
        ds = synth_regression("sin", 60, 0.1, 4)
        grid = HyperGrid({"arch": ("net_3", "net_5")})
        report = kfold(ds, ModelFamily(), grid, k=2, seed=1,
                       train_cfg=quick_cfg(max_epochs=10), select_on="val")
        # reported metric is still the test-set score of the chosen point
        for fold in report.folds:
            retained = dict(fold.scores)
            key = frozenset(fold.best_params.items())
            assert fold.best_metric == retained[key]


class TestReportFormats:
    @staticmethod
    def toy_report():
        folds = tuple(
            FoldResult(fold=i, best_metric=0.9 + 0.01 * i,
                       best_params={"arch": "vnet3_10"})
            for i in range(3))
        return CvReport(k=3, n_examples=30, task=Task.CLASSIFICATION,
                        metric_name="accuracy", folds=folds)

    def test_csv_layout(self):
        lines = self.toy_report().to_csv().strip().split("\n")
        assert lines[0] == "fold,metric,arch"
        assert lines[1] == "0,0.9,vnet3_10"
        assert lines[-2].startswith("mean,")
        assert lines[-1].startswith("std,")

    def test_text_layout(self):
        text = self.toy_report().to_text()
        assert text == "accuracy: 0.9100 ± 0.0082 (vnet3_10)"

    def test_modal_params_prefers_most_common(self):
        folds = (FoldResult(0, 1.0, {"arch": "net_5"}),
                 FoldResult(1, 1.0, {"arch": "net_3"}),
                 FoldResult(2, 1.0, {"arch": "net_3"}))
        report = CvReport(k=3, n_examples=9, task=Task.REGRESSION,
                          metric_name="rmse", folds=folds)
        assert report.modal_params() == {"arch": "net_3"}


class TestCompare:
    @staticmethod
    def report_from(metrics, n=50):
        folds = tuple(FoldResult(i, m, {"arch": "net_3"})
                      for i, m in enumerate(metrics))
        return CvReport(k=len(metrics), n_examples=n, task=Task.REGRESSION,
                        metric_name="rmse", folds=folds)

    def test_identical_reports(self):
        r = self.report_from([0.5, 0.6, 0.7])
        summary = compare(r, r)
        assert summary.mean_diff == 0.0
        assert summary.a_higher == 0 and summary.b_higher == 0

    def test_uniform_offset(self):
        a = self.report_from([0.6, 0.7, 0.8])
        b = self.report_from([0.5, 0.6, 0.7])
        summary = compare(a, b)
        assert summary.mean_diff == pytest.approx(0.1)
        assert summary.a_higher == 3 and summary.b_higher == 0
        np.testing.assert_allclose(summary.per_fold_diff, 0.1)

    def test_mismatched_k_rejected(self):
        with pytest.raises(ValueError):
            compare(self.report_from([0.5, 0.6]), self.report_from([0.5]))

    def test_repeated_seeded_runs_close(self):
        """Two different seeds of the same configuration differ only by
        run-to-run noise (folds/init), bounded here empirically."""
        ds = synth_regression("sin", 80, 0.05, 3)
        grid = HyperGrid({"arch": ("net_5",)})
        a = kfold(ds, ModelFamily(), grid, k=4, seed=1,
                  train_cfg=quick_cfg(max_epochs=60))
        b = kfold(ds, ModelFamily(), grid, k=4, seed=2,
                  train_cfg=quick_cfg(max_epochs=60))
        summary = compare(a, b)
        assert abs(summary.mean_diff) < 0.2
