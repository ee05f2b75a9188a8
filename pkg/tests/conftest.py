import csv

import numpy as np
import pytest

from vafnet.data import Task, load_csv


@pytest.fixture(scope="session")
def wine_csv(tmp_path_factory):
    """The UCI wine data (178 rows, 13 features, 3 classes) as a CSV file
    with the class label in the last column."""
    from sklearn.datasets import load_wine

    data = load_wine()
    path = tmp_path_factory.mktemp("data") / "wine.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row, label in zip(data.data, data.target):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
    return path


@pytest.fixture(scope="session")
def wine_dataset(wine_csv):
    return load_csv(wine_csv, target_cols=-1, task=Task.CLASSIFICATION)


@pytest.fixture
def rng():
    return np.random.default_rng(42)
