from pathlib import Path

import numpy as np
import pytest

from specpath.data_io import load_csv
from specpath.experiment import run
from specpath.synthetic import make_synthetic

DATASETS = Path(__file__).resolve().parents[1] / "datasets"
CONCRETE = DATASETS / "concrete.csv"
CONCRETE_TARGET = "compressive_strength"

SYNTHETIC_TERMS = [(3.0, [2, -1, 0, 0, 0]), (0.5, [0, 0, 1, 0, 0])]


def dataset_or_skip(name: str, target: str):
    path = DATASETS / name
    if not path.is_file():
        pytest.skip(f"{path} not available (see scripts/fetch_datasets.py)")
    return load_csv(path, target)


@pytest.fixture(scope="session")
def concrete():
    return dataset_or_skip("concrete.csv", CONCRETE_TARGET)


@pytest.fixture(scope="session")
def concrete_run(concrete):
    return run(concrete)


@pytest.fixture(scope="session")
def synthetic():
    return make_synthetic(2000, SYNTHETIC_TERMS, noise_std=0.01, seed=0)


@pytest.fixture(scope="session")
def synthetic_run(synthetic):
    return run(synthetic)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
