import numpy as np
import pytest
from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def blobs():
    """Three well-separated Gaussian blobs, 100 points each."""
    rng = np.random.default_rng(1)
    centers = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]])
    X = np.vstack([rng.normal(c, 0.3, size=(100, 2)) for c in centers])
    y = np.repeat([0, 1, 2], 100)
    return X, y


@pytest.fixture(scope="session")
def blob_split(blobs):
    """Deterministic per-class 75/25 train/test split of the blob set."""
    X, y = blobs
    rng = np.random.default_rng(7)
    train_idx, test_idx = [], []
    for cls in np.unique(y):
        pos = np.flatnonzero(y == cls)
        pos = pos[rng.permutation(len(pos))]
        train_idx.extend(pos[:75])
        test_idx.extend(pos[75:])
    train_idx = np.array(train_idx)
    test_idx = np.array(test_idx)
    return X[train_idx], y[train_idx], X[test_idx], y[test_idx]
