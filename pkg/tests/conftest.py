from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"

# filled by test_acceptance.py, printed at the end of the run
ACCEPTANCE_RESULTS = {}


@pytest.fixture
def data_dir():
    return DATA


def two_blob_features(seed=0, n_per_blob=6, dim=8, spread=0.3):
    """Two planted clusters of ``n_per_blob`` points; labels 0/1."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(2, dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    X = np.vstack([c + spread * rng.normal(size=(n_per_blob, dim)) for c in centers])
    labels = np.repeat([0, 1], n_per_blob)
    return X, labels


@pytest.fixture
def two_blobs():
    return two_blob_features()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=str):
        status, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{status:7s} criterion {key}: {detail}")
