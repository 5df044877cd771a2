import gzip

import numpy as np
import pytest

from pyHybridAct import (
    SplitSpec,
    fit_standardizer,
    generate_synthetic_binary,
    stratified_split,
)

IRIS_LABELS = ("Iris-setosa", "Iris-versicolor", "Iris-virginica")


def write_idx(path, magic, dims, payload, compress=False):
    raw = magic.to_bytes(4, "big")
    for d in dims:
        raw += int(d).to_bytes(4, "big")
    raw += bytes(payload)
    opener = gzip.open if compress else open
    with opener(path, "wb") as fh:
        fh.write(raw)
    return path


@pytest.fixture
def iris_file(tmp_path):
    """
    12 rows, 4 per class, class-dependent means
    """
    rng = np.random.default_rng(7)
    lines = []
    for c, label in enumerate(IRIS_LABELS):
        for _ in range(4):
            values = rng.normal(c * 2.0, 0.3, 4)
            lines.append(",".join(f"{v:.3f}" for v in values) + f",{label}")
    path = tmp_path / "iris.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def boston_file(tmp_path):
    rng = np.random.default_rng(8)
    rows = rng.uniform(0.0, 10.0, (20, 14))
    path = tmp_path / "housing.data"
    path.write_text("\n".join(" ".join(f"{v:.4f}" for v in row) for row in rows) + "\n")
    return path


@pytest.fixture
def mnist_files(tmp_path):
    """
    5 images of 2x3 pixels, labels 0..4
    """
    pixels = np.arange(30, dtype=np.uint8) * 8
    images = write_idx(tmp_path / "images-idx3-ubyte", 0x00000803, (5, 2, 3), pixels)
    labels = write_idx(tmp_path / "labels-idx1-ubyte", 0x00000801, (5,), [0, 1, 2, 3, 4])
    return images, labels


@pytest.fixture(scope="session")
def synthetic_parts():
    """
    Standardized 80/20 parts of a small synthetic binary set
    """
    data = generate_synthetic_binary(200, 6, seed=0, informative=4)
    train, test = stratified_split(data, SplitSpec(0.8, 0, True))
    scaler = fit_standardizer(train)
    return scaler.apply(train), scaler.apply(test)
