# Copyright 2026 The pyHybridAct Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Dataset acquisition: synthetic generator, CSV and IDX loaders, standardization
and splits
"""

import enum
import gzip
import logging
import re
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .common import ContractViolation, DataFormatError, floor_fraction

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class Task(enum.Enum):
    BINARY = "binary"
    MULTICLASS = "multiclass"
    REGRESSION = "regression"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Dataset:
    """
    Immutable feature matrix + targets

    Regression datasets may hold standardized targets; target_mean and
    target_std map them back to original units.

    :param features: n x d matrix
    :param targets: class indices (classification) or reals (regression)
    :param task: Task kind
    :param name: Dataset name
    :param num_classes: Number of classes (2 for binary, 0 for regression)
    """

    features: np.ndarray
    targets: np.ndarray
    task: Task
    name: str = ""
    num_classes: int = 0
    target_mean: float = 0.0
    target_std: float = 1.0

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise ContractViolation(f"Features must be 2-D, got shape {features.shape}")
        n = features.shape[0]
        if n < 1:
            raise ContractViolation(f"Dataset {self.name!r} is empty")
        if not np.all(np.isfinite(features)):
            raise ContractViolation(f"Dataset {self.name!r} has non-finite features")

        if self.task is Task.REGRESSION:
            targets = np.array(self.targets, dtype=np.float64).reshape(-1)
            if not np.all(np.isfinite(targets)):
                raise ContractViolation(f"Dataset {self.name!r} has non-finite targets")
            num_classes = 0
        else:
            targets = np.array(self.targets).reshape(-1)
            if not np.all(targets == np.round(targets)):
                raise ContractViolation("Class targets must be integers")
            targets = targets.astype(np.int64)
            num_classes = self.num_classes or (2 if self.task is Task.BINARY else 0)
            if self.task is Task.BINARY and num_classes != 2:
                raise ContractViolation("Binary datasets have exactly 2 classes")
            if num_classes < 2:
                raise ContractViolation("Multiclass datasets need num_classes >= 2")
            if targets.min() < 0 or targets.max() >= num_classes:
                raise ContractViolation(
                    f"Class indices must lie in [0, {num_classes})"
                )
        if targets.shape[0] != n:
            raise ContractViolation(
                f"{n} feature rows but {targets.shape[0]} targets"
            )
        if not self.target_std > 0:
            raise ContractViolation("target_std must be positive")

        features.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "num_classes", num_classes)

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def is_classification(self):
        return self.task is not Task.REGRESSION

    def class_counts(self):
        """
        :return: Rows per class index
        :rtype: list
        """
        return np.bincount(self.targets, minlength=self.num_classes).tolist()

    def subset(self, indices, name=None):
        """
        Rows selected by indices, in the given order
        """
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.features[indices],
            self.targets[indices],
            self.task,
            self.name if name is None else name,
            self.num_classes,
            self.target_mean,
            self.target_std,
        )

    def with_features(self, features):
        return Dataset(
            features, self.targets, self.task, self.name,
            self.num_classes, self.target_mean, self.target_std,
        )

    def original_targets(self):
        """
        Targets in original units (regression only differs)
        """
        if self.task is Task.REGRESSION:
            return self.targets * self.target_std + self.target_mean
        return self.targets


@dataclass(frozen=True)
class SplitSpec:
    """
    :param train_fraction: Share of rows in the train part, in (0, 1)
    :param seed: Seed of the permutation
    :param stratified: Preserve class proportions (classification only)
    """

    train_fraction: float = 0.8
    seed: int = 0
    stratified: bool = False

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ContractViolation(
                f"train_fraction must be in (0, 1), got {self.train_fraction!r}"
            )


def generate_synthetic_binary(n=1000, d=20, seed=0, informative=10,
                              class_sep=1.75, flip_fraction=0.02):
    """
    Seeded two-cluster binary problem

    A unit-norm direction w is drawn over the informative coordinates; class
    1 rows are centred at +class_sep*w and class 0 rows at -class_sep*w with
    unit covariance. Remaining coordinates are standard normal noise. Labels
    are balanced (floor(n/2) zeros, ceil(n/2) ones) before a seeded
    flip_fraction of them is flipped.

    :param n: Number of rows (>= 2)
    :type n: int
    :param d: Number of features (>= 1)
    :type d: int
    :param seed: Generator seed
    :type seed: int
    :rtype: Dataset
    """
    if n < 2:
        raise ContractViolation(f"n must be >= 2, got {n}")
    if d < 1:
        raise ContractViolation(f"d must be >= 1, got {d}")
    rng = np.random.default_rng(seed)
    n_inf = min(informative, d)

    w = rng.standard_normal(n_inf)
    w /= np.linalg.norm(w)

    labels = np.zeros(n, dtype=np.int64)
    labels[n // 2 :] = 1
    labels = labels[rng.permutation(n)]

    features = rng.standard_normal((n, d))
    signs = 2.0 * labels - 1.0
    features[:, :n_inf] += class_sep * signs[:, None] * w[None, :]

    n_flip = int(round(flip_fraction * n))
    if n_flip:
        flipped = rng.choice(n, size=n_flip, replace=False)
        labels[flipped] = 1 - labels[flipped]

    return Dataset(features, labels, Task.BINARY, "synthetic-binary", 2)


def _first_line(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return next((line for line in fh if line.strip()), "")
    except OSError as e:
        raise type(e)(f"Cannot open {path} : {e}") from e


def _read_table(path, n_cols, sep, header):
    """
    Read a delimited file as stripped strings

    Blank lines are dropped, and so is the first non-blank line when header
    is set. Every remaining line must hold exactly n_cols fields.

    :return: (cells, line numbers), cells an n x n_cols array of str
    :rtype: tuple
    """
    try:
        frame = pd.read_csv(path, sep=sep, header=None, dtype=str, keep_default_na=False,
                            skip_blank_lines=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataFormatError(path, "no data rows") from None
    except pd.errors.ParserError as e:
        found = re.search(r"line (\d+), saw (\d+)", str(e))
        if found is None:
            raise DataFormatError(path, str(e)) from None
        line, n = (int(v) for v in found.groups())
        raise DataFormatError(path, f"expected {n_cols} columns, got {n}", line) from None
    except OSError as e:
        raise type(e)(f"Cannot open {path} : {e}") from e

    cells = frame.fillna("").astype(str).apply(lambda col: col.str.strip()).to_numpy()
    lines = np.arange(1, cells.shape[0] + 1)
    filled = (cells != "").sum(axis=1)
    keep = filled > 0
    cells, lines, filled = cells[keep], lines[keep], filled[keep]
    if header and lines.size:
        cells, lines, filled = cells[1:], lines[1:], filled[1:]
    if lines.size == 0:
        raise DataFormatError(path, "no data rows")
    bad = np.flatnonzero(filled != n_cols)
    if bad.size:
        i = bad[0]
        raise DataFormatError(path, f"expected {n_cols} columns, got {filled[i]}", int(lines[i]))
    return cells[:, :n_cols], lines


def _to_floats(cells, lines, path):
    values = pd.DataFrame(cells).apply(pd.to_numeric, errors="coerce").to_numpy(np.float64)
    bad = np.argwhere(np.isnan(values))
    if bad.size:
        row, col = bad[0]
        raise DataFormatError(path, f"non-numeric value {cells[row, col]!r}", int(lines[row]))
    return values


def _check_rows(path, n, expected_rows):
    if expected_rows is not None and n != expected_rows:
        raise DataFormatError(path, f"expected {expected_rows} rows, found {n}")


def load_iris(path, header=False, expected_rows=150):
    """
    Load the Iris CSV (4 numeric columns + class label)

    Class labels are mapped to indices in sorted label order.

    :param path: CSV file
    :param header: Skip the first non-empty line
    :type header: bool
    :param expected_rows: Required row count, None to accept any
    :rtype: Dataset
    """
    cells, lines = _read_table(path, 5, ",", header)
    features = _to_floats(cells[:, :4], lines, path)
    _check_rows(path, len(features), expected_rows)
    names, targets = np.unique(cells[:, 4], return_inverse=True)
    logger.debug(f"Loaded {len(features)} Iris rows from {path}, classes {names.tolist()}")
    return Dataset(features, targets, Task.MULTICLASS, "iris", max(len(names), 2))


def load_boston(path, header=False, expected_rows=506):
    """
    Load Boston Housing (13 features + median value target)

    The file may be whitespace or comma delimited, decided by its first line.

    :param path: Data file
    :param header: Skip the first non-empty line
    :type header: bool
    :param expected_rows: Required row count, None to accept any
    :rtype: Dataset
    """
    sep = "," if "," in _first_line(path) else r"\s+"
    cells, lines = _read_table(path, 14, sep, header)
    values = _to_floats(cells, lines, path)
    _check_rows(path, len(values), expected_rows)
    logger.debug(f"Loaded {len(values)} Boston Housing rows from {path}")
    return Dataset(values[:, :13], values[:, 13], Task.REGRESSION, "boston")


def _read_idx(path, magic, ndim):
    opener = gzip.open if str(path).endswith(".gz") else open
    try:
        with opener(path, "rb") as fh:
            raw = fh.read()
    except OSError as e:
        raise type(e)(f"Cannot read {path} : {e}") from e

    header_len = 4 + 4 * ndim
    if len(raw) < header_len:
        raise DataFormatError(path, "truncated IDX header")
    found = int.from_bytes(raw[0:4], byteorder="big")
    if found != magic:
        raise DataFormatError(path, f"bad magic 0x{found:08x}, expected 0x{magic:08x}")
    dims = [
        int.from_bytes(raw[4 + 4 * i : 8 + 4 * i], byteorder="big") for i in range(ndim)
    ]
    expected = int(np.prod(dims))
    body = len(raw) - header_len
    if body < expected:
        raise DataFormatError(path, f"truncated IDX body: {body} of {expected} bytes")
    if body > expected:
        raise DataFormatError(path, f"IDX size mismatch: {body - expected} trailing bytes")
    return dims, np.frombuffer(raw, dtype=np.uint8, count=expected, offset=header_len)


def load_mnist(images_path, labels_path, limit=None):
    """
    Load MNIST from IDX files (optionally gzip-compressed)

    Pixels are scaled to [0, 1]; each image becomes one 784-column row.

    :param images_path: IDX3 images file (magic 0x00000803)
    :param labels_path: IDX1 labels file (magic 0x00000801)
    :param limit: Keep only the first limit rows (file order)
    :type limit: int
    :rtype: Dataset
    """
    (n_img, rows, cols), pixels = _read_idx(images_path, IDX_IMAGES_MAGIC, 3)
    (n_lab,), labels = _read_idx(labels_path, IDX_LABELS_MAGIC, 1)
    if n_img != n_lab:
        raise DataFormatError(
            labels_path, f"{n_lab} labels for {n_img} images in {images_path}"
        )
    if n_lab and labels.max() > 9:
        raise DataFormatError(labels_path, f"label {int(labels.max())} out of range 0-9")

    n = n_img if limit is None else min(int(limit), n_img)
    features = pixels.reshape(n_img, rows * cols)[:n].astype(np.float64)
    features /= 255.0
    logger.info(f"Loaded {n} MNIST rows ({rows}x{cols}) from {images_path}")
    return Dataset(features, labels[:n], Task.MULTICLASS, "mnist", 10)


class Standardizer:
    """
    Per-feature affine transform to zero mean / unit variance

    Built with fit_standardizer on training rows only. Regression targets are
    standardized too when target statistics were fitted.
    """

    def __init__(self, mean, std, target_mean=None, target_std=None):
        self._mean = np.asarray(mean, dtype=np.float64)
        self._std = np.asarray(std, dtype=np.float64)
        self._target_mean = target_mean
        self._target_std = target_std
        self._logger = logging.getLogger(__name__)

    @property
    def mean(self):
        return self._mean

    @property
    def std(self):
        return self._std

    @property
    def target_mean(self):
        return self._target_mean

    @property
    def target_std(self):
        return self._target_std

    def apply(self, data):
        """
        Standardize a dataset

        :param data: Dataset with the fitted column count
        :type data: Dataset
        :rtype: Dataset
        """
        if data.n_features != self._mean.shape[0]:
            raise ContractViolation(
                f"Standardizer fitted on {self._mean.shape[0]} columns, got {data.n_features}"
            )
        self._logger.debug(f"Standardizing {data.n_rows} rows of {data.name}")
        features = (data.features - self._mean) / self._std
        if data.task is not Task.REGRESSION or self._target_mean is None:
            return data.with_features(features)
        targets = (data.targets - self._target_mean) / self._target_std
        return Dataset(
            features,
            targets,
            data.task,
            data.name,
            data.num_classes,
            data.target_mean + data.target_std * self._target_mean,
            data.target_std * self._target_std,
        )

    def invert(self, data):
        """
        Undo apply

        :rtype: Dataset
        """
        features = data.features * self._std + self._mean
        if data.task is not Task.REGRESSION or self._target_mean is None:
            return data.with_features(features)
        targets = data.targets * self._target_std + self._target_mean
        target_std = data.target_std / self._target_std
        return Dataset(
            features,
            targets,
            data.task,
            data.name,
            data.num_classes,
            data.target_mean - target_std * self._target_mean,
            target_std,
        )


def fit_standardizer(train, standardize_targets=True):
    """
    Fit a Standardizer on training rows

    Constant columns get std 1 and a warning.

    :param train: Training rows only
    :type train: Dataset
    :param standardize_targets: Also fit target statistics (regression)
    :rtype: Standardizer
    """
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    constant = np.flatnonzero(std == 0)
    if constant.size:
        logger.warning(
            f"{train.name}: constant feature column(s) {constant.tolist()}, using std 1"
        )
        std = np.where(std == 0, 1.0, std)

    target_mean = target_std = None
    if train.task is Task.REGRESSION and standardize_targets:
        target_mean = float(train.targets.mean())
        target_std = float(train.targets.std())
        if target_std == 0:
            logger.warning(f"{train.name}: constant regression target, using std 1")
            target_std = 1.0
    return Standardizer(mean, std, target_mean, target_std)


def stratified_split(data, spec):
    """
    Seeded train/test split

    The test part gets floor(n * (1 - train_fraction)) rows, per class when
    stratified.

    :param data: Dataset to split
    :type data: Dataset
    :param spec: Split parameters
    :type spec: SplitSpec
    :return: (train, test)
    :rtype: tuple
    """
    rng = np.random.default_rng(spec.seed)
    test_fraction = 1.0 - spec.train_fraction

    if spec.stratified:
        if not data.is_classification:
            raise ContractViolation("Stratified splits need a classification dataset")
        train_parts, test_parts = [], []
        for c in range(data.num_classes):
            idx = np.flatnonzero(data.targets == c)
            if idx.size == 0:
                continue
            if idx.size < 2:
                raise ContractViolation(
                    f"Class {c} has {idx.size} row(s), cannot stratify"
                )
            idx = rng.permutation(idx)
            n_test = min(max(floor_fraction(idx.size, test_fraction), 1), idx.size - 1)
            test_parts.append(idx[:n_test])
            train_parts.append(idx[n_test:])
        train_idx = rng.permutation(np.concatenate(train_parts))
        test_idx = rng.permutation(np.concatenate(test_parts))
    else:
        perm = rng.permutation(data.n_rows)
        n_test = floor_fraction(data.n_rows, test_fraction)
        if n_test < 1 or n_test >= data.n_rows:
            raise ContractViolation(
                f"Split of {data.n_rows} rows at {spec.train_fraction} leaves an empty part"
            )
        test_idx, train_idx = perm[:n_test], perm[n_test:]

    return data.subset(train_idx), data.subset(test_idx)
