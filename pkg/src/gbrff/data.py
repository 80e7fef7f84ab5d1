"""Dataset loading, binarization, standardization and split generation."""
import csv
import json
import math
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .rff import derive_seed

# Benchmark datasets, smallest first.
DATASET_NAMES = ("wine", "sonar", "glass", "newthyroid", "heart", "bupa", "iono",
                 "wdbc", "balance", "australian", "pima", "german", "splice", "spambase")
SMALLEST = DATASET_NAMES[:6]


class DatasetFormatError(ValueError):
    pass


class SpecCoverageError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    x: np.ndarray
    y: np.ndarray
    name: str = ""
    feature_names: tuple = ()

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        y = np.array(self.y, dtype=int)
        if x.ndim != 2 or x.shape[0] < 1:
            raise ValueError(f"x must be a non-empty 2-D matrix, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise ValueError(f"y shape {y.shape} does not match {x.shape[0]} rows")
        if not np.all(np.isfinite(x)):
            raise ValueError("x contains missing or non-finite values")
        if not np.all((y == 1) | (y == -1)):
            raise ValueError("labels must be in {-1, +1}")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def d(self):
        return self.x.shape[1]

    def subset(self, indices):
        return Dataset(self.x[indices], self.y[indices], self.name, self.feature_names)


@dataclass(frozen=True)
class DatasetSpec:
    source_path: str
    label_column: str
    negative_classes: frozenset
    positive_classes: frozenset
    name: str = ""

    def __post_init__(self):
        neg = frozenset(str(c) for c in self.negative_classes)
        pos = frozenset(str(c) for c in self.positive_classes)
        if not neg or not pos:
            raise ValueError("both class sets must be non-empty")
        if neg & pos:
            raise ValueError(f"class sets overlap on {sorted(neg & pos)}")
        object.__setattr__(self, "negative_classes", neg)
        object.__setattr__(self, "positive_classes", pos)
        if not self.name:
            stem = os.path.splitext(os.path.basename(self.source_path))[0]
            object.__setattr__(self, "name", stem)


def load_spec(path):
    """Read a JSON dataset spec; ``source_path`` is resolved relative to the spec file."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    source = raw["source_path"]
    if not os.path.isabs(source):
        source = os.path.join(os.path.dirname(os.path.abspath(path)), source)
    return DatasetSpec(source_path=source, label_column=raw["label_column"],
                       negative_classes=raw["negative_classes"],
                       positive_classes=raw["positive_classes"],
                       name=raw.get("name", ""))


def builtin_dir():
    return str(resources.files("gbrff") / "datasets")


def builtin_spec(name, dataset_dir=None):
    return load_spec(os.path.join(dataset_dir or builtin_dir(), f"{name}.json"))


def resolve_spec(name_or_path, dataset_dir=None):
    """A spec given either as a JSON path or as a dataset name in ``dataset_dir``."""
    if name_or_path.endswith(".json") or os.path.sep in name_or_path:
        return load_spec(name_or_path)
    return builtin_spec(name_or_path, dataset_dir)


def load_and_binarize(spec):
    """Parse ``spec.source_path`` and map raw classes to -1/+1."""
    with open(spec.source_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{spec.source_path}: empty file, header row expected") from None
        header = [h.strip() for h in header]
        if spec.label_column not in header:
            raise DatasetFormatError(f"{spec.source_path}:1: no label column {spec.label_column!r}")
        label_at = header.index(spec.label_column)
        feature_names = [h for j, h in enumerate(header) if j != label_at]
        xs, ys = [], []
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DatasetFormatError(f"{spec.source_path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            cls = row[label_at].strip()
            if cls in spec.negative_classes:
                ys.append(-1)
            elif cls in spec.positive_classes:
                ys.append(1)
            else:
                raise SpecCoverageError(f"{spec.source_path}:{lineno}: class {cls!r} is in neither class set")
            try:
                xs.append([float(c) for j, c in enumerate(row) if j != label_at])
            except ValueError as exc:
                raise DatasetFormatError(f"{spec.source_path}:{lineno}: {exc}") from None
    if not xs:
        raise DatasetFormatError(f"{spec.source_path}: no data rows")
    x = np.array(xs)
    if not np.all(np.isfinite(x)):
        bad = int(np.argwhere(~np.isfinite(x))[0, 0])
        raise DatasetFormatError(f"{spec.source_path}: non-finite value in data row {bad + 1}")
    return Dataset(x, np.array(ys), name=spec.name, feature_names=feature_names)


def load_builtin(name, dataset_dir=None):
    return load_and_binarize(builtin_spec(name, dataset_dir))


@dataclass(frozen=True, eq=False)
class Scaler:
    mean: np.ndarray
    scale: np.ndarray

    def transform(self, x):
        # constant columns carry scale 0 and map to 0 everywhere
        return (np.asarray(x, dtype=float) - self.mean) * self.scale


def fit_scaler(x):
    """Per-column mean and inverse population standard deviation."""
    x = np.asarray(x, dtype=float)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    constant = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    scale = np.where(constant, 0.0, 1.0 / np.where(constant, 1.0, std))
    return Scaler(mean, scale)


def standardize(train, others=()):
    """Standardize ``train`` with its own statistics and apply them to ``others``."""
    scaler = fit_scaler(train.x)

    def apply(ds):
        return Dataset(scaler.transform(ds.x), ds.y, ds.name, ds.feature_names)

    return apply(train), [apply(ds) for ds in others]


@dataclass(frozen=True)
class SplitPlan:
    seed: int = 0
    train_fraction: float = 0.3
    n_repeats: int = 20
    fold_count: int = 5

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction!r}")
        if self.n_repeats < 1:
            raise ValueError(f"n_repeats must be >= 1, got {self.n_repeats!r}")
        if self.fold_count < 2:
            raise ValueError(f"fold_count must be >= 2, got {self.fold_count!r}")


def train_size(n, fraction):
    # guard against 0.3 * 10 == 3.0000000000000004 style representation error
    return math.floor(fraction * n + 1e-9)


def make_splits(n, plan):
    """``plan.n_repeats`` random (train, test) index pairs, sorted within each side."""
    if n < 2:
        raise ValueError(f"need at least 2 points to split, got {n}")
    n_train = train_size(n, plan.train_fraction)
    if n_train < 1 or n_train >= n:
        raise ValueError(f"train size {n_train} is degenerate for n={n}")
    splits = []
    for r in range(plan.n_repeats):
        perm = np.random.default_rng(derive_seed(plan.seed, r)).permutation(n)
        splits.append((np.sort(perm[:n_train]), np.sort(perm[n_train:])))
    return splits


def make_folds(train_indices, fold_count, seed):
    """Shuffled contiguous folds; the first ``len % fold_count`` folds get one extra index."""
    train_indices = np.asarray(train_indices)
    if fold_count < 2:
        raise ValueError(f"fold_count must be >= 2, got {fold_count}")
    if fold_count > train_indices.size:
        raise ValueError(f"{fold_count} folds requested for {train_indices.size} indices")
    perm = np.random.default_rng(seed).permutation(train_indices.size)
    chunks = np.array_split(perm, fold_count)
    folds = []
    for k, val in enumerate(chunks):
        fit_pos = np.concatenate([c for j, c in enumerate(chunks) if j != k])
        folds.append((np.sort(train_indices[fit_pos]), np.sort(train_indices[val])))
    return folds
