"""Synthetic dataset generators and delimited-text loading.

The generators are pure functions of their arguments (same seed, same
data).  The spiral task is deliberately not linearly separable so that
activation choices actually matter at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import tensor


class FormatError(ValueError):
    def __init__(self, line: int, msg: str):
        self.line = line
        super().__init__(f"line {line}: {msg}")


class ParseError(ValueError):
    def __init__(self, line: int, col: int, msg: str):
        self.line = line
        self.col = col
        super().__init__(f"line {line}, column {col}: {msg}")


@dataclass
class Dataset:
    features: np.ndarray          # (N, d)
    labels: np.ndarray            # (N,) int64 for classification, (N, m) float for regression
    split: str = "train"

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def classification(self) -> bool:
        return self.labels.ndim == 1

    @property
    def n_classes(self) -> int:
        if not self.classification:
            raise ValueError("regression dataset has no class count")
        return int(self.labels.max()) + 1 if self.labels.size else 0


def gen_blobs(n_per_class: int, classes: int, dim: int, spread: float,
              seed: int, split: str = "train") -> Dataset:
    """Gaussian blobs with class means on scaled standard-basis directions.

    Mean of class c is 3*(1 + c//dim) * e_{c mod dim}; ``spread`` is the
    isotropic noise sigma.
    """
    if n_per_class < 1 or classes < 1 or dim < 1:
        raise ValueError("sizes must be positive")
    rng = np.random.default_rng(seed)
    feats = []
    labels = []
    for c in range(classes):
        mean = np.zeros(dim)
        mean[c % dim] = 3.0 * (1 + c // dim)
        feats.append(mean + spread * rng.standard_normal((n_per_class, dim)))
        labels.append(np.full(n_per_class, c, dtype=np.int64))
    return Dataset(tensor(np.vstack(feats)), np.concatenate(labels), split)


# Spiral arm k at parameter t in [0, 1]:
#   r = 0.1 + 0.9 t,  theta = 2*pi*turns*t + pi*k
#   x = r cos(theta), y = r sin(theta)  (+ gaussian noise)
def gen_spirals(n_per_class: int, turns: float = 1.5, noise: float = 0.05,
                seed: int = 0, split: str = "train") -> Dataset:
    """Two interleaved spiral arms, labels 0 and 1."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be positive")
    rng = np.random.default_rng(seed)
    feats = []
    labels = []
    for arm in range(2):
        t = rng.uniform(0.0, 1.0, size=n_per_class)
        r = 0.1 + 0.9 * t
        theta = 2.0 * np.pi * turns * t + np.pi * arm
        pts = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
        pts += noise * rng.standard_normal(pts.shape)
        feats.append(pts)
        labels.append(np.full(n_per_class, arm, dtype=np.int64))
    return Dataset(tensor(np.vstack(feats)), np.concatenate(labels), split)


def load_csv(path, label_col: int = 0, has_header: bool = False,
             delimiter: str = ",", split: str = "train") -> Dataset:
    """Parse a delimited text file into features plus integer labels.

    Rows must be rectangular; every non-label cell must parse as a real.
    Line and column numbers in errors are 1-based and count the raw file
    (including any header).
    """
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    start = 1 if has_header else 0
    feats = []
    labels = []
    width = None
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        cells = line.split(delimiter)
        if width is None:
            width = len(cells)
            if width < 2:
                raise FormatError(lineno, "need at least one feature and a label")
            if not (0 <= label_col < width):
                raise FormatError(lineno, f"label column {label_col} out of range")
        elif len(cells) != width:
            raise FormatError(
                lineno, f"expected {width} cells, found {len(cells)}")
        row = []
        label = None
        for col, cell in enumerate(cells):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(lineno, col + 1,
                                 f"not a number: {cell!r}") from None
            if col == label_col:
                if value != int(value):
                    raise ParseError(lineno, col + 1,
                                     f"label must be an integer: {cell!r}")
                label = int(value)
            else:
                row.append(value)
        feats.append(row)
        labels.append(label)
    if not feats:
        return Dataset(np.zeros((0, 0)), np.zeros(0, dtype=np.int64), split)
    return Dataset(tensor(feats), np.asarray(labels, dtype=np.int64), split)


def normalize(train: Dataset, test: Dataset,
              policy: str = "none") -> tuple[Dataset, Dataset, list]:
    """Standardize features using train-split statistics only.

    Zero-variance features are left untouched and reported in the returned
    warnings list.  ``none`` is the identity.
    """
    if policy == "none":
        return train, test, []
    if policy != "standardize":
        raise ValueError(f"unknown normalize policy {policy!r}")
    if train.n == 0:
        raise ValueError("cannot standardize with an empty train split")
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    warnings = []
    scale = std.copy()
    for j in np.nonzero(std == 0.0)[0]:
        warnings.append(f"feature {int(j)} has zero variance; left unstandardized")
        mean[j] = 0.0
        scale[j] = 1.0
    new_train = Dataset((train.features - mean) / scale, train.labels, train.split)
    new_test = Dataset((test.features - mean) / scale, test.labels, test.split)
    return new_train, new_test, warnings
