"""Dataset loading, scaling, label-noise injection, and splitting.

File formats
------------
CSV: first column is the label, remaining columns are features. A header
row is auto-detected (any non-numeric cell in the first row). Labels may
be given as -1/+1 or 0/1 (0 maps to -1, 1 to +1).

svmlight: ``label idx:val idx:val ...`` with 1-based feature indices;
absent indices are zero. The feature count can be forced with ``dims`` or
is inferred as the largest index seen.

All randomness goes through ``numpy.random.default_rng`` (PCG64), so flip
masks and splits are reproducible across platforms for a given seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


class DataError(ValueError):
    """A file could not be parsed into a valid dataset."""


_VALID_RAW_LABELS = {-1.0, 0.0, 1.0}


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with binary labels in {-1, +1}."""

    features: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"features must be 2-d, got shape {X.shape}")
        n, d = X.shape
        if n < 2 or d < 1:
            raise ValueError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
        if y.shape != (n,):
            raise ValueError(f"labels shape {y.shape} does not match n={n}")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite values")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must all be -1 or +1")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray, name: str | None = None) -> "Dataset":
        """Row subset, preserving the given index order."""
        return Dataset(self.features[indices], self.labels[indices],
                       self.name if name is None else name)


@dataclass(frozen=True)
class NoiseSpec:
    """Label-flip probability and the seed driving the flip mask."""

    q: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.q < 0.5:
            raise ValueError(f"noise level q must lie in [0, 0.5), got {self.q}")


@dataclass(frozen=True)
class SplitResult:
    """Disjoint train/validation/test row indices covering the dataset."""

    train_indices: np.ndarray
    validation_indices: np.ndarray
    test_indices: np.ndarray


def _map_label(raw: float, where: str) -> float:
    if raw not in _VALID_RAW_LABELS:
        raise DataError(f"{where}: label {raw!r} is not in {{-1, 0, +1}}")
    return -1.0 if raw == 0.0 else raw


def _parse_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    rows: list[list[str]] = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if row and any(cell.strip() for cell in row):
                rows.append(row)
    if not rows:
        raise DataError(f"{path}: empty file")
    start = 0
    try:
        [float(cell) for cell in rows[0]]
    except ValueError:
        start = 1  # header row
    if start == len(rows):
        raise DataError(f"{path}: no data rows after header")
    labels, feats = [], []
    width = len(rows[start])
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise DataError(f"{path}:{lineno}: expected {width} columns, got {len(row)}")
        try:
            values = [float(cell) for cell in row]
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: non-numeric value ({exc})") from None
        labels.append(_map_label(values[0], f"{path}:{lineno}"))
        feats.append(values[1:])
    return np.asarray(feats, dtype=np.float64), np.asarray(labels, dtype=np.float64)


def _parse_svmlight(path: str, dims: int | None) -> tuple[np.ndarray, np.ndarray]:
    labels: list[float] = []
    entries: list[list[tuple[int, float]]] = []
    max_idx = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                labels.append(_map_label(float(parts[0]), f"{path}:{lineno}"))
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad label {parts[0]!r}") from None
            row = []
            for tok in parts[1:]:
                try:
                    idx_s, val_s = tok.split(":", 1)
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: bad entry {tok!r}") from None
                if idx < 1:
                    raise DataError(f"{path}:{lineno}: indices are 1-based, got {idx}")
                row.append((idx, val))
                max_idx = max(max_idx, idx)
            entries.append(row)
    if not labels:
        raise DataError(f"{path}: empty file")
    d = dims if dims is not None else max_idx
    if d < 1:
        raise DataError(f"{path}: no feature indices seen and no dims given")
    if max_idx > d:
        raise DataError(f"{path}: feature index {max_idx} exceeds dims={d}")
    X = np.zeros((len(labels), d), dtype=np.float64)
    for i, row in enumerate(entries):
        for idx, val in row:
            X[i, idx - 1] = val
    return X, np.asarray(labels, dtype=np.float64)


def load_dataset(path: str, fmt: str = "csv", dims: int | None = None,
                 name: str | None = None) -> Dataset:
    """Load a dataset file; row order is preserved.

    ``fmt`` is ``"csv"`` or ``"svmlight"``. Raises :class:`DataError` on
    malformed rows, labels outside {-1, 0, +1}, or empty files.
    """
    if fmt == "csv":
        X, y = _parse_csv(path)
    elif fmt == "svmlight":
        X, y = _parse_svmlight(path, dims)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if not np.all(np.isfinite(X)):
        raise DataError(f"{path}: non-finite feature values")
    if name is None:
        stem = str(path).replace("\\", "/").rsplit("/", 1)[-1]
        name = stem.rsplit(".", 1)[0]
    return Dataset(X, y, name=name)


def save_csv(data: Dataset, path: str) -> None:
    """Write label-first CSV at full float precision (round-trips exactly)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for yi, row in zip(data.labels, data.features):
            writer.writerow([repr(float(yi))] + [repr(float(v)) for v in row])


def minmax_scale(data: Dataset) -> Dataset:
    """Scale each feature column to [0, 1] via (x - min) / (max - min).

    Constant columns have zero spread and become all-zero.
    """
    X = data.features
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    scaled = np.where(span > 0, (X - lo) / np.where(span > 0, span, 1.0), 0.0)
    return Dataset(scaled, data.labels, name=data.name)


def flip_labels(data: Dataset, spec: NoiseSpec) -> tuple[Dataset, np.ndarray]:
    """Flip each label independently with probability ``spec.q``.

    Returns the corrupted dataset and the boolean flip mask. Identical
    (data, spec) inputs reproduce identical outputs.
    """
    rng = np.random.default_rng(spec.seed)
    mask = rng.random(data.n) < spec.q
    labels = np.where(mask, -data.labels, data.labels)
    return Dataset(data.features, labels, name=data.name), mask


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(data: Dataset, train_frac: float = 0.8,
          validation_frac_of_train: float = 0.1, seed: int = 0) -> SplitResult:
    """Random train/validation/test partition, deterministic given seed.

    The test set takes round(n * (1 - train_frac)) rows (round half up);
    the validation set takes the same rounding of the remaining training
    portion. Train and test must be nonempty; validation may be empty for
    small n. Index arrays are returned sorted.
    """
    n = data.n
    n_test = _round_half_up(n * (1.0 - train_frac))
    n_rest = n - n_test
    n_val = _round_half_up(n_rest * validation_frac_of_train)
    if n_test < 1 or n_rest - n_val < 1:
        raise ValueError(f"dataset of size {n} is too small for fractions "
                         f"({train_frac}, {validation_frac_of_train})")
    perm = np.random.default_rng(seed).permutation(n)
    return SplitResult(
        train_indices=np.sort(perm[n_test + n_val:]),
        validation_indices=np.sort(perm[n_test:n_test + n_val]),
        test_indices=np.sort(perm[:n_test]),
    )
