"""Synthetic dataset generators for experiments and tests."""

from __future__ import annotations

import numpy as np

from .data import Dataset


def two_gaussians(n: int = 400, d: int = 4, seed: int = 0,
                  separation: float = 3.0) -> Dataset:
    """Balanced two-class Gaussian blobs with the given center separation.

    Class centers sit at +/- mu with ||2 mu|| = separation, isotropic unit
    noise. The Bayes accuracy is Phi(separation / 2).
    """
    rng = np.random.default_rng(seed)
    half = separation / 2.0 / np.sqrt(d)
    n_pos = n // 2
    labels = np.concatenate([np.ones(n_pos), -np.ones(n - n_pos)])
    X = rng.standard_normal((n, d)) + labels[:, None] * half
    return Dataset(X, labels, name=f"two_gaussians_n{n}_d{d}")


def heart_like(seed: int = 7) -> Dataset:
    """A 270 x 13 stand-in with a smooth nonlinear decision boundary.

    Matches the row/column counts of the UCI heart benchmark (so the
    kernel bank has 140 entries) without reproducing its content; labels
    follow a fixed polynomial rule over the first few features.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((270, 13))
    g = (X[:, 0] + 0.9 * X[:, 1] * X[:, 2] + 0.7 * X[:, 3] ** 2 - 0.7
         + 0.6 * X[:, 4] - 0.4 * X[:, 5])
    labels = np.where(g >= 0.0, 1.0, -1.0)
    return Dataset(X, labels, name="heart_like")
