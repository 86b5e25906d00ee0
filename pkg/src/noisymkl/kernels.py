"""Gaussian kernel family and precomputed Gram matrices.

The bank holds one kernel per (width, feature scope) pair: ten widths
2^-3 ... 2^6, each applied to all features and to every single feature,
so a d-column dataset yields 10 * (d + 1) kernels.

Two width conventions are supported:

* ``"sigma"`` (default): k(x, x') = exp(-||x - x'||^2 / (2 * width^2))
* ``"gamma"``: k(x, x') = exp(-width * ||x - x'||^2)
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

WIDTH_GRID = tuple(2.0 ** k for k in range(-3, 7))
KERNEL_MODES = ("sigma", "gamma")

_CACHE_MAGIC = b"NMKLBANK"
_CACHE_VERSION = 1


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel width plus feature scope (None = all features)."""

    width: float
    scope: int | None = None

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError(f"width must be positive, got {self.width}")
        if self.scope is not None and self.scope < 0:
            raise ValueError(f"scope index must be >= 0, got {self.scope}")


def build_bank(d: int) -> list[KernelSpec]:
    """Kernel specs for a d-feature dataset: 10 * (d + 1) entries.

    Ordering is scope-major (all-features block first, then one block per
    feature in column order) and width-minor (ascending widths).
    """
    if d < 1:
        raise ValueError(f"need at least one feature, got d={d}")
    scopes: list[int | None] = [None] + list(range(d))
    return [KernelSpec(w, s) for s in scopes for w in WIDTH_GRID]


def _scoped(X: np.ndarray, spec: KernelSpec) -> np.ndarray:
    if spec.scope is None:
        return X
    if spec.scope >= X.shape[1]:
        raise ValueError(f"scope index {spec.scope} out of range for d={X.shape[1]}")
    return X[:, spec.scope:spec.scope + 1]


def _apply(sqdist: np.ndarray, spec: KernelSpec, mode: str) -> np.ndarray:
    if mode == "sigma":
        return np.exp(-sqdist / (2.0 * spec.width ** 2))
    if mode == "gamma":
        return np.exp(-spec.width * sqdist)
    raise ValueError(f"unknown kernel mode {mode!r}")


def gram(spec: KernelSpec, X: np.ndarray, mode: str = "sigma") -> np.ndarray:
    """Kernel matrix over the rows of X: symmetric with unit diagonal.

    Each unordered pair is evaluated once and mirrored, so the output is
    bitwise symmetric.
    """
    X = np.asarray(X, dtype=np.float64)
    Xs = _scoped(X, spec)
    return _apply(squareform(pdist(Xs, "sqeuclidean")), spec, mode)


def cross_gram(spec: KernelSpec, X_train: np.ndarray, X_query: np.ndarray,
               mode: str = "sigma") -> np.ndarray:
    """Kernel values between training rows (axis 0) and query rows (axis 1)."""
    X_train = np.asarray(X_train, dtype=np.float64)
    X_query = np.asarray(X_query, dtype=np.float64)
    if X_train.shape[1] != X_query.shape[1]:
        raise ValueError(f"feature counts differ: train d={X_train.shape[1]}, "
                         f"query d={X_query.shape[1]}")
    return _apply(cdist(_scoped(X_train, spec), _scoped(X_query, spec),
                        "sqeuclidean"), spec, mode)


def rkhs_norm_sq(c: np.ndarray, K: np.ndarray) -> float:
    """Quadratic form c' K c, clamped to be nonnegative."""
    c = np.asarray(c, dtype=np.float64)
    if K.shape != (c.size, c.size):
        raise ValueError(f"coefficient length {c.size} does not match Gram "
                         f"shape {K.shape}")
    return max(float(c @ K @ c), 0.0)


@dataclass(frozen=True)
class KernelBank:
    """Immutable kernel specs plus their stacked training Gram matrices."""

    specs: list[KernelSpec]
    grams: np.ndarray  # (m, n, n)
    mode: str = "sigma"

    def __post_init__(self):
        if self.grams.ndim != 3 or self.grams.shape[1] != self.grams.shape[2]:
            raise ValueError(f"grams must be (m, n, n), got {self.grams.shape}")
        if len(self.specs) != self.grams.shape[0]:
            raise ValueError(f"{len(self.specs)} specs for {self.grams.shape[0]} grams")

    @property
    def m(self) -> int:
        return self.grams.shape[0]

    @property
    def n(self) -> int:
        return self.grams.shape[1]

    @classmethod
    def from_data(cls, X: np.ndarray, specs: list[KernelSpec] | None = None,
                  mode: str = "sigma", dtype=np.float64) -> "KernelBank":
        """Precompute all Gram matrices over the rows of X.

        ``dtype`` controls storage precision (float32 halves memory for
        large banks).
        """
        X = np.asarray(X, dtype=np.float64)
        if specs is None:
            specs = build_bank(X.shape[1])
        stacked = np.empty((len(specs), X.shape[0], X.shape[0]), dtype=dtype)
        for j, spec in enumerate(specs):
            stacked[j] = gram(spec, X, mode=mode)
        return cls(specs=specs, grams=stacked, mode=mode)

    def save(self, path: str) -> None:
        """Write the bank to a versioned binary cache file."""
        header = {
            "n": self.n,
            "m": self.m,
            "dtype": str(self.grams.dtype),
            "mode": self.mode,
            "widths": [spec.width for spec in self.specs],
            "scopes": [spec.scope for spec in self.specs],
        }
        blob = json.dumps(header, sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(_CACHE_MAGIC)
            fh.write(_CACHE_VERSION.to_bytes(4, "little"))
            fh.write(len(blob).to_bytes(4, "little"))
            fh.write(blob)
            fh.write(np.ascontiguousarray(self.grams).tobytes())

    @classmethod
    def load(cls, path: str) -> "KernelBank":
        with open(path, "rb") as fh:
            magic = fh.read(len(_CACHE_MAGIC))
            if magic != _CACHE_MAGIC:
                raise ValueError(f"{path}: not a kernel bank cache")
            version = int.from_bytes(fh.read(4), "little")
            if version != _CACHE_VERSION:
                raise ValueError(f"{path}: unsupported cache version {version}")
            header = json.loads(fh.read(int.from_bytes(fh.read(4), "little")))
            raw = fh.read()
        m, n = header["m"], header["n"]
        grams = np.frombuffer(raw, dtype=np.dtype(header["dtype"])).reshape(m, n, n)
        specs = [KernelSpec(w, s) for w, s in zip(header["widths"], header["scopes"])]
        return cls(specs=specs, grams=grams.copy(), mode=header["mode"])
