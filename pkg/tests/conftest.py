import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from noisymkl import Dataset, KernelBank, KernelSpec, SaddleProblem


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_problem(rng, n=8, m=3, lam=0.5, cap=1.0, rho=None, d=2):
    """Small random saddle problem over PSD Gaussian grams."""
    X = rng.random((n, d))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    widths = 0.3 + rng.random(m)
    specs = [KernelSpec(float(w), None) for w in widths]
    bank = KernelBank.from_data(X, specs)
    if rho is None:
        rho = 0.7 * n
    prob = SaddleProblem(bank.grams, y, lam, cap=cap, rho=rho)
    return prob, bank, X


def small_dataset(rng, n=20, d=3):
    X = rng.random((n, d))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    return Dataset(X, y, name="small")
