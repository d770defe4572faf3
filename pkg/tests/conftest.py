import numpy as np
import pytest

from singboost.data import Dataset, SyntheticSpec, simulate_gaussian_linear


@pytest.fixture
def rng():
    return np.random.default_rng(20191216)


@pytest.fixture
def small_sim():
    d, beta, support = simulate_gaussian_linear(SyntheticSpec(n=100, p=20, s0=5, snr=2.0, seed=11))
    return d, beta, support


def random_dataset(seed, n=60, p=8):
    r = np.random.default_rng(seed)
    x = r.standard_normal((n, p))
    y = x @ r.standard_normal(p) + r.standard_normal(n)
    return Dataset(x, y)
