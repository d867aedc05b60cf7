import numpy as np
import pytest

from causalmedian import Dataset


@pytest.fixture
def rng_np():
    return np.random.default_rng(1234)


def random_dataset(gen, n=60, num_confounders=3, positive_outcome=True):
    """Small arbitrary dataset with both exposure levels present."""
    confounders = gen.normal(size=(n, num_confounders))
    exposure = gen.integers(0, 2, size=n).astype(float)
    exposure[0], exposure[1] = 0.0, 1.0
    if positive_outcome:
        outcome = np.exp(gen.normal(size=n))
    else:
        outcome = gen.normal(size=n)
    names = tuple(f"c{i + 1}" for i in range(num_confounders))
    return Dataset(outcome, exposure, confounders, names)
