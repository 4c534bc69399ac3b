import numpy as np
import pytest

from mirror_select import Dataset, substream


@pytest.fixture
def rng():
    return substream(20240817, "tests")


def standardized_dataset(x: np.ndarray, y: np.ndarray) -> Dataset:
    """Wrap already-standardized columns / centered response as a Dataset."""
    return Dataset(
        x=np.asfortranarray(x),
        y=y,
        standardized=True,
        column_means=np.zeros(x.shape[1]),
        column_sds=np.ones(x.shape[1]),
    )


def linear_dataset(n, p, coef, seed, label="lin"):
    """Standardized iid-Gaussian design with y = x @ coef + noise, centered."""
    from mirror_select import standardize

    gen = substream(seed, label)
    x = standardize(gen.standard_normal((n, p)))[0]
    y = x @ coef + gen.standard_normal(n)
    return standardized_dataset(x, y - y.mean()), gen
