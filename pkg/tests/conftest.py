import numpy as np
import pytest

from condsub.data import from_arrays
from condsub.models import FunctionModel
from condsub.rng import rng_for


def bimodal_pair(n, seed=0, with_target=False):
    """x2 ~ U(0,1); x1 ~ N(0,1) below x2=0.5, N(4, sd=2) above."""
    rng = rng_for(seed, 99)
    x2 = rng.uniform(0, 1, n)
    x1 = np.where(x2 < 0.5, rng.normal(0, 1, n), rng.normal(4, 2, n))
    target = x1.copy() if with_target else None
    return from_arrays(["x1", "x2"], [x1, x2], target=target)


def triangle_pair(n, seed=0, with_target=False):
    """x1 ~ U(0,1); x2 ~ U(0, 1-x1): the classic extrapolation trap."""
    rng = rng_for(seed, 98)
    x1 = rng.uniform(0, 1, n)
    x2 = rng.uniform(0, 1, n) * (1 - x1)
    target = np.exp(x1 + x2) if with_target else None
    return from_arrays(["x1", "x2"], [x1, x2], target=target)


def exp_model():
    return FunctionModel(lambda c: np.exp(c["x1"] + c["x2"]), ["x1", "x2"])


@pytest.fixture
def tmp_csv(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return path

    return write
