import numpy as np
import pytest

from nvengine.params import RateConstants, SpinParams
from nvengine.nv_model import optical_generator


@pytest.fixture(scope="session")
def rates():
    return RateConstants()


@pytest.fixture(scope="session")
def generator_05(rates):
    """Optical generator at the 0.5 MHz reference excitation rate."""
    return optical_generator(rates.with_gamma(0.5))


@pytest.fixture(scope="session")
def spin_params():
    return SpinParams()


def random_generator_matrix(rng, n=7, scale=50.0):
    """Random population-conserving generator: non-negative off-diagonal
    entries, columns summing to zero."""
    r = rng.uniform(0.0, scale, size=(n, n))
    np.fill_diagonal(r, 0.0)
    m = r.copy()
    np.fill_diagonal(m, -r.sum(axis=0))
    return m
