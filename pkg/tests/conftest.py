import numpy as np
import pytest

from lomv import FactorModel


@pytest.fixture
def rng():
    return np.random.default_rng(20240)


def simple_model(sigma2=1.0, betas=(1.0, 2.0, 3.0), delta2s=None):
    betas = np.asarray(betas, dtype=float)
    if delta2s is None:
        delta2s = np.ones_like(betas)
    return FactorModel(sigma2, betas, delta2s)
