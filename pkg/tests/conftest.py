from pathlib import Path

import numpy as np
import pytest

from scoretest.models import build_model
from scoretest.models.gaussian import GaussianParams
from scoretest.models.quartic import QuarticExpFamilyParams
from scoretest.models.rbm import RbmParams

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = REPO_ROOT / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def gaussian_null() -> GaussianParams:
    return GaussianParams(mean=np.zeros(2), cov=np.eye(2))


@pytest.fixture
def gaussian_alt() -> GaussianParams:
    return GaussianParams(mean=np.array([1.0, 0.0]), cov=np.eye(2))


@pytest.fixture
def gaussian_pair(gaussian_null, gaussian_alt):
    """N(0, I) against N((1, 0), I): a = ½‖μ‖² = 0.5, v = ‖μ‖² = 1."""
    return build_model(gaussian_null), build_model(gaussian_alt)


@pytest.fixture
def quartic_pair():
    return (
        build_model(QuarticExpFamilyParams(tau=1.0, d=2)),
        build_model(QuarticExpFamilyParams(tau=1.5, d=2)),
    )


@pytest.fixture
def small_rbm() -> RbmParams:
    return RbmParams(
        W=np.array([[0.5, -0.3], [0.2, 0.4], [-0.6, 0.1]]),
        b=np.array([0.1, -0.2, 0.3]),
        c=np.array([0.05, -0.1]),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
