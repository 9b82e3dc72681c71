import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from models.bayes_models import EllipticalModel, GaussianPrior, LinearGaussianModel  # noqa: E402
from models.observation_map import SaturatingObservationMap  # noqa: E402
from models.radial_profile import RadialProfile  # noqa: E402
from utils.linalg import spd_factor  # noqa: E402
from utils.random_stream import RandomStream  # noqa: E402


def make_lg(d_x=1, d_y=1, a=None, r=1.0, sigma_x=1.0, mu_x=0.0, log_offset=0.0):
    a = np.zeros((d_y, d_x)) if a is None else np.asarray(a, dtype=float)
    return LinearGaussianModel(
        mu_x=np.full(d_x, mu_x),
        sigma_x=spd_factor(sigma_x * np.eye(d_x)),
        a=a,
        r=spd_factor(r * np.eye(d_y)),
        log_offset=log_offset,
    )


def make_elliptical(profile, d_x=1, d_y=1, coeffs=None, r=1.0, nonlinearity="tanh"):
    coeffs = np.zeros((d_y, d_x)) if coeffs is None else np.asarray(coeffs, dtype=float)
    return EllipticalModel(
        prior=GaussianPrior(np.zeros(d_x), spd_factor(np.eye(d_x))),
        obs_map=SaturatingObservationMap(coeffs, nonlinearity),
        profile=profile,
        r=spd_factor(r * np.eye(d_y)),
    )


@pytest.fixture
def lg_model():
    """d_x=2, d_y=1 linear-Gaussian model with a nonzero A."""
    return make_lg(d_x=2, d_y=1, a=[[1.0, -0.5]], r=0.5)


@pytest.fixture
def lg_null_model():
    """A = 0: the likelihood does not depend on x."""
    return make_lg(d_x=3, d_y=1)


@pytest.fixture
def student_model():
    return make_elliptical(RadialProfile.student_t(4.0, 2), d_x=3, d_y=2,
                           coeffs=[[0.5, -0.3, 0.2], [0.1, 0.4, -0.6]])


@pytest.fixture
def stream():
    return RandomStream(20240611)
