import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats
from scipy.special import gamma

from models.errors import NonIntegrableProfile, ValidationError
from models.radial_profile import RadialProfile, profile_normalization
from models.radial_sampler import RadialSampler, sample_elliptical_noise
from utils.linalg import mahalanobis_norm, spd_factor
from utils.random_stream import RandomStream


@pytest.mark.parametrize("d_y", [1, 2, 5])
def test_gaussian_normalization(d_y):
    c = profile_normalization(RadialProfile.gaussian(), d_y, spd_factor(np.eye(d_y)))
    assert_allclose(c, (2 * math.pi) ** (-d_y / 2), rtol=1e-9)


def test_cauchy_normalization():
    assert_allclose(profile_normalization(RadialProfile.cauchy(1), 1, spd_factor([[1.0]])), 1 / math.pi, rtol=1e-9)


def test_laplace_radial_mass():
    assert_allclose(RadialProfile.laplace().log_radial_mass(3), math.log(2.0), rtol=1e-9)


@pytest.mark.parametrize("beta", [0.5, 1.5, 3.0])
@pytest.mark.parametrize("d_y", [1, 4])
def test_gen_gaussian_radial_mass(beta, d_y):
    expected = gamma(d_y / beta) / beta
    assert_allclose(math.exp(RadialProfile.gen_gaussian(beta).log_radial_mass(d_y)), expected, rtol=1e-8)


def test_gen_cauchy_radial_mass():
    mass = math.exp(RadialProfile.gen_cauchy(4, 1.0).log_radial_mass(1))
    assert_allclose(mass, math.pi / (2 * math.sqrt(2)), rtol=1e-8)


def test_student_t_parameters():
    profile = RadialProfile.student_t(3.0, 2)
    assert (profile.a, profile.p, profile.alpha) == (1 / 3.0, 2, 2.5)


def test_log_phi_psi_matches_composition():
    r = np.linspace(0.0, 5.0, 11)
    for profile in (RadialProfile.sub_gaussian(0.7), RadialProfile.pearson7(2.0, 3.0)):
        assert_allclose(profile.log_phi_psi(r), profile.log_phi(profile.psi(r)), rtol=1e-12, atol=1e-15)


def test_non_integrable_polynomial_profile():
    with pytest.raises(NonIntegrableProfile, match="alpha > d_y/p"):
        RadialProfile.pearson7(1.0, 0.5).check_integrable(1)
    with pytest.raises(NonIntegrableProfile):
        RadialProfile.pearson7(1.0, 1.5).log_radial_mass(3)
    RadialProfile.pearson7(1.0, 1.6).check_integrable(3)


@pytest.mark.parametrize("kwargs", [dict(a=0.0), dict(a=1.0, beta=-1.0)])
def test_invalid_exponential_parameters(kwargs):
    with pytest.raises(ValidationError):
        RadialProfile("bad", "exponential", **kwargs)


def test_invalid_polynomial_exponent():
    with pytest.raises(ValidationError):
        RadialProfile.gen_cauchy(0, 1.0)


def test_gaussian_radii_are_chi():
    radii = RadialSampler(RadialProfile.gaussian(), 3).sample(RandomStream(1).generator, 20000)
    assert stats.kstest(radii ** 2, stats.chi2(3).cdf).pvalue > 1e-3


def test_table_sampler_matches_gen_gaussian():
    sampler = RadialSampler(RadialProfile.gen_gaussian(3.0), 2)
    assert not sampler.is_direct
    radii = sampler.sample(RandomStream(2).generator, 20000)
    # density r exp(-r^3) means r^3 ~ Gamma(2/3)
    assert stats.kstest(radii ** 3, stats.gamma(2.0 / 3.0).cdf).pvalue > 1e-3


def test_table_sampler_heavy_tail_mean():
    sampler = RadialSampler(RadialProfile.gen_cauchy(4, 1.0), 1)
    assert not sampler.is_direct
    radii = sampler.sample(RandomStream(3).generator, 20000)
    # density proportional to 1 / (1 + r^4) on r > 0: mean 1 / sqrt(2), variance 1 / 2
    se = math.sqrt(0.5) / math.sqrt(radii.size)
    assert abs(radii.mean() - 1 / math.sqrt(2)) < 5 * se


@pytest.mark.parametrize("profile", [
    RadialProfile.gen_gaussian(2.0),
    RadialProfile.gen_gaussian(1.0),
    RadialProfile.sub_gaussian(0.5),
    RadialProfile.pearson7(1.0, 2.0),
    RadialProfile.gen_cauchy(2, 1.5),
])
def test_named_family_parameters_sample_directly(profile):
    assert RadialSampler(profile, 1).is_direct


def test_sub_gaussian_radii():
    a, d = 2.0, 3
    radii = RadialSampler(RadialProfile.sub_gaussian(a), d).sample(RandomStream(6).generator, 20000)
    assert stats.kstest(2 * a * radii ** 2, stats.chi2(d).cdf).pvalue > 1e-3


def test_pearson7_radii():
    lam, alpha, d = 2.0, 3.0, 2
    radii = RadialSampler(RadialProfile.pearson7(lam, alpha), d).sample(RandomStream(7).generator, 20000)
    # r^2 / lam ~ BetaPrime(d / 2, alpha - d / 2)
    assert stats.kstest(radii ** 2 / lam, stats.betaprime(d / 2, alpha - d / 2).cdf).pvalue > 1e-3


def test_student_t_radii():
    nu, d = 5.0, 2
    radii = RadialSampler(RadialProfile.student_t(nu, d), d).sample(RandomStream(4).generator, 20000)
    # ||t||^2 / d ~ F(d, nu)
    assert stats.kstest(radii ** 2 / d, stats.f(d, nu).cdf).pvalue > 1e-3


def test_elliptical_noise_has_sampled_mahalanobis_radius():
    r = spd_factor([[2.0, 0.3], [0.3, 0.5]])
    noise = sample_elliptical_noise(RadialSampler(RadialProfile.gaussian(), 2), r, RandomStream(5).generator, 20000)
    squared = mahalanobis_norm(noise, r) ** 2
    assert stats.kstest(squared, stats.chi2(2).cdf).pvalue > 1e-3
    # Gaussian noise with precision R
    assert_allclose(np.cov(noise.T), np.linalg.inv(r.entries), atol=0.12)
