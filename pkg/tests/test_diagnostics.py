import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, stats
from scipy.special import logsumexp

from conftest import make_elliptical, make_lg
from core.diagnostics import (
    UNIFORM_LG_CONSTANT,
    dy_regime,
    evidence_lower_bound,
    evidence_relative_variance,
    exponential_bound_peak,
    exponential_split_factor,
    k2_linear_gaussian,
    k2_mc_estimate,
    link_norm_sq_lg,
    log_radial_bound_quadrature,
    model_bound,
    product_bound,
    published_lg_constants,
    radial_bound,
    sample_size_for_tolerance,
)
from core.importance_sampler import evidence_estimate, run_is
from models.bound_report import BoundReport
from models.errors import DimensionMismatch, NonIntegrableProfile, NonpositiveTolerance, ValidationError
from models.radial_profile import RadialProfile
from utils.linalg import spd_factor
from utils.random_stream import RandomStream

PROFILES = [
    RadialProfile.gaussian(),
    RadialProfile.laplace(),
    RadialProfile.gen_gaussian(1.5),
    RadialProfile.student_t(4.0, 2),
    RadialProfile.gen_cauchy(3, 2.0),
]


@pytest.mark.parametrize("y", [0.0, 5.0])
def test_link_norm_without_signal_is_one(y):
    assert_allclose(link_norm_sq_lg(make_lg(d_x=3), np.array([y])), 1.0, rtol=1e-12)


def test_link_norm_matches_quadrature():
    model = make_lg(a=[[0.8]], r=0.6)
    y = 1.3

    def g(x):
        return stats.norm(0.8 * x, math.sqrt(0.6)).pdf(y)

    second, _ = integrate.quad(lambda x: g(x) ** 2 * stats.norm.pdf(x), -np.inf, np.inf)
    first, _ = integrate.quad(lambda x: g(x) * stats.norm.pdf(x), -np.inf, np.inf)
    assert_allclose(link_norm_sq_lg(model, np.array([y])), second / first ** 2, rtol=1e-8)


def test_link_norm_dimension_check():
    with pytest.raises(DimensionMismatch):
        link_norm_sq_lg(make_lg(d_y=2), np.zeros(3))


@pytest.mark.parametrize("d_y", [1, 2, 3])
def test_k2_without_signal_equals_envelope(d_y):
    report = k2_linear_gaussian(make_lg(d_x=5, d_y=d_y, r=0.7))
    assert report.k2_estimate_or_closed_form == 1.0
    assert report.k2_upper_bound == 1.0
    assert report.method == "lg_closed_form"


def test_k2_closed_form_and_envelope():
    a = np.array([[1.0, 0.5, -0.3], [0.2, -0.4, 0.8]])
    model = make_lg(d_x=3, d_y=2, a=a, r=0.5)
    report = k2_linear_gaussian(model)
    signal = a @ a.T / 0.5
    assert_allclose(report.k2_estimate_or_closed_form, np.linalg.det(np.eye(2) + signal), rtol=1e-12)
    assert_allclose(report.k2_upper_bound, (1 + np.trace(signal) / 2) ** 2, rtol=1e-12)
    assert report.k2_estimate_or_closed_form <= report.k2_upper_bound


def test_k2_monte_carlo_matches_closed_form():
    model = make_lg(d_x=2, a=[[0.3, -0.2]])
    mc = k2_mc_estimate(model, RandomStream(1), 20000, 2)
    exact = k2_linear_gaussian(model).k2_estimate_or_closed_form
    assert abs(mc.k2_estimate_or_closed_form - exact) < 4 * mc.standard_error
    assert abs(mc.k2_estimate_or_closed_form / exact - 1) < 0.02
    assert mc.method == "monte_carlo" and mc.k2_upper_bound is None


def test_k2_monte_carlo_without_signal_is_exact():
    mc = k2_mc_estimate(make_lg(d_x=4), RandomStream(2), 50, 2)
    assert_allclose(mc.k2_estimate_or_closed_form, 1.0, rtol=1e-12)


def test_k2_monte_carlo_flat_elliptical():
    model = make_elliptical(RadialProfile.gaussian(), d_x=2)
    mc = k2_mc_estimate(model, RandomStream(3), 20, 100)
    assert_allclose(mc.k2_estimate_or_closed_form, 1.0, rtol=1e-12)


def test_k2_monte_carlo_is_worker_independent(student_model):
    serial = k2_mc_estimate(student_model, RandomStream(4), 6, 300, workers=1)
    parallel = k2_mc_estimate(student_model, RandomStream(4), 6, 300, workers=3)
    assert serial == parallel


def test_k2_monte_carlo_needs_two_draws(lg_model):
    with pytest.raises(ValidationError):
        k2_mc_estimate(lg_model, RandomStream(0), 1, 10)


def test_published_constant_at_zero_signal():
    report = published_lg_constants(make_lg(d_x=2))
    assert_allclose(report.k2_estimate_or_closed_form, 0.08980, rtol=1e-4)
    assert report.method == "lg_uniform"


@pytest.mark.parametrize("d_y", [1, 2, 3])
def test_published_constants_coincide_at_zero_signal(d_y):
    model = make_lg(d_x=4, d_y=d_y, r=1.3)
    report = published_lg_constants(model)
    assert_allclose(report.k2_estimate_or_closed_form, report.k2_upper_bound, rtol=1e-12)


def test_uniform_constant_decays_in_observation_dimension():
    delta = 0.5
    scale = (1 + delta) / UNIFORM_LG_CONSTANT
    values = [published_lg_constants(make_lg(d_y=d, r=scale)).k2_upper_bound for d in range(1, 11)]
    assert all(b < a for a, b in zip(values, values[1:]))
    for d, value in enumerate(values, start=1):
        assert value <= (1 + delta) ** (-1.5 * d) * (1 + 1e-12)


def test_dy_regimes():
    assert dy_regime(spd_factor(1.6 / UNIFORM_LG_CONSTANT * np.eye(2)), 0.5)["regime"] == "vanishing"
    assert dy_regime(spd_factor(1.2 / UNIFORM_LG_CONSTANT * np.eye(2)), 0.5)["regime"] == "bounded"
    assert dy_regime(spd_factor(0.5 / UNIFORM_LG_CONSTANT * np.eye(2)), 0.5)["regime"] == "unresolved"
    with pytest.raises(NonpositiveTolerance):
        dy_regime(spd_factor(np.eye(2)), 0.0)


@pytest.mark.parametrize("profile", PROFILES, ids=lambda p: p.name)
@pytest.mark.parametrize("d_y", [1, 2])
def test_radial_bound_without_signal_is_one(profile, d_y):
    if not profile.is_exponential and profile.alpha * profile.p <= d_y:
        pytest.skip("not integrable")
    report = radial_bound(profile, d_y, spd_factor(np.eye(d_y)), 0.0)
    assert_allclose(report.k2_upper_bound, 1.0, rtol=1e-8)
    assert report.method == "radial_quadrature"


@pytest.mark.parametrize("profile", PROFILES, ids=lambda p: p.name)
@pytest.mark.parametrize("m_r", [0.05, 0.5, 2.0])
def test_quadrature_below_analytic(profile, m_r):
    r = spd_factor(np.eye(2))
    quadrature = radial_bound(profile, 2, r, m_r, "quadrature")
    analytic = radial_bound(profile, 2, r, m_r, "analytic")
    assert quadrature.log_k2_upper_bound <= analytic.log_k2_upper_bound + 1e-9
    assert quadrature.log_k2_upper_bound > 0.0


def test_gaussian_quadrature_bound_closed_form():
    # exponent -r^2 + (r + 2M)^2 / 2 integrates in closed form for d_y = 1
    m = 0.7
    expected = math.exp(4 * m * m) * 2 * stats.norm.cdf(2 * m)
    report = radial_bound(RadialProfile.gaussian(), 1, spd_factor([[1.0]]), m)
    assert_allclose(report.k2_upper_bound, expected, rtol=1e-8)


def _dense_log_radial_bound(beta, m):
    # d_y = 1, a = 1: the exponent (r + 2m)^beta - 2 r^beta rises to one sharp mode and falls after it
    shift = 2.0 * m
    r_peak = shift / (2.0 ** (1.0 / (beta - 1.0)) - 1.0)
    curvature = beta * (beta - 1.0) * ((r_peak + shift) ** (beta - 2.0) - 2.0 * r_peak ** (beta - 2.0))
    width = 1.0 / math.sqrt(-curvature)
    r = np.linspace(max(0.0, r_peak - 40.0 * width), r_peak + 40.0 * width, 400_001)
    logs = (r + shift) ** beta - 2.0 * r ** beta
    return float(logsumexp(logs)) + math.log(r[1] - r[0]) - RadialProfile.gen_gaussian(beta).log_radial_mass(1)


@pytest.mark.parametrize("beta", [2.5, 3.0, 4.0])
@pytest.mark.parametrize("m", [5.0, 10.0, 20.0, 40.0])
def test_sharp_radial_bound_matches_dense_sum(beta, m):
    log_bound = log_radial_bound_quadrature(RadialProfile.gen_gaussian(beta), 1, m)
    assert np.isfinite(log_bound)
    assert_allclose(log_bound, _dense_log_radial_bound(beta, m), rtol=1e-12, atol=1e-6)


def test_sharp_radial_bound_stays_below_analytic():
    profile = RadialProfile.gen_gaussian(4.0)
    quadrature = radial_bound(profile, 1, spd_factor([[1.0]]), 20.0, "quadrature")
    analytic = radial_bound(profile, 1, spd_factor([[1.0]]), 20.0, "analytic")
    assert quadrature.log_k2_upper_bound <= analytic.log_k2_upper_bound


@pytest.mark.parametrize("beta", [1.5, 2.0, 3.0])
def test_exponential_bound_peak_location(beta):
    m = 3.0
    r_peak, width = exponential_bound_peak(RadialProfile.gen_gaussian(beta), 1, m)
    assert_allclose(r_peak, 2 * m / (2 ** (1 / (beta - 1)) - 1), rtol=1e-10)
    assert width > 0.0


def test_exponential_bound_peak_absent():
    assert exponential_bound_peak(RadialProfile.laplace(), 2, 1.0) is None
    assert exponential_bound_peak(RadialProfile.gen_gaussian(3.0), 2, 0.0) is None
    assert exponential_bound_peak(RadialProfile.student_t(3.0, 1), 1, 1.0) is None
    r_peak, _ = exponential_bound_peak(RadialProfile.gaussian(), 3, 1.0)
    # the r^2 volume factor pushes the mode past 2M
    assert r_peak > 2.0


def test_split_factor():
    assert exponential_split_factor(1.0) == 4.0
    assert exponential_split_factor(0.5) == 4.0
    assert_allclose(exponential_split_factor(2.0), 2 / (math.sqrt(1.5) - 1))


def test_polynomial_analytic_bound_growth():
    profile = RadialProfile.gen_cauchy(2, 3.0)
    r = spd_factor([[1.0]])
    dims = [16, 64, 256, 1024]
    logs = [radial_bound(profile, 1, r, 0.1 * d, "analytic").log_k2_upper_bound for d in dims]
    slope = np.polyfit(np.log(dims), logs, 1)[0]
    assert abs(slope - 2 * profile.alpha) < 0.1


def test_huge_bound_is_reported_in_log_space():
    report = radial_bound(RadialProfile.gaussian(), 1, spd_factor([[1.0]]), 30.0, "analytic")
    assert report.k2_upper_bound == math.inf
    assert math.isfinite(report.log_k2_upper_bound)
    assert report.dominates(1e300, 0.0)


def test_radial_bound_input_checks():
    profile = RadialProfile.gaussian()
    with pytest.raises(DimensionMismatch):
        radial_bound(profile, 2, spd_factor(np.eye(3)), 0.1)
    with pytest.raises(ValidationError):
        radial_bound(profile, 1, spd_factor([[1.0]]), -0.1)
    with pytest.raises(ValidationError):
        radial_bound(profile, 1, spd_factor([[1.0]]), 0.1, mode="exact")
    with pytest.raises(NonIntegrableProfile, match="alpha > d_y/p"):
        radial_bound(RadialProfile.pearson7(1.0, 0.5), 1, spd_factor([[1.0]]), 0.1)


@pytest.mark.parametrize("d_x", [1, 3])
def test_radial_bound_dominates_monte_carlo(d_x):
    coeffs = np.full((1, d_x), 0.4)
    for profile in (RadialProfile.gaussian(), RadialProfile.student_t(3.0, 1)):
        model = make_elliptical(profile, d_x=d_x, coeffs=coeffs)
        mc = k2_mc_estimate(model, RandomStream(5, (d_x,)), 200, 500)
        bound = model_bound(model)
        assert bound.dominates(mc.k2_estimate_or_closed_form, mc.standard_error)


def test_model_bound_dispatch(lg_model, student_model):
    assert model_bound(lg_model).method == "lg_closed_form"
    assert model_bound(student_model, "analytic").method == "radial_polynomial_analytic"
    assert model_bound(make_elliptical(RadialProfile.laplace()), "analytic").method == "radial_exponential_analytic"


def test_product_bound():
    assert product_bound(0.0, 4.0).k2_upper_bound == 0.0
    assert product_bound(2.0, 0.0).k2_upper_bound == 0.0
    assert product_bound(2.0, 3.0).k2_upper_bound == 6.0
    with pytest.raises(ValidationError):
        product_bound(-1.0, 2.0)


def test_sample_size_for_tolerance():
    assert sample_size_for_tolerance(1.0, 1.0, 1.0) == 1
    assert sample_size_for_tolerance(1.0, 1.0, 0.1) == 100
    assert sample_size_for_tolerance(3.0, 2.0, 0.5) == 144
    with pytest.raises(NonpositiveTolerance):
        sample_size_for_tolerance(1.0, 1.0, 0.0)


def test_evidence_lower_bound_holds():
    model = make_elliptical(RadialProfile.student_t(3.0, 1), d_x=2, coeffs=[[0.6, -0.4]])
    y = np.array([1.5])
    z = np.mean([evidence_estimate(run_is(model, y, 5000, RandomStream(6, (rep,)))) for rep in range(10)])
    assert evidence_lower_bound(model, y) <= z


def test_evidence_lower_bound_is_tight_without_signal():
    model = make_elliptical(RadialProfile.gaussian())
    y = np.array([0.8])
    assert_allclose(evidence_lower_bound(model, y), math.exp(model.log_likelihood(y, np.zeros(1))), rtol=1e-12)


def test_evidence_relative_variance():
    model = make_lg(d_x=4, a=[[0.5, -0.3, 0.2, 0.4]])
    y = np.array([0.9])
    n = 1000
    predicted = evidence_relative_variance(model, y, n)
    z = math.exp(model.marginal_observation_logpdf(y))
    values = np.array([evidence_estimate(run_is(model, y, n, RandomStream(7, (rep,)))) for rep in range(1000)])
    assert abs(np.var(values / z, ddof=1) / predicted - 1) < 0.2
    assert abs(values.mean() / z - 1) < 4 * math.sqrt(predicted / 1000)


def test_bound_report_json():
    report = BoundReport.from_log_bound(0.5, "radial_quadrature", (3, 2))
    assert '"method": "radial_quadrature"' in report.to_json()
    assert report.to_dict()["dims"] == [3, 2]
    with pytest.raises(ValueError):
        BoundReport(1.0, 1.0, "guess", 0.0, (1, 1))
