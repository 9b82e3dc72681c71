"""
Built-in checks run by `cli.py selftest`.

Each check is a small function that raises AssertionError (through
numpy.testing) when a forced value or an invariant does not hold. The suite
covers the closed-form corner cases of the numerical kernel, the model and
sampler contracts, the bound diagnostics and the worker-count independence
of parallel runs.
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from scipy.special import gamma

from core.diagnostics import (
    k2_linear_gaussian,
    k2_mc_estimate,
    product_bound,
    published_lg_constants,
    radial_bound,
    sample_size_for_tolerance,
)
from core.importance_sampler import ensemble_from_log_weights, estimate, run_is
from core.reference import lg_posterior
from experiments.slope_fit import fit_loglog_slope
from models.bayes_models import EllipticalModel, GaussianPrior, LinearGaussianModel, reparametrize
from models.observation_map import SaturatingObservationMap, observation_bound
from models.radial_profile import RadialProfile, profile_normalization
from models.test_function import TestFunction
from utils.linalg import eigen_extremes, gaussian_log_pdf, mahalanobis_norm, spd_factor, sphere_surface_area
from utils.random_stream import SELFTEST_DOMAIN, RandomStream
from utils.special import upper_incomplete_gamma

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    wall_ms: int = 0


def _stream(*path: int) -> RandomStream:
    return RandomStream(0, (SELFTEST_DOMAIN,) + path)


def _lg(d_x: int = 1, d_y: int = 1, a=None, r: float = 1.0, log_offset: float = 0.0) -> LinearGaussianModel:
    a = np.zeros((d_y, d_x)) if a is None else a
    return LinearGaussianModel(np.zeros(d_x), spd_factor(np.eye(d_x)), a, spd_factor(r * np.eye(d_y)), log_offset)


def _elliptical(profile: RadialProfile, d_x: int = 1, d_y: int = 1, coeffs=None) -> EllipticalModel:
    coeffs = np.zeros((d_y, d_x)) if coeffs is None else coeffs
    return EllipticalModel(
        GaussianPrior(np.zeros(d_x), spd_factor(np.eye(d_x))),
        SaturatingObservationMap(coeffs),
        profile,
        spd_factor(np.eye(d_y)),
    )


def check_cholesky():
    identity = spd_factor(np.eye(3))
    assert_array_equal(identity.factor, np.eye(3))
    assert identity.log_det == 0.0
    diagonal = spd_factor(np.diag([4.0, 9.0]))
    assert_allclose(diagonal.factor, np.diag([2.0, 3.0]), rtol=1e-15)
    assert_allclose(diagonal.log_det, math.log(36.0), rtol=1e-14)


def check_gaussian_log_pdf():
    assert_allclose(gaussian_log_pdf(np.array([0.7]), np.array([0.7]), spd_factor([[2.5]])),
                    -0.5 * math.log(2.0 * math.pi * 2.5), rtol=1e-14)
    assert_allclose(gaussian_log_pdf(np.zeros(2), np.zeros(2), spd_factor(np.eye(2))), -LOG_2PI, rtol=1e-14)


def check_incomplete_gamma():
    for x in (0.0, 0.3, 2.0, 25.0):
        assert_allclose(upper_incomplete_gamma(1.0, x), math.exp(-x), rtol=1e-12)
    for s in (0.5, 2.0, 7.5):
        assert_allclose(upper_incomplete_gamma(s, 0.0), gamma(s), rtol=1e-12)


def check_geometry():
    assert_allclose(sphere_surface_area(2, spd_factor(np.eye(2))), 2.0 * math.pi, rtol=1e-14)
    assert_allclose(sphere_surface_area(3, spd_factor(np.eye(3))), 4.0 * math.pi, rtol=1e-14)
    identity = spd_factor(np.eye(2))
    assert mahalanobis_norm(np.zeros(2), identity) == 0.0
    assert_allclose(mahalanobis_norm(np.array([3.0, 4.0]), identity), 5.0, rtol=1e-15)
    assert_allclose(eigen_extremes(identity), (1.0, 1.0), rtol=1e-14)
    assert_allclose(eigen_extremes(spd_factor(np.diag([1.0, 9.0]))), (9.0, 1.0), rtol=1e-14)


def check_likelihood_modes():
    lg = _lg(a=np.ones((1, 1)))
    assert_allclose(lg.log_likelihood(np.zeros(1), np.zeros(1)), -0.5 * LOG_2PI, rtol=1e-14)
    cauchy = _elliptical(RadialProfile.cauchy(1))
    assert_allclose(cauchy.log_likelihood(np.zeros(1), np.zeros(1)), -math.log(math.pi), rtol=1e-9)
    assert_allclose(profile_normalization(RadialProfile.cauchy(1), 1, spd_factor([[1.0]])), 1.0 / math.pi, rtol=1e-9)
    assert observation_bound(SaturatingObservationMap(np.zeros((2, 3))), spd_factor(np.eye(2))) == (0.0, 0.0)


def check_rotational_symmetry():
    model = _elliptical(RadialProfile.gaussian(), d_x=2, d_y=2, coeffs=0.5 * np.eye(2))
    x = np.array([0.3, -0.2])
    h = model.obs_map(x)
    angle = 0.7
    offset = np.array([1.2, 0.0])
    rotated = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]]) @ offset
    assert_allclose(model.log_likelihood(h + offset, x), model.log_likelihood(h + rotated, x), rtol=1e-12)


def check_marginal_observation():
    model = _lg(d_x=2, d_y=2, r=1.7)
    y = np.array([0.4, -1.1])
    assert_allclose(model.marginal_observation_logpdf(y), gaussian_log_pdf(y, np.zeros(2), model.r), rtol=1e-14)


def check_weight_normalization():
    single = run_is(_lg(a=np.ones((1, 1))), np.array([0.5]), 1, _stream(1))
    assert single.weights[0] == 1.0 and single.ess == 1.0
    flat = run_is(_lg(d_x=3), np.array([2.0]), 256, _stream(2))
    assert_allclose(flat.weights, np.full(256, 1.0 / 256), rtol=1e-14)
    assert_allclose((flat.ess, flat.rho_hat), (256.0, 1.0), rtol=1e-12)
    model = _lg(d_x=2, d_y=1, a=np.array([[1.0, -0.5]]))
    ensemble = run_is(model, np.array([0.8]), 500, _stream(3))
    assert_allclose(ensemble.weights.sum(), 1.0, rtol=1e-12)


def check_weight_arithmetic():
    ensemble = ensemble_from_log_weights(np.array([[0.0], [1.0]]), np.log([1.0, 3.0]))
    assert_allclose(estimate(ensemble, TestFunction.tanh_coord(0)), 0.75 * math.tanh(1.0), rtol=1e-14)
    assert_allclose(float(ensemble.weights @ ensemble.samples[:, 0]), 0.75, rtol=1e-14)
    assert estimate(ensemble, TestFunction.constant(0.3)) == 0.3


def check_ess_identities():
    generator = _stream(4).generator
    for _ in range(1000):
        n = int(generator.integers(1, 50))
        ensemble = ensemble_from_log_weights(np.zeros((n, 1)), 5.0 * generator.standard_normal(n))
        assert ensemble.rho_hat >= 1.0 - 1e-12
        assert_allclose(ensemble.ess * ensemble.rho_hat, n, rtol=1e-12)
    degenerate = ensemble_from_log_weights(np.zeros((4, 1)), [0.0, -np.inf, -np.inf, -np.inf])
    assert (degenerate.ess, degenerate.rho_hat) == (1.0, 4.0)


def check_offset_invariance():
    y = np.array([0.3])
    base = run_is(_lg(d_x=2, a=np.array([[1.0, 2.0]])), y, 400, _stream(5))
    for offset in (-700.0, 12.5, 900.0):
        shifted = run_is(_lg(d_x=2, a=np.array([[1.0, 2.0]]), log_offset=offset), y, 400, _stream(5))
        assert_allclose(shifted.weights, base.weights, rtol=1e-12, atol=1e-300)


def check_identity_reparametrization():
    model = _lg(d_x=2, d_y=1, a=np.array([[0.5, 1.5]]))
    wrapped = reparametrize(model, model.prior)
    y = np.array([1.0])
    base = run_is(model, y, 300, _stream(6))
    same = run_is(wrapped, y, 300, _stream(6))
    assert_array_equal(same.weights, base.weights)


def check_radial_bounds():
    for profile in (RadialProfile.gaussian(), RadialProfile.laplace(), RadialProfile.student_t(3.0, 2)):
        report = radial_bound(profile, 2, spd_factor(np.eye(2)), 0.0, "quadrature")
        assert_allclose(report.k2_upper_bound, 1.0, rtol=1e-8)


def check_lg_constants():
    model = _lg(d_x=3, d_y=1)
    exact = k2_linear_gaussian(model)
    assert exact.k2_estimate_or_closed_form == 1.0 and exact.k2_upper_bound == 1.0
    published = published_lg_constants(model)
    assert_allclose(published.k2_estimate_or_closed_form, 0.0898, rtol=1e-3)
    assert_allclose(published.k2_estimate_or_closed_form, published.k2_upper_bound, rtol=1e-12)
    assert product_bound(2.0, 3.0).k2_upper_bound == 6.0
    assert sample_size_for_tolerance(1.0, 1.0, 1.0) == 1


def check_conjugate_posterior():
    posterior = lg_posterior(_lg(a=np.ones((1, 1))), np.array([2.0]))
    assert_allclose(posterior.mean, [1.0], rtol=1e-14)
    assert_allclose(posterior.cov.entries, [[0.5]], rtol=1e-14)


def check_slope_fit():
    slope, _, r2 = fit_loglog_slope([(1.0, 1.0), (4.0, 0.5), (16.0, 0.25)])
    assert_allclose((slope, r2), (-0.5, 1.0), atol=1e-12)
    slope, _, _ = fit_loglog_slope([(2.0, 0.5), (4.0, 0.25), (8.0, 0.125)])
    assert_allclose(slope, -1.0, atol=1e-12)


def check_worker_independence():
    model = _elliptical(RadialProfile.student_t(4.0, 1), d_x=3, coeffs=np.array([[1.0, -0.5, 0.25]]))
    serial = k2_mc_estimate(model, _stream(7), 8, 200, workers=1)
    parallel = k2_mc_estimate(model, _stream(7), 8, 200, workers=2)
    assert serial.k2_estimate_or_closed_form == parallel.k2_estimate_or_closed_form
    assert serial.standard_error == parallel.standard_error


CHECKS: List[Tuple[str, Callable[[], None]]] = [
    ("cholesky", check_cholesky),
    ("gaussian_log_pdf", check_gaussian_log_pdf),
    ("incomplete_gamma", check_incomplete_gamma),
    ("geometry", check_geometry),
    ("likelihood_modes", check_likelihood_modes),
    ("rotational_symmetry", check_rotational_symmetry),
    ("marginal_observation", check_marginal_observation),
    ("weight_normalization", check_weight_normalization),
    ("weight_arithmetic", check_weight_arithmetic),
    ("ess_identities", check_ess_identities),
    ("offset_invariance", check_offset_invariance),
    ("identity_reparametrization", check_identity_reparametrization),
    ("radial_bounds", check_radial_bounds),
    ("lg_constants", check_lg_constants),
    ("conjugate_posterior", check_conjugate_posterior),
    ("slope_fit", check_slope_fit),
    ("worker_independence", check_worker_independence),
]


def run_selftest() -> List[CheckResult]:
    results = []
    for name, check in CHECKS:
        start = time.perf_counter()
        try:
            check()
            result = CheckResult(name, True)
        except Exception as e:
            logger.error("self-test check %s failed: %s", name, e)
            result = CheckResult(name, False, f"{type(e).__name__}: {e}".strip())
        result.wall_ms = int(round(1000.0 * (time.perf_counter() - start)))
        results.append(result)
    return results
