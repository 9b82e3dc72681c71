import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from conftest import make_lg
from core.importance_sampler import (
    ensemble_from_log_weights,
    estimate,
    evidence_estimate,
    run_is,
    unnormalized_estimate,
    weight_diagnostics,
)
from core.reference import lg_posterior, unnormalized_expectation
from models.bayes_models import GaussianPrior, reparametrize
from models.errors import DegenerateWeights, OffsetEvidence, ValidationError
from models.test_function import TestFunction
from utils.linalg import spd_factor
from utils.random_stream import RandomStream


def test_single_sample_has_unit_weight(lg_model, stream):
    ensemble = run_is(lg_model, np.array([0.3]), 1, stream)
    assert ensemble.weights[0] == 1.0
    assert ensemble.ess == 1.0


def test_flat_likelihood_gives_uniform_weights(lg_null_model, stream):
    ensemble = run_is(lg_null_model, np.array([5.0]), 128, stream)
    assert_allclose(ensemble.weights, np.full(128, 1 / 128), rtol=1e-14)
    assert_allclose(weight_diagnostics(ensemble), (128.0, 1.0), rtol=1e-12)


def test_weights_sum_to_one(lg_model, stream):
    ensemble = run_is(lg_model, np.array([2.5]), 1000, stream)
    assert_allclose(ensemble.weights.sum(), 1.0, rtol=1e-12)
    assert np.all(ensemble.weights >= 0.0)
    assert_allclose(ensemble.ess * ensemble.rho_hat, 1000, rtol=1e-12)


def test_runs_are_reproducible(lg_model):
    a = run_is(lg_model, np.array([1.0]), 200, RandomStream(4, (1,)))
    b = run_is(lg_model, np.array([1.0]), 200, RandomStream(4, (1,)))
    assert_array_equal(a.samples, b.samples)
    assert_array_equal(a.weights, b.weights)


def test_ensemble_is_read_only(lg_model, stream):
    ensemble = run_is(lg_model, np.array([1.0]), 10, stream)
    with pytest.raises(ValueError):
        ensemble.weights[0] = 0.5


@pytest.mark.parametrize("offset", [-745.0, -30.0, 50.0, 1000.0])
def test_log_offset_leaves_weights_unchanged(offset):
    y = np.array([0.7])
    base = run_is(make_lg(d_x=2, a=[[1.0, 2.0]]), y, 500, RandomStream(3))
    shifted = run_is(make_lg(d_x=2, a=[[1.0, 2.0]], log_offset=offset), y, 500, RandomStream(3))
    assert_allclose(shifted.weights, base.weights, rtol=1e-12, atol=1e-300)
    assert_allclose(shifted.log_z_hat - base.log_z_hat, offset, rtol=1e-12)


def test_far_out_observation_does_not_underflow():
    # every likelihood value is below the smallest double
    ensemble = run_is(make_lg(d_x=1, a=[[1.0]], r=1e-4), np.array([40.0]), 100, RandomStream(0))
    assert_allclose(ensemble.weights.sum(), 1.0, rtol=1e-12)


def test_degenerate_weights():
    with pytest.raises(DegenerateWeights) as info:
        ensemble_from_log_weights(np.zeros((3, 1)), [-np.inf, -np.inf, -np.inf])
    assert info.value.max_log_weight == -np.inf
    with pytest.raises(DegenerateWeights):
        ensemble_from_log_weights(np.zeros((2, 1)), [0.0, np.nan])


def test_degenerate_context_is_kept():
    error = DegenerateWeights(-np.inf).with_context(n=64, y_index=3, replicate=1)
    assert error.context == {"n": 64, "y_index": 3, "replicate": 1}
    assert "y_index=3" in str(error)


@pytest.mark.parametrize("n", [0, -3, 2.5])
def test_invalid_sample_size(lg_model, stream, n):
    with pytest.raises(ValidationError):
        run_is(lg_model, np.array([0.0]), n, stream)


def test_weighted_average_arithmetic():
    ensemble = ensemble_from_log_weights(np.array([[0.0], [1.0]]), np.log([1.0, 3.0]))
    assert_allclose(ensemble.weights, [0.25, 0.75])
    f = TestFunction.indicator(0, 0.5)
    assert_allclose(estimate(ensemble, f), 0.25)


def test_degenerate_ensemble_diagnostics():
    ensemble = ensemble_from_log_weights(np.zeros((5, 1)), [0.0, -np.inf, -np.inf, -np.inf, -np.inf])
    assert (ensemble.ess, ensemble.rho_hat) == (1.0, 5.0)


def test_rho_hat_at_least_one():
    generator = RandomStream(9).generator
    for _ in range(1000):
        n = int(generator.integers(1, 40))
        ensemble = ensemble_from_log_weights(np.zeros((n, 1)), 4.0 * generator.standard_normal(n))
        assert ensemble.rho_hat >= 1.0 - 1e-12
        assert 1.0 <= ensemble.ess <= n


def test_constant_function_is_exact(lg_model, stream):
    ensemble = run_is(lg_model, np.array([3.0]), 50, stream)
    assert estimate(ensemble, TestFunction.constant(-2.5)) == -2.5


def test_estimate_converges_to_posterior(lg_model):
    y = np.array([0.8])
    f = TestFunction.indicator(0, 0.0)
    exact = lg_posterior(lg_model, y).expectation(f)
    values = [estimate(run_is(lg_model, y, 2000, RandomStream(1, (rep,))), f) for rep in range(40)]
    se = np.std(values, ddof=1) / math.sqrt(len(values))
    assert abs(np.mean(values) - exact) < 5 * se + 1e-3


def test_evidence_estimate_requires_unit_offset():
    ensemble = run_is(make_lg(log_offset=2.0), np.array([0.0]), 10, RandomStream(0))
    with pytest.raises(OffsetEvidence):
        evidence_estimate(ensemble)


def test_flat_likelihood_evidence_is_exact(lg_null_model, stream):
    ensemble = run_is(lg_null_model, np.array([1.0]), 64, stream)
    assert_allclose(evidence_estimate(ensemble), math.exp(lg_null_model.marginal_observation_logpdf([1.0])),
                    rtol=1e-12)


def test_unnormalized_estimate_is_unbiased(lg_model):
    y = np.array([0.5])
    f = TestFunction.tanh_coord(1)
    exact = unnormalized_expectation(lg_model, y, f)
    values = [unnormalized_estimate(run_is(lg_model, y, 500, RandomStream(2, (rep,))), f) for rep in range(200)]
    se = np.std(values, ddof=1) / math.sqrt(len(values))
    assert abs(np.mean(values) - exact) < 5 * se


def test_identity_reparametrization_reproduces_weights(lg_model):
    wrapped = reparametrize(lg_model, lg_model.prior)
    y = np.array([1.2])
    base = run_is(lg_model, y, 300, RandomStream(6))
    same = run_is(wrapped, y, 300, RandomStream(6))
    assert_array_equal(same.samples, base.samples)
    assert_array_equal(same.weights, base.weights)
    assert same.log_z_hat == base.log_z_hat


def test_wider_proposal_targets_same_posterior():
    model = make_lg(d_x=1, a=[[1.0]])
    proposal = GaussianPrior(np.zeros(1), spd_factor([[2.0]]))
    wrapped = reparametrize(model, proposal)
    y = np.array([1.0])
    f = TestFunction.tanh_coord(0)
    direct = run_is(model, y, 100_000, RandomStream(10))
    through = run_is(wrapped, y, 100_000, RandomStream(11))
    exact = lg_posterior(model, y).expectation(f)
    z = math.exp(model.marginal_observation_logpdf(y))
    # relative variance of the evidence estimate is below 1 / N here
    assert abs(evidence_estimate(through) - z) < 4 * z * math.sqrt(2.0 / 100_000)
    assert abs(estimate(through, f) - exact) < 4 * math.sqrt(2.0 / 100_000)
    assert abs(estimate(direct, f) - exact) < 4 * math.sqrt(2.0 / 100_000)
