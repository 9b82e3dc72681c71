"""
Self-normalized importance sampling with the prior as proposal.

A run draws N prior samples, weights them by the likelihood of the observed
y, and normalizes the weights in log space. Sampling from another proposal
is done by passing a ReparametrizedModel.
"""
import logging
import math
from typing import Tuple

import numpy as np

from models.bayes_models import BayesModel
from models.ensemble import WeightedEnsemble
from models.errors import DegenerateWeights, OffsetEvidence, ValidationError
from models.test_function import TestFunction
from utils.random_stream import RandomStream

logger = logging.getLogger(__name__)


def ensemble_from_log_weights(samples: np.ndarray, log_weights_raw, log_offset: float = 0.0) -> WeightedEnsemble:
    """Normalizes raw log-weights after subtracting their maximum."""
    log_weights_raw = np.array(log_weights_raw, dtype=float).reshape(-1)
    samples = np.array(samples, dtype=float)
    n = log_weights_raw.size
    if n == 0:
        raise ValidationError("cannot build an ensemble from zero samples")
    if samples.shape[0] != n:
        raise ValidationError(f"{samples.shape[0]} samples but {n} log-weights")

    top = float(np.max(log_weights_raw))
    if not math.isfinite(top) or np.any(np.isnan(log_weights_raw)):
        raise DegenerateWeights(top)

    with np.errstate(under="ignore"):
        unnormalized = np.exp(log_weights_raw - top)
    total = float(np.sum(unnormalized))
    weights = unnormalized / total

    ess = 1.0 / float(np.sum(weights * weights))
    ess = min(max(ess, 1.0), float(n))
    rho_hat = n / ess
    log_z_hat = top + math.log(total) - math.log(n)

    for array in (samples, log_weights_raw, weights):
        array.setflags(write=False)
    return WeightedEnsemble(samples, log_weights_raw, weights, log_z_hat, ess, rho_hat, float(log_offset))


def run_is(model: BayesModel, y: np.ndarray, n: int, stream: RandomStream) -> WeightedEnsemble:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValidationError(f"sample size must be a positive integer, got {n}")
    n = int(n)
    samples = model.sample_prior(stream.generator, n)
    log_weights = np.asarray(model.log_likelihood(y, samples), dtype=float).reshape(n)
    ensemble = ensemble_from_log_weights(samples, log_weights, model.log_offset)
    logger.debug("importance run N=%d ess=%.1f log_z_hat=%.6g", n, ensemble.ess, ensemble.log_z_hat)
    return ensemble


def estimate(ensemble: WeightedEnsemble, f: TestFunction) -> float:
    """pi_y^N(f) = sum_i w_i f(x_i)."""
    if f.is_constant:
        return f.c
    value = float(ensemble.weights @ f(ensemble.samples))
    return min(max(value, -f.sup_norm), f.sup_norm)


def evidence_estimate(ensemble: WeightedEnsemble) -> float:
    """Z_N = (1/N) sum_i g_y(x_i); only defined for un-offset likelihoods."""
    if ensemble.log_offset != 0.0:
        raise OffsetEvidence(ensemble.log_offset)
    return math.exp(ensemble.log_z_hat)


def unnormalized_estimate(ensemble: WeightedEnsemble, f: TestFunction) -> float:
    """(1/N) sum_i f(x_i) g_y(x_i), an unbiased estimate of pi_0(f g_y)."""
    return evidence_estimate(ensemble) * float(ensemble.weights @ f(ensemble.samples))


def weight_diagnostics(ensemble: WeightedEnsemble) -> Tuple[float, float]:
    """(ess, rho_hat) with ess = 1 / sum w_i^2 and rho_hat = N sum w_i^2."""
    return ensemble.ess, ensemble.rho_hat
