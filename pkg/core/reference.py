"""Reference values of posterior expectations: conjugate closed forms and a brute-force oracle."""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.stats import norm

from core.importance_sampler import estimate, run_is
from models.bayes_models import BayesModel, LinearGaussianModel
from models.errors import DimensionMismatch, NumericalFailure, ValidationError
from models.run_config import MIN_ORACLE_REPS, MIN_ORACLE_SAMPLES
from models.test_function import TestFunction
from utils.linalg import SpdMatrix, spd_factor
from utils.parallel import run_tasks
from utils.random_stream import RandomStream
from utils.statistics import standard_error

logger = logging.getLogger(__name__)

HERMITE_ORDER = 64
_HERMITE_NODES, _HERMITE_WEIGHTS = hermgauss(HERMITE_ORDER)
COVARIANCE_SLACK = 1e-10


@dataclass(frozen=True)
class GaussianPosterior:
    mean: np.ndarray
    cov: SpdMatrix

    def marginal(self, coord: int) -> Tuple[float, float]:
        """(mean, standard deviation) of one coordinate."""
        return float(self.mean[coord]), math.sqrt(float(self.cov.entries[coord, coord]))

    def has_exact(self, f: TestFunction) -> bool:
        return f.kind in ("constant", "indicator", "tanh")

    def expectation(self, f: TestFunction) -> float:
        """pi_y(f) exactly; clipped_norm has no closed form and is rejected."""
        f.check_dimension(self.mean.size)
        if f.kind == "constant":
            return f.c
        if f.kind == "indicator":
            m, s = self.marginal(f.coord)
            return float(norm.cdf((f.threshold - m) / s))
        if f.kind == "tanh":
            m, s = self.marginal(f.coord)
            values = np.tanh(m + math.sqrt(2.0) * s * _HERMITE_NODES)
            return float(_HERMITE_WEIGHTS @ values / math.sqrt(math.pi))
        raise ValidationError(f"no closed-form posterior expectation for test function '{f.kind}'")


def lg_posterior(model: LinearGaussianModel, y) -> GaussianPosterior:
    """Conjugate update with gain K = sigma_x A^T sigma_y^-1."""
    y = np.asarray(y, dtype=float)
    if y.shape != (model.d_y,):
        raise DimensionMismatch("observation", model.d_y, y.shape)
    sigma_x = model.sigma_x.entries
    gain = model.sigma_y.solve(model.a @ sigma_x).T
    mean = model.mu_x + gain @ (y - model.mu_y)
    cov = sigma_x - gain @ model.a @ sigma_x
    cov = spd_factor(0.5 * (cov + cov.T))

    shrinkage = np.linalg.eigvalsh(sigma_x - cov.entries)
    scale = max(1.0, float(np.max(np.abs(sigma_x))))
    if shrinkage[0] < -COVARIANCE_SLACK * scale:
        raise NumericalFailure(f"posterior covariance exceeds prior covariance (min eigenvalue {shrinkage[0]:.3e})")
    return GaussianPosterior(mean, cov)


def unnormalized_expectation(model: LinearGaussianModel, y, f: TestFunction) -> float:
    """pi_0(f g_y) = pi_0(g_y) * pi_y(f); requires an un-offset likelihood."""
    if model.log_offset != 0.0:
        raise ValidationError("unnormalized expectations need log_offset = 0")
    return math.exp(model.marginal_observation_logpdf(y)) * lg_posterior(model, y).expectation(f)


def exact_expectation(model: BayesModel, y, f: TestFunction) -> Optional[float]:
    """pi_y(f) when a closed form exists, otherwise None."""
    if f.is_constant:
        return f.c
    if isinstance(model, LinearGaussianModel):
        posterior = lg_posterior(model, y)
        if posterior.has_exact(f):
            return posterior.expectation(f)
    return None


def _oracle_task(task) -> float:
    model, y, f, n_ref, stream = task
    return estimate(run_is(model, y, n_ref, stream), f)


def oracle_estimate(model: BayesModel, y, f: TestFunction, n_ref: int, n_reps: int, stream: RandomStream,
                    workers: Optional[int] = 1) -> Tuple[float, float]:
    """
    Mean of n_reps independent importance estimates with n_ref samples each.

    Returns (value, std_error) with std_error = s.d. / sqrt(n_reps).
    """
    if n_ref < MIN_ORACLE_SAMPLES:
        raise ValidationError(f"oracle needs n_ref >= {MIN_ORACLE_SAMPLES}, got {n_ref}")
    if n_reps < MIN_ORACLE_REPS:
        raise ValidationError(f"oracle needs n_reps >= {MIN_ORACLE_REPS}, got {n_reps}")
    if f.is_constant:
        return f.c, 0.0
    tasks = [(model, y, f, n_ref, stream.substream(rep)) for rep in range(n_reps)]
    values = np.asarray(run_tasks(_oracle_task, tasks, workers))
    value, se = float(np.mean(values)), standard_error(values)
    logger.debug("oracle value %.8g +/- %.3g (n_ref=%d, n_reps=%d)", value, se, n_ref, n_reps)
    return value, se
