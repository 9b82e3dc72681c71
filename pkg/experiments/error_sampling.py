"""
Error measurement shared by the convergence and dimension experiments.

For one concrete model the work splits into two task sets:

1. one reference task per observation index: draw y from the model and
   compute pi_y(f) exactly (conjugate models) or with the oracle;
2. one replicate task per observation: n_reps independent importance runs
   at sample size N, each scored as |pi_y(f) - pi_y^N(f)|^p.

Every task derives its random stream from its own coordinates, so results
do not depend on the worker count or on scheduling.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from core.importance_sampler import estimate, run_is
from core.reference import exact_expectation, oracle_estimate
from models.bayes_models import BayesModel
from models.errors import DegenerateWeights
from models.run_config import ExperimentConfig
from utils.parallel import run_tasks
from utils.random_stream import ORACLE_DOMAIN, REP_DOMAIN, Y_DOMAIN, RandomStream
from utils.statistics import power_mean_jackknife

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObservationReference:
    y_index: int
    y: np.ndarray
    value: float
    oracle_se: float


@dataclass(frozen=True)
class ErrorMeasurement:
    error_p: float
    error_se: float
    mean_ess: float
    mean_rho_hat: float
    oracle_se: float


def _reference_task(task) -> ObservationReference:
    model, model_key, y_index, config, n_ref = task
    _, y = model.sample_joint(RandomStream(config.seed, (Y_DOMAIN, model_key, y_index)))
    exact = exact_expectation(model, y, config.f)
    if exact is not None:
        return ObservationReference(y_index, y, exact, 0.0)
    stream = RandomStream(config.seed, (ORACLE_DOMAIN, model_key, y_index))
    try:
        value, se = oracle_estimate(model, y, config.f, n_ref, config.oracle.n_reps, stream)
    except DegenerateWeights as e:
        raise e.with_context(stage="oracle", y_index=y_index) from e
    return ObservationReference(y_index, y, value, se)


def observation_references(model: BayesModel, model_key: int, config: ExperimentConfig, n_ref: int,
                           workers: Optional[int] = 1) -> List[ObservationReference]:
    tasks = [(model, model_key, i, config, n_ref) for i in range(config.n_obs)]
    return run_tasks(_reference_task, tasks, workers)


def _replicate_task(task):
    model, reference, n, axis_value, config = task
    moments, ess, rho = [], [], []
    for rep in range(config.n_reps):
        stream = RandomStream(config.seed, (REP_DOMAIN, axis_value, reference.y_index, rep))
        try:
            ensemble = run_is(model, reference.y, n, stream)
        except DegenerateWeights as e:
            raise e.with_context(n=n, y_index=reference.y_index, replicate=rep) from e
        moments.append(abs(reference.value - estimate(ensemble, config.f)) ** config.p)
        ess.append(ensemble.ess)
        rho.append(ensemble.rho_hat)
    return float(np.mean(moments)), float(np.mean(ess)), float(np.mean(rho))


def measure_error(model: BayesModel, references: List[ObservationReference], n: int, axis_value: int,
                  config: ExperimentConfig, workers: Optional[int] = 1) -> ErrorMeasurement:
    """L^p error over observations and replicates, with jackknife s.e. over observations."""
    tasks = [(model, reference, n, axis_value, config) for reference in references]
    per_observation = run_tasks(_replicate_task, tasks, workers)
    moments = [m for m, _, _ in per_observation]
    error_p, error_se = power_mean_jackknife(moments, config.p)
    oracle_se = math.sqrt(float(np.mean([r.oracle_se ** 2 for r in references])))
    return ErrorMeasurement(
        error_p=error_p,
        error_se=error_se,
        mean_ess=float(np.mean([e for _, e, _ in per_observation])),
        mean_rho_hat=float(np.mean([r for _, _, r in per_observation])),
        oracle_se=oracle_se,
    )
