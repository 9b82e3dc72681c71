"""
Error and K_2 bound across a dimension grid.

Each axis value builds one concrete model from the family spec, measures
the L^p error and pairs it with the analytic bound for that model:

- linear-Gaussian along d_x: the exact K_2 and its dimension-free envelope;
- linear-Gaussian along d_y: the R-only uniform constant, which decays in
  d_y once lambda_min(R) clears (1 + delta) / (2^(2/3) pi);
- elliptical: the radial bound in the configured mode.

The sample size is n_samples at every axis value, unless the experiment
sets a tolerance epsilon. Then each d_x gets its own
N = ceil((sqrt(K_2 bound) * ||f||_inf / epsilon)^2), and the metadata
records error_p / epsilon per row; a bound that tracks the error keeps
that ratio flat across d_x.
"""
import logging
import math
import time
from typing import Optional

from core.diagnostics import k2_linear_gaussian, model_bound, published_lg_constants, sample_size_for_tolerance
from core.model_factory import build_model, model_dims
from experiments.error_sampling import measure_error, observation_references
from experiments.slope_fit import log_slope
from models.bayes_models import LinearGaussianModel
from models.bound_report import BoundReport
from models.errors import NumericalFailure, ValidationError
from models.experiment_result import ExperimentResult, ResultRow
from models.run_config import RunConfig

logger = logging.getLogger(__name__)

# relative slack when comparing a closed form against its own envelope
ENVELOPE_RTOL = 1e-12


class DimensionSweep:
    def __init__(self, config: RunConfig, workers: Optional[int] = 1):
        if config.experiment.axis not in ("d_x", "d_y"):
            raise ValidationError(f"dimension sweep needs axis 'd_x' or 'd_y', got '{config.experiment.axis}'")
        self.config = config
        self.workers = workers

    def _bound(self, model, violations) -> BoundReport:
        axis = self.config.experiment.axis
        if isinstance(model, LinearGaussianModel):
            report = k2_linear_gaussian(model) if axis == "d_x" else published_lg_constants(model)
            closed_form = report.k2_estimate_or_closed_form
            if closed_form > 0.0 and math.log(closed_form) > report.log_k2_upper_bound + ENVELOPE_RTOL:
                message = f"{axis}={model.d_x if axis == 'd_x' else model.d_y}: closed form {closed_form:.17g} " \
                          f"exceeds {report.method} bound {report.k2_upper_bound:.17g}"
                logger.warning(message)
                violations.append(message)
            return report
        return model_bound(model, self.config.experiment.bound_mode)

    def _sample_size(self, bound: BoundReport) -> int:
        experiment = self.config.experiment
        if experiment.epsilon is None:
            return experiment.n_samples
        if not math.isfinite(bound.k2_upper_bound):
            raise NumericalFailure(f"cannot size N from an infinite {bound.method} bound at dims {bound.dims}")
        return sample_size_for_tolerance(math.sqrt(bound.k2_upper_bound), experiment.f.sup_norm, experiment.epsilon)

    def run(self) -> ExperimentResult:
        experiment = self.config.experiment
        result = ExperimentResult(kind="dimension_sweep", axis=experiment.axis, p=experiment.p, rows=[])
        log_bounds = []
        sizes = []
        method = None

        for value in experiment.grid:
            start = time.perf_counter()
            d_x, d_y = model_dims(self.config.model, experiment.axis, value)
            model = build_model(self.config.model, d_x, d_y)
            bound = self._bound(model, result.violations)
            method = bound.method
            log_bounds.append(bound.log_k2_upper_bound)
            n = self._sample_size(bound)
            sizes.append(n)
            references = observation_references(model, value, experiment, experiment.oracle.resolve_n_ref(n),
                                                self.workers)
            measurement = measure_error(model, references, n, value, experiment, self.workers)
            wall_ms = int(round(1000.0 * (time.perf_counter() - start)))
            logger.info("%s=%d N=%d error_p=%.6g +/- %.3g bound_k2=%.6g (%d ms)", experiment.axis, value, n,
                        measurement.error_p, measurement.error_se, bound.k2_upper_bound, wall_ms)
            result.rows.append(ResultRow(
                axis_value=value,
                error_p=measurement.error_p,
                error_se=measurement.error_se,
                mean_ess=measurement.mean_ess,
                mean_rho_hat=measurement.mean_rho_hat,
                bound_k2=bound.k2_upper_bound,
                oracle_se=measurement.oracle_se,
                wall_ms=wall_ms,
            ))

        result.metadata.update({"bound_method": method, "log_bound_k2": log_bounds})
        result.metadata["n_samples"] = sizes if experiment.epsilon is not None else experiment.n_samples
        result.metadata["bound_strictly_decreasing"] = all(b < a for a, b in zip(log_bounds, log_bounds[1:]))
        if len(experiment.grid) >= 2:
            result.metadata["bound_slope"] = log_slope(experiment.grid, log_bounds)
        errors = [row.error_p for row in result.rows]
        if min(errors) > 0.0:
            result.metadata["error_ratio"] = max(errors) / min(errors)
        if experiment.epsilon is not None:
            ratios = [error / experiment.epsilon for error in errors]
            result.metadata.update({"epsilon": experiment.epsilon, "tolerance_ratio": ratios})
            if min(ratios) > 0.0:
                result.metadata["tolerance_ratio_spread"] = max(ratios) / min(ratios)
        return result


def dimension_sweep(config: RunConfig, workers: Optional[int] = 1) -> ExperimentResult:
    return DimensionSweep(config, workers).run()
