import logging
import time
from typing import Optional

from core.diagnostics import model_bound
from core.model_factory import build_model
from experiments.error_sampling import measure_error, observation_references
from experiments.slope_fit import corrected_error, fit_loglog_slope
from models.errors import ValidationError
from models.experiment_result import ExperimentResult, ResultRow
from models.run_config import RunConfig

logger = logging.getLogger(__name__)

ORACLE_DOMINATED = "OracleDominated"
# error at the largest N must exceed the oracle noise by this factor
ORACLE_MARGIN = 5.0


class ConvergenceExperiment:
    """L^p error of the self-normalized estimator against the sample size N."""

    def __init__(self, config: RunConfig, workers: Optional[int] = 1):
        if config.experiment.axis != "N":
            raise ValidationError(f"convergence experiment needs axis 'N', got '{config.experiment.axis}'")
        self.config = config
        self.workers = workers

    def run(self) -> ExperimentResult:
        experiment = self.config.experiment
        model = build_model(self.config.model)
        n_ref = experiment.oracle.resolve_n_ref(max(experiment.grid))
        references = observation_references(model, 0, experiment, n_ref, self.workers)
        bound = model_bound(model, experiment.bound_mode)

        rows = []
        for n in experiment.grid:
            start = time.perf_counter()
            measurement = measure_error(model, references, n, n, experiment, self.workers)
            wall_ms = int(round(1000.0 * (time.perf_counter() - start)))
            logger.info("N=%d error_p=%.6g +/- %.3g ess=%.1f (%d ms)",
                        n, measurement.error_p, measurement.error_se, measurement.mean_ess, wall_ms)
            rows.append(ResultRow(
                axis_value=n,
                error_p=measurement.error_p,
                error_se=measurement.error_se,
                mean_ess=measurement.mean_ess,
                mean_rho_hat=measurement.mean_rho_hat,
                bound_k2=bound.k2_upper_bound,
                oracle_se=measurement.oracle_se,
                wall_ms=wall_ms,
            ))

        result = ExperimentResult(kind="convergence", axis="N", p=experiment.p, rows=rows)
        result.metadata["bound_method"] = bound.method
        result.metadata["log_bound_k2"] = bound.log_k2_upper_bound
        result.metadata["n_ref"] = n_ref
        self._fit_rate(result)
        return result

    def _fit_rate(self, result: ExperimentResult) -> None:
        last = result.rows[-1]
        if last.oracle_se > 0.0 and last.error_p < ORACLE_MARGIN * last.oracle_se:
            result.flags.append(ORACLE_DOMINATED)
            logger.warning("error %.3g at N=%d is within %gx of the oracle s.e. %.3g; slope fit skipped",
                           last.error_p, last.axis_value, ORACLE_MARGIN, last.oracle_se)
            return
        points = [(row.axis_value, corrected_error(row.error_p, row.oracle_se)) for row in result.rows]
        if len(points) < 3 or any(error <= 0.0 for _, error in points):
            logger.info("slope fit skipped: needs at least 3 grid points with nonzero error")
            return
        slope, intercept, r2 = fit_loglog_slope(points)
        result.metadata.update({"slope": slope, "intercept": intercept, "r2": r2})
        logger.info("fitted log-log slope %.4f (r2=%.4f)", slope, r2)


def convergence_experiment(config: RunConfig, workers: Optional[int] = 1) -> ExperimentResult:
    return ConvergenceExperiment(config, workers).run()
