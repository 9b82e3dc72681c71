import logging
import time
from typing import Optional

from core.diagnostics import k2_mc_estimate, model_bound
from core.model_factory import build_model, model_dims
from models.experiment_result import BoundCheckRow, ExperimentResult
from models.run_config import RunConfig
from utils.random_stream import K2_DOMAIN, RandomStream

logger = logging.getLogger(__name__)

# a Monte Carlo K_2 more than this many s.e. above its bound is a violation
VIOLATION_N_SE = 3.0


class BoundCheck:
    """Pairs a Monte Carlo K_2 estimate with the analytic bound at each grid point."""

    def __init__(self, config: RunConfig, workers: Optional[int] = 1):
        self.config = config
        self.workers = workers

    def _axis_values(self):
        experiment = self.config.experiment
        if experiment.axis == "N":
            # K_2 does not depend on N: one row for the configured model
            return [self.config.model["dx"]]
        return list(experiment.grid)

    def run(self) -> ExperimentResult:
        experiment = self.config.experiment
        axis = "d_x" if experiment.axis == "N" else experiment.axis
        result = ExperimentResult(kind="bound_vs_mc", axis=axis, p=experiment.p, rows=[])

        for value in self._axis_values():
            start = time.perf_counter()
            d_x, d_y = model_dims(self.config.model, axis, value)
            model = build_model(self.config.model, d_x, d_y)
            bound = model_bound(model, experiment.bound_mode)
            stream = RandomStream(experiment.seed, (K2_DOMAIN, value))
            mc = k2_mc_estimate(model, stream, experiment.k2_n_obs, experiment.k2_n_inner, self.workers)
            violation = not bound.dominates(mc.k2_estimate_or_closed_form, mc.standard_error, VIOLATION_N_SE)
            if violation:
                message = (f"{axis}={value}: K_2 estimate {mc.k2_estimate_or_closed_form:.6g} "
                           f"+/- {mc.standard_error:.3g} exceeds {bound.method} bound {bound.k2_upper_bound:.6g}")
                logger.warning(message)
                result.violations.append(message)
            wall_ms = int(round(1000.0 * (time.perf_counter() - start)))
            logger.info("%s=%d k2_mc=%.6g +/- %.3g bound=%.6g (%d ms)", axis, value,
                        mc.k2_estimate_or_closed_form, mc.standard_error, bound.k2_upper_bound, wall_ms)
            result.rows.append(BoundCheckRow(
                axis_value=value,
                k2_mc=mc.k2_estimate_or_closed_form,
                k2_mc_se=mc.standard_error,
                bound_k2=bound.k2_upper_bound,
                method=bound.method,
                violation=violation,
                wall_ms=wall_ms,
            ))
        return result


def bound_vs_mc(config: RunConfig, workers: Optional[int] = 1) -> ExperimentResult:
    return BoundCheck(config, workers).run()
