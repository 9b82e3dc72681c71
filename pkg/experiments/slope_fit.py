import math
from typing import Iterable, Tuple

import numpy as np
from scipy.stats import linregress

from models.errors import DegenerateFit, ValidationError


def fit_loglog_slope(points: Iterable[Tuple[float, float]]) -> Tuple[float, float, float]:
    """
    Least squares line through (log2 x, log2 y).

    Returns (slope, intercept, r2); r2 is reported as 1 for a perfect fit of
    flat data, where the correlation coefficient is undefined.
    """
    points = [(float(x), float(y)) for x, y in points]
    if len(points) < 3:
        raise ValidationError(f"slope fit needs at least 3 points, got {len(points)}")
    if any(not (x > 0 and y > 0) for x, y in points):
        raise ValidationError("slope fit needs strictly positive coordinates")
    log_x = np.log2([x for x, _ in points])
    log_y = np.log2([y for _, y in points])
    if np.ptp(log_x) == 0.0:
        raise DegenerateFit("all x values are equal")
    fit = linregress(log_x, log_y)
    residual = log_y - (fit.intercept + fit.slope * log_x)
    if np.ptp(log_y) == 0.0 or np.allclose(residual, 0.0, atol=1e-12):
        r2 = 1.0
    else:
        r2 = float(fit.rvalue) ** 2
    return float(fit.slope), float(fit.intercept), min(max(r2, 0.0), 1.0)


def log_slope(x_values, log_values) -> float:
    """Slope of log y against log x when only log y is available (values beyond float range)."""
    log_x = np.log(np.asarray(x_values, dtype=float))
    if np.ptp(log_x) == 0.0:
        raise DegenerateFit("all x values are equal")
    return float(linregress(log_x, np.asarray(log_values, dtype=float)).slope)


def corrected_error(error_p: float, oracle_se: float) -> float:
    """Removes oracle noise in quadrature."""
    return math.sqrt(max(error_p * error_p - oracle_se * oracle_se, 0.0))
