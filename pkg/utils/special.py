"""
Upper incomplete gamma function.

Series representation below x = s + 1, Lentz continued fraction above it,
both evaluated in log space so that large arguments do not underflow.
"""
import math
import sys

from scipy.special import gammaln

from models.errors import NonpositiveShape, SeriesNonConvergent

ACCURACY = 1e-15
MAX_ITERATIONS = 10_000
_TINY = sys.float_info.min / sys.float_info.epsilon


def log_upper_incomplete_gamma(s: float, x: float) -> float:
    """log Gamma(s, x) for s > 0, x >= 0."""
    if not s > 0.0:
        raise NonpositiveShape(s)
    if x < 0.0:
        raise ValueError(f"incomplete gamma argument must be >= 0, got {x}")

    log_gamma_s = float(gammaln(s))
    if x == 0.0:
        return log_gamma_s
    if x < s + 1.0:
        log_p = _log_lower_regularized_series(s, x, log_gamma_s)
        return log_gamma_s + math.log1p(-math.exp(log_p))
    return _log_upper_continued_fraction(s, x)


def upper_incomplete_gamma(s: float, x: float) -> float:
    """Gamma(s, x) = int_x^inf t^{s-1} e^{-t} dt."""
    return math.exp(log_upper_incomplete_gamma(s, x))


def _log_lower_regularized_series(s: float, x: float, log_gamma_s: float) -> float:
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(MAX_ITERATIONS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * ACCURACY:
            return math.log(total) - x + s * math.log(x) - log_gamma_s
    raise SeriesNonConvergent(f"incomplete gamma series did not converge for s={s}, x={x}")


def _log_upper_continued_fraction(s: float, x: float) -> float:
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITERATIONS + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < ACCURACY:
            return math.log(h) - x + s * math.log(x)
    raise SeriesNonConvergent(f"incomplete gamma continued fraction did not converge for s={s}, x={x}")
