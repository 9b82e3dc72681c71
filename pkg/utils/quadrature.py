"""Adaptive quadrature helpers that work on log-integrands."""
import logging
from typing import Callable, Tuple

import numpy as np
from scipy import integrate

from models.errors import QuadratureNonConvergent

logger = logging.getLogger(__name__)

EPSREL = 1e-10
SUBDIVISION_LIMIT = 400
# quad flags round-off at tight tolerances; accept the value if its error estimate is still this small.
ACCEPT_RTOL = 1e-7
PROBES = 513


def checked_quad(fn: Callable[[float], float], lo: float, hi: float, what: str,
                 epsrel: float = EPSREL) -> Tuple[float, float]:
    """scipy quad with full_output; raises QuadratureNonConvergent on an unusable result."""
    result = integrate.quad(fn, lo, hi, epsabs=0.0, epsrel=epsrel, limit=SUBDIVISION_LIMIT, full_output=1)
    value, abserr = float(result[0]), float(result[1])
    if not np.isfinite(value) or not np.isfinite(abserr):
        raise QuadratureNonConvergent(what, abserr, value)
    if len(result) > 3 and abserr > ACCEPT_RTOL * abs(value):
        logger.debug("quad warning for %s: %s", what, result[3])
        raise QuadratureNonConvergent(what, abserr, value)
    return value, abserr


def _probe_grid(lo: float, hi: float) -> np.ndarray:
    """Probe points including the finite endpoints, where monotone integrands peak."""
    if np.isinf(hi):
        scale = max(1.0, abs(lo))
        return np.concatenate(([lo], lo + scale * np.geomspace(1e-12, 1e4, PROBES)))
    return np.linspace(lo, hi, PROBES)


def log_quad(log_fn: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, what: str,
             epsrel: float = EPSREL) -> float:
    """
    log of int_lo^hi exp(log_fn(x)) dx.

    The integrand is shifted by its maximum over a probe grid before
    exponentiation, so the integral may lie far outside the float range.
    log_fn must accept numpy arrays and scalars.
    """
    if hi <= lo:
        return -np.inf
    with np.errstate(all="ignore"):
        probe = np.asarray(log_fn(_probe_grid(lo, hi)), dtype=float)
    finite = probe[np.isfinite(probe)]
    if finite.size == 0:
        return -np.inf
    shift = float(finite.max())

    def integrand(x: float) -> float:
        with np.errstate(all="ignore"):
            v = float(np.exp(log_fn(x) - shift))
        if v == np.inf:
            # the probe grid missed a maximum far above every probe point
            raise QuadratureNonConvergent(what, np.inf, x)
        return v if np.isfinite(v) else 0.0

    value, _ = checked_quad(integrand, lo, hi, what, epsrel)
    if value <= 0.0:
        return -np.inf
    return shift + float(np.log(value))


def log_quad_inverse_tail(log_fn: Callable[[np.ndarray], np.ndarray], start: float, what: str,
                          epsrel: float = EPSREL) -> float:
    """log of int_start^inf exp(log_fn(r)) dr through r = start / t, t in (0, 1]."""
    if not start > 0.0:
        raise ValueError(f"inverse tail substitution needs start > 0, got {start}")
    log_start = float(np.log(start))

    def log_g(t):
        t = np.asarray(t, dtype=float)
        return log_fn(start / t) + log_start - 2.0 * np.log(t)

    return log_quad(log_g, 0.0, 1.0, what, epsrel)

