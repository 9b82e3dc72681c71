"""
Second moments of the link function l_y = g_y / pi_0(g_y) and bounds on them.

K_2 = E_Y ||l_Y||^2_{L^2(pi_0)} controls the L^2 error of the
self-normalized estimator. Closed forms exist for linear-Gaussian models;
elliptical models are bounded through a one-dimensional radial integral.
All density ratios are formed as differences of log-densities.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from core.importance_sampler import run_is
from models.bayes_models import BayesModel, EllipticalModel, LinearGaussianModel
from models.bound_report import BoundReport
from models.errors import (
    DegenerateWeights,
    DimensionMismatch,
    NonpositiveTolerance,
    QuadratureNonConvergent,
    ValidationError,
)
from models.radial_profile import RadialProfile, log_radial_volume
from utils.linalg import SpdMatrix, eigen_extremes, gaussian_log_pdf, mahalanobis_norm
from utils.parallel import run_tasks
from utils.random_stream import RandomStream
from utils.special import log_upper_incomplete_gamma
from utils.statistics import jackknife

logger = logging.getLogger(__name__)

LOG_4PI = math.log(4.0 * math.pi)
# a = 2^(2/3) pi, the constant in the dimension-free linear-Gaussian bound
UNIFORM_LG_CONSTANT = 2.0 ** (2.0 / 3.0) * math.pi

# offsets, in peak widths, of the breakpoints placed around a sharp radial-bound mode
PEAK_OFFSETS = tuple(2.0 ** k for k in range(7))
PEAK_CHECK_WIDTHS = 8.0
PEAK_CHECK_NODES = 4097
MAX_LOG_GROWTH = 700.0
MAX_BRACKET_DOUBLINGS = 200


def log_link_norm_sq_lg(model: LinearGaussianModel, y) -> float:
    y = np.asarray(y, dtype=float)
    if y.shape != (model.d_y,):
        raise DimensionMismatch("observation", model.d_y, y.shape)
    return (
        -0.5 * model.d_y * LOG_4PI
        - 0.5 * model.r.log_det
        + gaussian_log_pdf(y, model.mu_y, model.s2)
        - 2.0 * gaussian_log_pdf(y, model.mu_y, model.sigma_y)
    )


def link_norm_sq_lg(model: LinearGaussianModel, y) -> float:
    """||l_y||^2 = pi_0(g_y^2) / pi_0(g_y)^2 in closed form."""
    return math.exp(log_link_norm_sq_lg(model, y))


def _exp(log_value: float) -> float:
    return math.exp(log_value) if log_value < 709.0 else math.inf


def _signal_to_noise_trace(model: LinearGaussianModel) -> float:
    signal = model.sigma_y.entries - model.r.entries
    return float(np.trace(model.r.solve(signal)))


def k2_linear_gaussian(model: LinearGaussianModel) -> BoundReport:
    """
    K_2 = |sigma_y| / |R| with the envelope (1 + tr(R^-1 A sigma_x A^T) / d_y)^d_y.

    The envelope follows from the AM-GM inequality on the eigenvalues of
    R^-1 A sigma_x A^T and is attained at A = 0.
    """
    d_y = model.d_y
    log_k2 = model.sigma_y.log_det - model.r.log_det
    trace = max(_signal_to_noise_trace(model), 0.0)
    log_envelope = max(d_y * math.log1p(trace / d_y), log_k2)
    return BoundReport.from_log_bound(log_envelope, "lg_closed_form", (model.d_x, d_y), estimate=_exp(log_k2))


def published_lg_constants(model: LinearGaussianModel) -> BoundReport:
    """
    [2^d (2 pi)^(3d) |R|]^(-1/2) / |S_2| and its R-only majorant [(2^(2/3) pi)^d |R|]^(-3/2).

    These are the textbook expressions. They coincide at A = 0, and the
    majorant decreases in d_y once lambda_min(R) exceeds 1 / (2^(2/3) pi).
    They are not bounds on the exact K_2 reported by k2_linear_gaussian.
    """
    d_y = model.d_y
    log_r = model.r.log_det
    log_k2 = -0.5 * (d_y * math.log(2.0) + 3.0 * d_y * math.log(2.0 * math.pi) + log_r) - model.s2.log_det
    log_uniform = -1.5 * (d_y * math.log(UNIFORM_LG_CONSTANT) + log_r)
    return BoundReport.from_log_bound(log_uniform, "lg_uniform", (model.d_x, d_y), estimate=_exp(log_k2))


def dy_regime(r: SpdMatrix, delta: float) -> dict:
    """
    Which eigenvalue condition on R holds for the constant a = 2^(2/3) pi.

    "vanishing": lambda_min >= (1 + delta) / a, the uniform bound decays with d_y.
    "bounded":   lambda_min >= 1 / a, the uniform bound stays finite.
    "unresolved" otherwise.
    """
    if not delta > 0:
        raise NonpositiveTolerance("delta", delta)
    _, lambda_min = eigen_extremes(r)
    if lambda_min >= (1.0 + delta) / UNIFORM_LG_CONSTANT:
        regime = "vanishing"
    elif lambda_min >= 1.0 / UNIFORM_LG_CONSTANT:
        regime = "bounded"
    else:
        regime = "unresolved"
    return {
        "regime": regime,
        "lambda_min": lambda_min,
        "bounded_threshold": 1.0 / UNIFORM_LG_CONSTANT,
        "vanishing_threshold": (1.0 + delta) / UNIFORM_LG_CONSTANT,
    }


def _link_norm_sq_task(task) -> float:
    model, stream, y_index, n_inner = task
    _, y = model.sample_joint(stream.substream(y_index, 0))
    if isinstance(model, LinearGaussianModel):
        return link_norm_sq_lg(model, y)
    try:
        return run_is(model, y, n_inner, stream.substream(y_index, 1)).rho_hat
    except DegenerateWeights as e:
        raise e.with_context(y_index=y_index, y=np.array2string(y, precision=6)) from e


def k2_mc_estimate(model: BayesModel, stream: RandomStream, n_obs: int, n_inner: int,
                   workers: Optional[int] = 1) -> BoundReport:
    """
    Mean of ||l_y||^2 over n_obs draws y ~ model, with jackknife s.e. over the draws.

    Linear-Gaussian models use the closed-form ||l_y||^2; all others use the
    inner ratio mean(g^2) / mean(g)^2 over n_inner fresh prior draws, which
    is the rho_hat of an importance run.
    """
    if n_obs < 2 or n_inner < 2:
        raise ValidationError(f"k2_mc_estimate needs n_obs >= 2 and n_inner >= 2, got {n_obs}, {n_inner}")
    tasks = [(model, stream, i, n_inner) for i in range(n_obs)]
    values = run_tasks(_link_norm_sq_task, tasks, workers)
    mean, se = jackknife(values)
    logger.debug("k2 Monte Carlo estimate %.6g +/- %.3g over %d observations", mean, se, n_obs)
    return BoundReport(mean, None, "monte_carlo", se, (model.d_x, model.d_y))


def _check_radial_inputs(profile: RadialProfile, d_y: int, r: SpdMatrix, m_r: float) -> None:
    if r.dim != d_y:
        raise DimensionMismatch("radial_bound R", d_y, r.dim)
    if not (m_r >= 0.0 and math.isfinite(m_r)):
        raise ValidationError(f"M_R must be finite and >= 0, got {m_r}")
    profile.check_integrable(d_y)


def exponential_bound_peak(profile: RadialProfile, d_y: int, m_r: float) -> Optional[Tuple[float, float]]:
    """
    Mode and width of the radial bound integrand phi(psi(r))^2 / phi(psi(r + 2 M_R)) r^(d_y-1).

    For exponential profiles with beta > 1 the log-integrand
    a (r + 2M)^beta - 2 a r^beta grows like r^(beta-1) up to a sharp interior
    maximum near 2M / (2^(1/(beta-1)) - 1), with width 1 / sqrt(-f''(r)).
    Returns None when there is no such maximum.
    """
    if not profile.is_exponential or profile.beta <= 1.0 or m_r <= 0.0:
        return None
    a, beta, shift = profile.a, profile.beta, 2.0 * m_r
    growth = math.log(2.0) / (beta - 1.0)
    if growth > MAX_LOG_GROWTH:
        return None

    def slope(r):
        return a * beta * ((r + shift) ** (beta - 1.0) - 2.0 * r ** (beta - 1.0)) + (d_y - 1) / r

    def curvature(r):
        return (a * beta * (beta - 1.0) * ((r + shift) ** (beta - 2.0) - 2.0 * r ** (beta - 2.0))
                - (d_y - 1) / (r * r))

    guess = shift / math.expm1(growth)
    hi = guess
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if slope(hi) < 0.0:
            break
        hi *= 2.0
    else:
        return None
    r_peak = brentq(slope, 0.5 * guess, hi)
    curv = curvature(r_peak)
    if not curv < 0.0:
        return None
    return r_peak, 1.0 / math.sqrt(-curv)


def _check_peak_mass(log_fn, r_peak: float, width: float, log_integral: float, what: str) -> None:
    """Raises when the quadrature total falls below a Riemann sum over the peak window alone."""
    grid = np.linspace(max(0.0, r_peak - PEAK_CHECK_WIDTHS * width), r_peak + PEAK_CHECK_WIDTHS * width,
                       PEAK_CHECK_NODES)
    with np.errstate(divide="ignore"):
        logs = np.asarray(log_fn(grid), dtype=float)
    log_window = float(logsumexp(logs)) + math.log(grid[1] - grid[0])
    if not log_integral >= log_window - math.log(2.0):
        raise QuadratureNonConvergent(what, math.nan, log_integral)


def log_radial_bound_quadrature(profile: RadialProfile, d_y: int, m_r: float) -> float:
    """
    log of S_R C int_0^inf phi(psi(r))^2 / phi(psi(r + 2 M_R)) r^(d_y-1) dr.

    The half line is split at 4 M_R, at the profile's scale radius and, when
    the integrand has a sharp interior maximum, at the mode and at offsets
    of 1, 2, ..., 64 widths on either side, so that the tail integral
    starts past the peak.
    """
    shift = 2.0 * m_r
    what = f"{profile.name} radial bound"

    def log_fn(r):
        return 2.0 * profile.log_phi_psi(r) - profile.log_phi_psi(r + shift) + log_radial_volume(r, d_y)

    breakpoints = [4.0 * m_r, profile.scale_radius(d_y)]
    peak = exponential_bound_peak(profile, d_y, m_r)
    if peak is not None:
        r_peak, width = peak
        breakpoints.append(r_peak)
        breakpoints.extend(r_peak + sign * k * width for k in PEAK_OFFSETS for sign in (-1.0, 1.0))
    log_integral = profile.log_half_line_integral(log_fn, breakpoints, what)
    if peak is not None:
        _check_peak_mass(log_fn, r_peak, width, log_integral, what)
    return log_integral - profile.log_radial_mass(d_y)


def exponential_split_factor(beta: float) -> float:
    """
    c >= 4 such that (1 + 2 / c)^beta <= 3 / 2.

    Beyond r = c M the exponent 2 log phi(psi(r)) - log phi(psi(r + 2M)) stays
    below -(a / 2) r^beta. c = 4 suffices only for beta <= 1.
    """
    return max(4.0, 2.0 / (1.5 ** (1.0 / beta) - 1.0))


def log_radial_bound_analytic(profile: RadialProfile, d_y: int, m_r: float) -> float:
    if not profile.is_exponential:
        # (r + 2M)^p <= 2^(p-1) (r^p + (2M)^p)
        return (profile.p - 1) * profile.alpha * math.log(2.0) + profile.alpha * math.log1p(
            profile.a * (2.0 * m_r) ** profile.p
        )

    a, beta = profile.a, profile.beta
    b = a / 2.0
    split = exponential_split_factor(beta) * m_r
    terms = []
    if m_r > 0.0:
        terms.append(a * (split + 2.0 * m_r) ** beta + d_y * math.log(split) - math.log(d_y))
    shape = d_y / beta
    terms.append(
        log_upper_incomplete_gamma(shape, b * split ** beta) - math.log(beta) - shape * math.log(b)
    )
    return float(logsumexp(terms)) - profile.log_radial_mass(d_y)


def radial_bound(profile: RadialProfile, d_y: int, r: SpdMatrix, m_r: float, mode: str = "quadrature",
                 d_x: int = 0) -> BoundReport:
    """
    Upper bound on K_2 for an elliptical likelihood with ||h(x)||_R <= M_R.

    mode="quadrature" integrates the radial bound numerically, mode="analytic"
    returns the closed-form majorant (exponential or polynomial family).
    """
    _check_radial_inputs(profile, d_y, r, m_r)
    if mode == "quadrature":
        log_bound = log_radial_bound_quadrature(profile, d_y, m_r)
        method = "radial_quadrature"
    elif mode == "analytic":
        log_bound = log_radial_bound_analytic(profile, d_y, m_r)
        method = "radial_exponential_analytic" if profile.is_exponential else "radial_polynomial_analytic"
    else:
        raise ValidationError(f"unknown bound mode '{mode}', expected 'quadrature' or 'analytic'")
    logger.debug("radial bound %s profile=%s d_y=%d M_R=%.6g log=%.6g", mode, profile.name, d_y, m_r, log_bound)
    return BoundReport.from_log_bound(log_bound, method, (d_x, d_y))


def model_bound(model: BayesModel, mode: str = "quadrature") -> BoundReport:
    """The analytic K_2 route available for a model family."""
    if isinstance(model, LinearGaussianModel):
        return k2_linear_gaussian(model)
    if isinstance(model, EllipticalModel):
        _, m_r = model.bounds
        return radial_bound(model.profile, model.d_y, model.r, m_r, mode, d_x=model.d_x)
    raise ValidationError(f"no analytic K_2 bound for {type(model).__name__}")


def product_bound(m: float, q: float, dims: Tuple[int, int] = (0, 0)) -> BoundReport:
    """K_2 <= M * Q for likelihoods with a pointwise envelope g_y(x) <= m(x) q(y)."""
    for name, value in (("M", m), ("Q", q)):
        if not (value >= 0.0 and math.isfinite(value)):
            raise ValidationError(f"{name} must be finite and >= 0, got {value}")
    value = float(m) * float(q)
    return BoundReport(value, value, "product_form", 0.0, tuple(dims))


def sample_size_for_tolerance(poly_value: float, f_sup: float, epsilon: float) -> int:
    """Smallest N with poly_value * f_sup / sqrt(N) <= epsilon."""
    for name, value in (("poly_value", poly_value), ("f_sup", f_sup), ("epsilon", epsilon)):
        if not value > 0:
            raise NonpositiveTolerance(name, value)
    squared = (poly_value * f_sup / epsilon) ** 2
    # absorb the rounding in e.g. (1 / 0.1)^2 = 100.00000000000001
    return max(1, math.ceil(squared * (1.0 - 1e-12)))


def evidence_lower_bound(model: EllipticalModel, y) -> float:
    """C phi(psi(||y||_R + M_R)) <= pi_0(g_y), using ||h(x)||_R <= M_R."""
    y = np.asarray(y, dtype=float)
    if y.shape != (model.d_y,):
        raise DimensionMismatch("observation", model.d_y, y.shape)
    _, m_r = model.bounds
    distance = mahalanobis_norm(y, model.r) + m_r
    return math.exp(model.log_normalizer + float(model.profile.log_phi_psi(distance)))


def evidence_relative_variance(model: LinearGaussianModel, y, n: int) -> float:
    """Var(Z_N) / Z^2 = (||l_y||^2 - 1) / N for the prior-proposal evidence estimator."""
    if n < 1:
        raise ValidationError(f"sample size must be >= 1, got {n}")
    return (link_norm_sq_lg(model, y) - 1.0) / n
