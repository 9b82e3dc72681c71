"""
Bayesian models: a samplable prior paired with an evaluable log-likelihood.

Every model exposes the same small surface used by the importance sampler
and the diagnostics:

    d_x, d_y, log_offset
    sample_prior(generator, n)         -> (n, d_x) prior draws
    log_likelihood(y, x)               -> log g(y | x) over the leading axes of x
    sample_observation(generator, x)   -> y ~ g(. | x)
    sample_joint(stream)               -> (x, y)
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Tuple, Union

import numpy as np

from models.errors import DimensionMismatch, ValidationError
from models.observation_map import SaturatingObservationMap, observation_bound
from models.radial_profile import RadialProfile, log_profile_normalization
from models.radial_sampler import RadialSampler, sample_elliptical_noise
from utils.linalg import SpdMatrix, as_spd, gaussian_log_pdf, mahalanobis_norm, spd_factor
from utils.random_stream import RandomStream

logger = logging.getLogger(__name__)


def _vector(name: str, value, dim: int) -> np.ndarray:
    v = np.asarray(value, dtype=float).reshape(-1)
    if v.size == 1 and dim > 1:
        v = np.full(dim, float(v[0]))
    if v.shape != (dim,):
        raise DimensionMismatch(name, dim, v.size)
    return v


def _check_observation(y, d_y: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape[-1:] != (d_y,):
        raise DimensionMismatch("observation", d_y, y.shape[-1:] or ())
    return y


def _check_state(x, d_x: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (d_x,):
        raise DimensionMismatch("state", d_x, x.shape[-1:] or ())
    return x


class Prior(Protocol):
    dim: int

    def sample(self, generator: np.random.Generator, n: int) -> np.ndarray: ...

    def log_pdf(self, x: np.ndarray) -> np.ndarray: ...


@dataclass
class GaussianPrior:
    mean: np.ndarray
    cov: SpdMatrix

    def __post_init__(self):
        self.cov = as_spd(self.cov)
        self.mean = _vector("prior mean", self.mean, self.cov.dim)

    @property
    def dim(self) -> int:
        return self.cov.dim

    def sample(self, generator: np.random.Generator, n: int) -> np.ndarray:
        return self.mean + self.cov.apply_factor(generator.standard_normal((n, self.dim)))

    def log_pdf(self, x: np.ndarray) -> np.ndarray:
        return gaussian_log_pdf(_check_state(x, self.dim), self.mean, self.cov)


@dataclass
class UniformBoxPrior:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float).reshape(-1)
        self.hi = _vector("uniform box upper corner", self.hi, self.lo.size)
        if not np.all(self.hi > self.lo):
            raise ValidationError("uniform box needs hi > lo in every coordinate")

    @property
    def dim(self) -> int:
        return self.lo.size

    def sample(self, generator: np.random.Generator, n: int) -> np.ndarray:
        return generator.uniform(self.lo, self.hi, size=(n, self.dim))

    def log_pdf(self, x: np.ndarray) -> np.ndarray:
        x = _check_state(x, self.dim)
        inside = np.all((x >= self.lo) & (x <= self.hi), axis=-1)
        return np.where(inside, -float(np.sum(np.log(self.hi - self.lo))), -np.inf)


class BayesModel(Protocol):
    d_x: int
    d_y: int
    log_offset: float

    def sample_prior(self, generator: np.random.Generator, n: int) -> np.ndarray: ...

    def log_likelihood(self, y: np.ndarray, x: np.ndarray) -> Union[float, np.ndarray]: ...

    def sample_observation(self, generator: np.random.Generator, x: np.ndarray) -> np.ndarray: ...

    def sample_joint(self, stream: RandomStream) -> Tuple[np.ndarray, np.ndarray]: ...


class _JointSampling:
    def sample_joint(self, stream: RandomStream) -> Tuple[np.ndarray, np.ndarray]:
        """x from the prior, then y from g(. | x), both from the stream's generator."""
        generator = stream.generator
        x = self.sample_prior(generator, 1)[0]
        return x, self.sample_observation(generator, x)


@dataclass
class LinearGaussianModel(_JointSampling):
    """Y = A X + V with X ~ N(mu_x, sigma_x) and V ~ N(0, R)."""

    mu_x: np.ndarray
    sigma_x: SpdMatrix
    a: np.ndarray
    r: SpdMatrix
    log_offset: float = 0.0
    mu_y: np.ndarray = field(init=False, repr=False)
    sigma_y: SpdMatrix = field(init=False, repr=False)
    s2: SpdMatrix = field(init=False, repr=False)

    def __post_init__(self):
        self.sigma_x = as_spd(self.sigma_x)
        self.r = as_spd(self.r)
        self.mu_x = _vector("mu_x", self.mu_x, self.sigma_x.dim)
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        if self.a.shape != (self.r.dim, self.sigma_x.dim):
            raise DimensionMismatch("A matrix", (self.r.dim, self.sigma_x.dim), self.a.shape)
        self.log_offset = float(self.log_offset)

        signal = self.a @ self.sigma_x.entries @ self.a.T
        self.mu_y = self.a @ self.mu_x
        self.sigma_y = spd_factor(0.5 * (signal + signal.T) + self.r.entries)
        self.s2 = spd_factor(self.sigma_y.entries - 0.5 * self.r.entries)
        logger.debug("assembled linear-Gaussian model d_x=%d d_y=%d", self.d_x, self.d_y)

    @property
    def d_x(self) -> int:
        return self.sigma_x.dim

    @property
    def d_y(self) -> int:
        return self.r.dim

    @property
    def prior(self) -> GaussianPrior:
        return GaussianPrior(self.mu_x, self.sigma_x)

    def sample_prior(self, generator: np.random.Generator, n: int) -> np.ndarray:
        return self.prior.sample(generator, n)

    def log_likelihood(self, y, x):
        y = _check_observation(y, self.d_y)
        x = _check_state(x, self.d_x)
        return gaussian_log_pdf(y, x @ self.a.T, self.r) + self.log_offset

    def sample_observation(self, generator: np.random.Generator, x: np.ndarray) -> np.ndarray:
        x = _check_state(x, self.d_x)
        return self.a @ x + self.r.apply_factor(generator.standard_normal(self.d_y))

    def marginal_observation_logpdf(self, y) -> float:
        """log pi_0(g_y) = log N(y; mu_y, sigma_y)."""
        return gaussian_log_pdf(_check_observation(y, self.d_y), self.mu_y, self.sigma_y)


@dataclass
class EllipticalModel(_JointSampling):
    """g(y | x) = C phi(psi(||y - h(x)||_R)) with a saturating observation map h."""

    prior: Union[GaussianPrior, UniformBoxPrior]
    obs_map: SaturatingObservationMap
    profile: RadialProfile
    r: SpdMatrix
    log_offset: float = 0.0
    log_normalizer: float = field(init=False)
    radial_sampler: RadialSampler = field(init=False, repr=False)

    def __post_init__(self):
        self.r = as_spd(self.r)
        if self.obs_map.d_x != self.prior.dim:
            raise DimensionMismatch("observation map input", self.prior.dim, self.obs_map.d_x)
        if self.obs_map.d_y != self.r.dim:
            raise DimensionMismatch("observation map output", self.r.dim, self.obs_map.d_y)
        self.profile.check_integrable(self.d_y)
        self.log_offset = float(self.log_offset)
        # density w.r.t. Lebesgue measure in y picks up |R| on top of C
        self.log_normalizer = log_profile_normalization(self.profile, self.d_y, self.r) + self.r.log_det
        self.radial_sampler = RadialSampler(self.profile, self.d_y)
        logger.debug(
            "assembled elliptical model d_x=%d d_y=%d profile=%s log C=%.6g",
            self.d_x, self.d_y, self.profile.name, self.log_normalizer,
        )

    @property
    def d_x(self) -> int:
        return self.prior.dim

    @property
    def d_y(self) -> int:
        return self.r.dim

    @property
    def bounds(self) -> Tuple[float, float]:
        return observation_bound(self.obs_map, self.r)

    def sample_prior(self, generator: np.random.Generator, n: int) -> np.ndarray:
        return self.prior.sample(generator, n)

    def log_likelihood(self, y, x):
        y = _check_observation(y, self.d_y)
        x = _check_state(x, self.d_x)
        distance = mahalanobis_norm(y - self.obs_map(x), self.r)
        out = self.log_normalizer + self.profile.log_phi_psi(distance) + self.log_offset
        return float(out) if np.ndim(out) == 0 else out

    def sample_observation(self, generator: np.random.Generator, x: np.ndarray) -> np.ndarray:
        x = _check_state(x, self.d_x)
        noise = sample_elliptical_noise(self.radial_sampler, self.r, generator, 1)[0]
        return self.obs_map(x) + noise


@dataclass
class DensityRatio:
    """log(d pi_0 / d nu)(x) = log pi_0(x) - log nu(x) for two priors with densities."""

    target: Prior
    proposal: Prior

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.target.log_pdf(x) - self.proposal.log_pdf(x)


@dataclass
class ReparametrizedModel(_JointSampling):
    """
    The base model seen through a proposal nu: prior nu, likelihood g_y * d pi_0 / d nu.

    Absolute continuity of pi_0 with respect to nu is the caller's obligation.
    Observations are still generated by the base model.
    """

    base: BayesModel
    proposal: Prior
    log_rho: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.proposal.dim != self.base.d_x:
            raise DimensionMismatch("proposal dimension", self.base.d_x, self.proposal.dim)

    @property
    def d_x(self) -> int:
        return self.base.d_x

    @property
    def d_y(self) -> int:
        return self.base.d_y

    @property
    def log_offset(self) -> float:
        return self.base.log_offset

    def sample_prior(self, generator: np.random.Generator, n: int) -> np.ndarray:
        return self.proposal.sample(generator, n)

    def log_likelihood(self, y, x):
        base = self.base.log_likelihood(y, x)
        if self.log_rho is None:
            return base
        return base + self.log_rho(x)

    def sample_observation(self, generator: np.random.Generator, x: np.ndarray) -> np.ndarray:
        return self.base.sample_observation(generator, x)

    def sample_joint(self, stream: RandomStream) -> Tuple[np.ndarray, np.ndarray]:
        return self.base.sample_joint(stream)


def reparametrize(base: BayesModel, proposal: Prior, log_rho: Optional[Callable] = None) -> ReparametrizedModel:
    """
    Wraps base so that importance sampling from proposal targets the base posterior.

    log_rho defaults to the exact density ratio when the base model exposes
    its prior; pass it explicitly otherwise.
    """
    if log_rho is None and getattr(base, "prior", None) is not None and base.prior is not proposal:
        log_rho = DensityRatio(base.prior, proposal)
    return ReparametrizedModel(base, proposal, log_rho)
