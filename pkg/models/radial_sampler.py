"""Samplers for the radius ||v||_R of elliptical noise, and the noise itself."""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from models.errors import SamplerUnavailable
from models.radial_profile import RadialProfile, log_radial_volume
from utils.linalg import SpdMatrix

logger = logging.getLogger(__name__)

TABLE_NODES = 4096
TAIL_MASS = 1e-10
LOG_TAIL_MASS = math.log(TAIL_MASS)
MAX_DOUBLINGS = 64
_GL_NODES, _GL_WEIGHTS = leggauss(16)

class RadialSampler:
    """
    Draws radii from the density proportional to r^(d_y-1) phi(psi(r)).

    The choice depends on the profile parameters, not its name:

    - exponential, beta = 2: 2 a r^2 ~ chi^2(d_y);
    - exponential, beta = 1: a r ~ Gamma(d_y);
    - polynomial, p = 2: a r^2 ~ chi^2(d_y) / chi^2(2 alpha - d_y), the
      Student-t construction.

    Any other profile goes through an inverse-CDF table on TABLE_NODES
    nodes, which is built lazily on first use and truncated at the radius
    beyond which the remaining mass is below TAIL_MASS.
    """

    def __init__(self, profile: RadialProfile, d_y: int):
        profile.check_integrable(d_y)
        self.profile = profile
        self.d_y = d_y
        self._table: Optional[Tuple[np.ndarray, np.ndarray]] = None

    @property
    def is_direct(self) -> bool:
        profile = self.profile
        if profile.is_exponential:
            return profile.beta in (1.0, 2.0)
        return profile.p == 2

    def sample(self, generator: np.random.Generator, n: int) -> np.ndarray:
        profile, d = self.profile, self.d_y
        if profile.is_exponential and profile.beta == 2.0:
            return np.sqrt(generator.chisquare(d, size=n) / (2.0 * profile.a))
        if profile.is_exponential and profile.beta == 1.0:
            return generator.gamma(d, 1.0 / profile.a, size=n)
        if not profile.is_exponential and profile.p == 2:
            ratio = generator.chisquare(d, size=n) / generator.chisquare(2.0 * profile.alpha - d, size=n)
            return np.sqrt(ratio / profile.a)
        radii, cdf = self.table()
        return np.interp(generator.random(n), cdf, radii)

    def table(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._table is None:
            self._table = self._build_table()
        return self._table

    def _log_density(self, r):
        return self.profile.log_phi_psi(r) + log_radial_volume(r, self.d_y)

    def _build_table(self) -> Tuple[np.ndarray, np.ndarray]:
        profile, d = self.profile, self.d_y
        log_total = profile.log_radial_mass(d)
        r_max = profile.scale_radius(d)
        for _ in range(MAX_DOUBLINGS):
            log_tail = profile.log_tail_integral(self._log_density, r_max, f"{profile.name} radial tail")
            if log_tail - log_total <= LOG_TAIL_MASS:
                break
            r_max *= 2.0
        else:
            raise SamplerUnavailable(
                f"radial CDF for profile '{profile.name}' (d_y={d}) does not reach 1 - {TAIL_MASS} "
                f"within {MAX_DOUBLINGS} doublings"
            )

        nodes = np.expm1(np.linspace(0.0, np.log1p(r_max), TABLE_NODES))
        increments = self._interval_masses(nodes)
        cdf = np.concatenate(([0.0], np.cumsum(increments)))
        cdf /= cdf[-1]
        logger.debug("radial table for %s d_y=%d: r_max=%.4g", profile.name, d, r_max)
        return nodes, cdf

    def _interval_masses(self, nodes: np.ndarray) -> np.ndarray:
        lo, hi = nodes[:-1], nodes[1:]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        points = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        with np.errstate(divide="ignore", under="ignore"):
            logs = self._log_density(points)
        shift = np.max(logs[np.isfinite(logs)])
        with np.errstate(under="ignore"):
            return half * np.sum(_GL_WEIGHTS[None, :] * np.exp(logs - shift), axis=1)


def sample_unit_sphere(generator: np.random.Generator, n: int, d: int) -> np.ndarray:
    z = generator.standard_normal((n, d))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    return z / np.where(norms > 0, norms, 1.0)


def sample_elliptical_noise(sampler: RadialSampler, r: SpdMatrix, generator: np.random.Generator, n: int) -> np.ndarray:
    """v = radius * L^{-T} u, so that ||v||_R equals the sampled radius."""
    radii = sampler.sample(generator, n)
    directions = sample_unit_sphere(generator, n, r.dim)
    return radii[:, None] * r.inv_sqrt_apply(directions)
