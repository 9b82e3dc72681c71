"""
Radial profiles of elliptically symmetric likelihoods.

A profile is a pair (phi, psi) such that the likelihood is
C * phi(psi(||y - h(x)||_R)). Two families are supported:

    exponential  phi(s) = C exp(-s),      psi(r) = a r^beta
    polynomial   phi(s) = C s^(-alpha),   psi(r) = 1 + a r^p

Everything here works with the unnormalized log phi(psi(r)); the constant
C comes from profile_normalization.
"""
import math
from functools import lru_cache
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from models.errors import NonIntegrableProfile, ValidationError
from utils.linalg import SpdMatrix, log_sphere_surface_area
from utils.quadrature import log_quad, log_quad_inverse_tail

EXPONENTIAL = "exponential"
POLYNOMIAL = "polynomial"

PROFILE_KINDS = (
    "gaussian", "gen_gaussian", "laplace", "sub_gaussian",
    "student_t", "cauchy", "pearson7", "gen_cauchy",
)


@dataclass(frozen=True)
class RadialProfile:
    name: str
    family: str
    a: float
    beta: float = 0.0
    p: int = 0
    alpha: float = 0.0
    nu: Optional[float] = None

    def __post_init__(self):
        if self.family not in (EXPONENTIAL, POLYNOMIAL):
            raise ValidationError(f"unknown radial profile family '{self.family}'")
        if not self.a > 0:
            raise ValidationError(f"radial profile '{self.name}' needs a > 0, got {self.a}")
        if self.family == EXPONENTIAL and not self.beta > 0:
            raise ValidationError(f"radial profile '{self.name}' needs beta > 0, got {self.beta}")
        if self.family == POLYNOMIAL:
            if int(self.p) != self.p or self.p < 1:
                raise ValidationError(f"radial profile '{self.name}' needs a positive integer p, got {self.p}")
            if not self.alpha > 0:
                raise ValidationError(f"radial profile '{self.name}' needs alpha > 0, got {self.alpha}")

    # Exponential type

    @classmethod
    def gaussian(cls) -> "RadialProfile":
        return cls("gaussian", EXPONENTIAL, a=0.5, beta=2.0)

    @classmethod
    def laplace(cls) -> "RadialProfile":
        return cls("laplace", EXPONENTIAL, a=1.0, beta=1.0)

    @classmethod
    def gen_gaussian(cls, beta: float) -> "RadialProfile":
        return cls("gen_gaussian", EXPONENTIAL, a=1.0, beta=float(beta))

    @classmethod
    def sub_gaussian(cls, a: float) -> "RadialProfile":
        return cls("sub_gaussian", EXPONENTIAL, a=float(a), beta=2.0)

    # Polynomial type

    @classmethod
    def student_t(cls, nu: float, d_y: int) -> "RadialProfile":
        if not nu > 0:
            raise ValidationError(f"student_t needs nu > 0, got {nu}")
        return cls("student_t", POLYNOMIAL, a=1.0 / nu, p=2, alpha=(nu + d_y) / 2.0, nu=float(nu))

    @classmethod
    def cauchy(cls, d_y: int) -> "RadialProfile":
        return cls("cauchy", POLYNOMIAL, a=1.0, p=2, alpha=(d_y + 1) / 2.0, nu=1.0)

    @classmethod
    def pearson7(cls, lam: float, alpha: float) -> "RadialProfile":
        if not lam > 0:
            raise ValidationError(f"pearson7 needs lambda > 0, got {lam}")
        return cls("pearson7", POLYNOMIAL, a=1.0 / lam, p=2, alpha=float(alpha))

    @classmethod
    def gen_cauchy(cls, p: int, alpha: float) -> "RadialProfile":
        return cls("gen_cauchy", POLYNOMIAL, a=1.0, p=int(p), alpha=float(alpha))

    @property
    def is_exponential(self) -> bool:
        return self.family == EXPONENTIAL

    def psi(self, r):
        r = np.asarray(r, dtype=float)
        if self.is_exponential:
            return self.a * r ** self.beta
        return 1.0 + self.a * r ** self.p

    def log_phi(self, s):
        """log phi(s) without the constant C."""
        s = np.asarray(s, dtype=float)
        if self.is_exponential:
            return -s
        return -self.alpha * np.log(s)

    def log_phi_psi(self, r):
        """log phi(psi(r)) without the constant C, evaluated without forming psi for large r."""
        r = np.asarray(r, dtype=float)
        if self.is_exponential:
            return -self.a * r ** self.beta
        return -self.alpha * np.log1p(self.a * r ** self.p)

    def check_integrable(self, d_y: int) -> None:
        if not self.is_exponential and not self.alpha * self.p > d_y:
            raise NonIntegrableProfile(self.alpha, self.p, d_y)

    def scale_radius(self, d_y: int) -> float:
        """Radius near the mode of r^(d_y-1) phi(psi(r)); used to place quadrature breakpoints."""
        if self.is_exponential:
            return (d_y / (self.a * self.beta)) ** (1.0 / self.beta)
        excess = self.alpha * self.p - d_y + 1.0
        return (d_y / (self.a * max(excess, 1e-3))) ** (1.0 / self.p)

    def log_half_line_integral(self, log_fn: Callable[[np.ndarray], np.ndarray], breakpoints, what: str) -> float:
        """
        log int_0^inf exp(log_fn(r)) dr, split at the given breakpoints.

        The tail beyond the last breakpoint is integrated in t = psi(r) for
        exponential profiles and in t = start / r for polynomial ones.
        """
        edges = [0.0] + sorted({float(b) for b in breakpoints if b > 0.0})
        if len(edges) == 1:
            raise ValueError("log_half_line_integral needs a positive breakpoint")
        pieces = [log_quad(log_fn, lo, hi, what) for lo, hi in zip(edges[:-1], edges[1:])]
        pieces.append(self.log_tail_integral(log_fn, edges[-1], what))
        return float(logsumexp(pieces))

    def log_tail_integral(self, log_fn: Callable[[np.ndarray], np.ndarray], start: float, what: str) -> float:
        """log int_start^inf exp(log_fn(r)) dr for start > 0."""
        if self.is_exponential:
            a, beta = self.a, self.beta

            def log_in_t(t):
                t = np.asarray(t, dtype=float)
                r = (t / a) ** (1.0 / beta)
                return log_fn(r) + np.log(r) - np.log(beta * t)

            return log_quad(log_in_t, float(self.psi(start)), np.inf, what)
        return log_quad_inverse_tail(log_fn, start, what)

    def log_radial_mass(self, d_y: int) -> float:
        """log int_0^inf phi(psi(r)) r^(d_y-1) dr without the constant C."""
        self.check_integrable(d_y)
        return _log_radial_mass(self, d_y)

    def describe(self) -> dict:
        out = {"name": self.name, "family": self.family, "a": self.a}
        if self.is_exponential:
            out["beta"] = self.beta
        else:
            out.update(p=self.p, alpha=self.alpha)
        if self.nu is not None:
            out["nu"] = self.nu
        return out


@lru_cache(maxsize=256)
def _log_radial_mass(profile: RadialProfile, d_y: int) -> float:
    def log_fn(r):
        return profile.log_phi_psi(r) + log_radial_volume(r, d_y)

    return profile.log_half_line_integral(log_fn, [profile.scale_radius(d_y)], f"{profile.name} radial mass")


def log_radial_volume(r, d_y: int):
    """(d_y - 1) log r, taken as 0 for d_y = 1 so that r = 0 stays finite."""
    r = np.asarray(r, dtype=float)
    if d_y == 1:
        return np.zeros_like(r)
    with np.errstate(divide="ignore"):
        return (d_y - 1) * np.log(r)


def log_profile_normalization(profile: RadialProfile, d_y: int, r: SpdMatrix) -> float:
    return -(log_sphere_surface_area(d_y, r) + profile.log_radial_mass(d_y))


def profile_normalization(profile: RadialProfile, d_y: int, r: SpdMatrix) -> float:
    """C = [S_R int_0^inf phi(psi(r)) r^(d_y-1) dr]^(-1) by adaptive quadrature."""
    return math.exp(log_profile_normalization(profile, d_y, r))
