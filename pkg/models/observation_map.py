from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import erf

from models.errors import DimensionMismatch, ValidationError
from utils.linalg import SpdMatrix, eigen_extremes
from utils.random_stream import RandomStream

NONLINEARITIES = {"tanh": np.tanh, "erf": erf}
# sup |sigma| for both nonlinearities
M_SIGMA = 1.0


@dataclass
class SaturatingObservationMap:
    """h_i(x) = sum_j a_ij sigma(x_j) with a bounded nonlinearity sigma."""

    coeffs: np.ndarray
    nonlinearity: str = "tanh"
    a_max: Optional[float] = None

    def __post_init__(self):
        self.coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if self.coeffs.ndim != 2:
            raise ValidationError(f"observation map coefficients must be a matrix, got shape {self.coeffs.shape}")
        if self.nonlinearity not in NONLINEARITIES:
            raise ValidationError(
                f"unknown nonlinearity '{self.nonlinearity}', expected one of {sorted(NONLINEARITIES)}"
            )
        largest = float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0
        if self.a_max is None:
            self.a_max = largest
        elif largest > self.a_max:
            raise ValidationError(f"coefficient magnitude {largest} exceeds a_max={self.a_max}")

    @classmethod
    def seeded(cls, d_x: int, d_y: int, a_max: float, seed: int, nonlinearity: str = "tanh") -> "SaturatingObservationMap":
        """Coefficients drawn i.i.d. uniform on [-a_max, a_max] from a fixed seed."""
        if a_max < 0:
            raise ValidationError(f"a_max must be >= 0, got {a_max}")
        generator = RandomStream(seed, (d_x, d_y)).generator
        coeffs = generator.uniform(-a_max, a_max, size=(d_y, d_x))
        return cls(coeffs, nonlinearity, a_max=float(a_max))

    @property
    def d_x(self) -> int:
        return self.coeffs.shape[1]

    @property
    def d_y(self) -> int:
        return self.coeffs.shape[0]

    @property
    def bound(self) -> float:
        """M = sqrt(d_y) * A_max * M_sigma * d_x, a uniform bound on ||h(x)||."""
        return float(np.sqrt(self.d_y) * self.a_max * M_SIGMA * self.d_x)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d_x:
            raise DimensionMismatch("observation map input", self.d_x, x.shape[-1])
        return NONLINEARITIES[self.nonlinearity](x) @ self.coeffs.T

    def probe_bound(self, stream: RandomStream, n_points: int = 1000, spread: float = 10.0) -> float:
        """Largest ||h(x)|| over random probe points; never exceeds bound."""
        x = spread * stream.generator.standard_normal((n_points, self.d_x))
        return float(np.max(np.linalg.norm(self(x), axis=1)))


def observation_bound(obs_map: SaturatingObservationMap, r: SpdMatrix) -> Tuple[float, float]:
    """(M, M_R) with M_R = sqrt(lambda_max(R)) * M."""
    if r.dim != obs_map.d_y:
        raise DimensionMismatch("observation_bound R", obs_map.d_y, r.dim)
    m = obs_map.bound
    lambda_max, _ = eigen_extremes(r)
    return m, float(np.sqrt(lambda_max) * m)
