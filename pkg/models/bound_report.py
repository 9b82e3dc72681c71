import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

# relative slack on bounds evaluated by numerical quadrature
BOUND_RTOL = 1e-8

BOUND_METHODS = (
    "lg_closed_form",
    "lg_uniform",
    "radial_quadrature",
    "radial_exponential_analytic",
    "radial_polynomial_analytic",
    "product_form",
    "monte_carlo",
)


@dataclass(frozen=True)
class BoundReport:
    """
    A second link-function moment K_2 and/or an upper bound on it.

    Bounds that overflow double precision are reported as +inf in
    k2_upper_bound; log_k2_upper_bound always holds the finite log value.
    """

    k2_estimate_or_closed_form: Optional[float]
    k2_upper_bound: Optional[float]
    method: str
    standard_error: float
    dims: Tuple[int, int]
    log_k2_upper_bound: Optional[float] = None

    def __post_init__(self):
        if self.method not in BOUND_METHODS:
            raise ValueError(f"unknown bound method '{self.method}'")

    @classmethod
    def from_log_bound(cls, log_bound: float, method: str, dims: Tuple[int, int],
                       estimate: Optional[float] = None) -> "BoundReport":
        bound = math.exp(log_bound) if log_bound < 709.0 else math.inf
        return cls(estimate, bound, method, 0.0, tuple(dims), log_bound)

    def dominates(self, k2: float, k2_se: float, n_se: float = 3.0) -> bool:
        """True unless k2 - n_se * k2_se exceeds the upper bound by more than the quadrature tolerance."""
        excess = k2 - n_se * k2_se
        if self.log_k2_upper_bound is not None:
            return excess <= 0.0 or math.log(excess) <= self.log_k2_upper_bound + BOUND_RTOL
        return excess <= self.k2_upper_bound * (1.0 + BOUND_RTOL)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["dims"] = list(self.dims)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)
