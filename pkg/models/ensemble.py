from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WeightedEnsemble:
    """
    The weighted empirical measure produced by one importance-sampling run.

    log_weights_raw are the log-likelihood values as evaluated (including
    any log_offset); weights are normalized in log space after subtracting
    their maximum.
    """

    samples: np.ndarray
    log_weights_raw: np.ndarray
    weights: np.ndarray
    log_z_hat: float
    ess: float
    rho_hat: float
    log_offset: float = 0.0

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def summary(self) -> dict:
        return {
            "n": self.n,
            "log_z_hat": self.log_z_hat,
            "ess": self.ess,
            "rho_hat": self.rho_hat,
            "max_weight": float(np.max(self.weights)),
            "log_offset": self.log_offset,
        }
