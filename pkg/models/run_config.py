import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from models.errors import ConfigError
from models.test_function import TestFunction

AXES = ("N", "d_x", "d_y")
BOUND_MODES = ("quadrature", "analytic")
MIN_ORACLE_SAMPLES = 10_000
MIN_ORACLE_REPS = 8


@dataclass
class OracleBudget:
    # None means 100x the largest sample size of the run, floored at MIN_ORACLE_SAMPLES
    n_ref: Optional[int] = None
    n_reps: int = MIN_ORACLE_REPS

    def resolve_n_ref(self, largest_n: int) -> int:
        return self.n_ref if self.n_ref is not None else max(MIN_ORACLE_SAMPLES, 100 * largest_n)

    def validate(self) -> None:
        if self.n_ref is not None:
            if isinstance(self.n_ref, bool) or not isinstance(self.n_ref, int) or self.n_ref < MIN_ORACLE_SAMPLES:
                raise ConfigError("experiment.oracle_n_ref",
                                  f"must be an integer >= {MIN_ORACLE_SAMPLES}, got {self.n_ref!r}")
        if isinstance(self.n_reps, bool) or not isinstance(self.n_reps, int) or self.n_reps < MIN_ORACLE_REPS:
            raise ConfigError("experiment.oracle_n_reps",
                              f"must be an integer >= {MIN_ORACLE_REPS}, got {self.n_reps!r}")


@dataclass
class ExperimentConfig:
    axis: str = "N"
    grid: List[int] = field(default_factory=lambda: [2**k for k in range(7, 15)])
    n_samples: int = 4096
    n_obs: int = 100
    n_reps: int = 50
    p: int = 2
    f: TestFunction = field(default_factory=lambda: TestFunction.indicator(0, 0.0))
    seed: int = 0
    oracle: OracleBudget = field(default_factory=OracleBudget)
    k2_n_obs: int = 1000
    k2_n_inner: int = 1000
    bound_mode: str = "quadrature"
    # target L^p error; when set, a d_x sweep sizes N per dimension instead of using n_samples
    epsilon: Optional[float] = None

    def validate(self) -> None:
        if self.axis not in AXES:
            raise ConfigError("experiment.axis", f"must be one of {AXES}, got '{self.axis}'")
        if not self.grid or any(not isinstance(g, int) or isinstance(g, bool) or g < 1 for g in self.grid):
            raise ConfigError("experiment.grid", f"must be a non-empty list of positive integers, got {self.grid}")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ConfigError("experiment.grid", f"must be strictly increasing, got {self.grid}")
        if self.n_samples < 1:
            raise ConfigError("experiment.n_samples", f"must be >= 1, got {self.n_samples}")
        if self.n_obs < 2:
            raise ConfigError("experiment.n_obs", f"must be >= 2, got {self.n_obs}")
        if self.n_reps < 2:
            raise ConfigError("experiment.n_reps", f"must be >= 2, got {self.n_reps}")
        if self.p not in (1, 2):
            raise ConfigError("experiment.p", f"must be 1 or 2, got {self.p}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("experiment.seed", f"must fit in an unsigned 64-bit integer, got {self.seed}")
        if self.k2_n_obs < 2 or self.k2_n_inner < 2:
            raise ConfigError("experiment.k2_n_obs", "k2_n_obs and k2_n_inner must be >= 2")
        if self.bound_mode not in BOUND_MODES:
            raise ConfigError("experiment.bound_mode", f"must be one of {BOUND_MODES}, got '{self.bound_mode}'")
        if self.epsilon is not None:
            if isinstance(self.epsilon, bool) or not isinstance(self.epsilon, (int, float)) \
                    or not (self.epsilon > 0 and math.isfinite(self.epsilon)):
                raise ConfigError("experiment.epsilon", f"must be a finite number > 0, got {self.epsilon!r}")
            if self.axis != "d_x":
                raise ConfigError("experiment.epsilon", f"sizing N from a tolerance needs axis 'd_x', got '{self.axis}'")
        self.oracle.validate()


@dataclass
class OutputConfig:
    dir: str = "results"
    name: str = "experiment"


@dataclass
class RunConfig:
    """A fully resolved configuration file: model spec, experiment and output sections."""

    model: Dict[str, Any]
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
