from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Union


@dataclass
class ResultRow:
    axis_value: int
    error_p: float
    error_se: float
    mean_ess: float
    mean_rho_hat: float
    bound_k2: Optional[float]
    oracle_se: float
    wall_ms: int


@dataclass
class BoundCheckRow:
    axis_value: int
    k2_mc: float
    k2_mc_se: float
    bound_k2: float
    method: str
    violation: bool
    wall_ms: int


@dataclass
class ExperimentResult:
    """Rows of one experiment plus everything needed to reproduce and audit it."""

    kind: str
    axis: str
    p: int
    rows: List[Union[ResultRow, BoundCheckRow]]
    metadata: Dict[str, Any] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)

    def deterministic_rows(self) -> List[Dict[str, Any]]:
        """Rows without wall-clock timings, for reproducibility comparisons."""
        out = []
        for row in self.rows:
            values = asdict(row)
            values.pop("wall_ms")
            out.append(values)
        return out
