"""Jackknife standard errors and small summary helpers."""
from typing import Callable, Tuple

import numpy as np


def jackknife(values, transform: Callable[[float], float] = lambda m: m) -> Tuple[float, float]:
    """
    Delete-one jackknife for transform(mean(values)).

    Returns (estimate, standard_error). The standard error is 0 when fewer
    than two values are given.
    """
    values = np.asarray(values, dtype=float).ravel()
    n = values.size
    if n == 0:
        raise ValueError("jackknife needs at least one value")
    estimate = float(transform(float(np.mean(values))))
    if n < 2:
        return estimate, 0.0
    leave_one_out = (values.sum() - values) / (n - 1)
    replicates = np.array([transform(float(m)) for m in leave_one_out])
    spread = replicates - replicates.mean()
    variance = (n - 1) / n * float(np.sum(spread * spread))
    return estimate, float(np.sqrt(variance))


def power_mean_jackknife(group_moments, p: int) -> Tuple[float, float]:
    """L^p norm (mean of group_moments)^{1/p}, where each entry is one group's mean |e|^p."""
    moments = np.asarray(group_moments, dtype=float)
    return jackknife(moments, lambda m: max(m, 0.0) ** (1.0 / p))


def standard_error(values) -> float:
    values = np.asarray(values, dtype=float).ravel()
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(values.size))
