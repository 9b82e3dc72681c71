from typing import Optional, Sequence


class ValidationError(ValueError):
    """Invalid input, model or configuration. Maps to CLI exit code 1."""


class NumericalFailure(ArithmeticError):
    """A numerical routine could not produce a trustworthy value. Maps to CLI exit code 2."""


class BoundViolation(RuntimeError):
    """A Monte Carlo estimate exceeded its analytic bound. Maps to CLI exit code 3."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__(f"{len(self.violations)} bound violation(s): " + "; ".join(self.violations))

    def __reduce__(self):
        return type(self), (self.violations,)


class DimensionMismatch(ValidationError):
    def __init__(self, what: str, expected, actual):
        self.what = what
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected dimension {expected}, got {actual}")

    def __reduce__(self):
        return type(self), (self.what, self.expected, self.actual)


class NotSymmetric(ValidationError):
    def __init__(self, row: int, col: int, deviation: float):
        self.row = row
        self.col = col
        self.deviation = deviation
        super().__init__(f"matrix not symmetric at ({row}, {col}): |m - m^T| = {deviation:.3e}")

    def __reduce__(self):
        return type(self), (self.row, self.col, self.deviation)


class NotPositiveDefinite(ValidationError):
    def __init__(self, pivot: int, value: Optional[float] = None):
        self.pivot = pivot
        self.value = value
        detail = "" if value is None else f" (pivot value {value:.3e})"
        super().__init__(f"matrix not positive definite: Cholesky pivot {pivot} failed{detail}")

    def __reduce__(self):
        return type(self), (self.pivot, self.value)


class NonpositiveShape(ValidationError):
    def __init__(self, shape: float):
        self.shape = shape
        super().__init__(f"incomplete gamma shape must be > 0, got {shape}")

    def __reduce__(self):
        return type(self), (self.shape,)


class NonIntegrableProfile(ValidationError):
    def __init__(self, alpha: float, p: int, d_y: int):
        self.alpha = alpha
        self.p = p
        self.d_y = d_y
        super().__init__(
            f"polynomial radial profile is not integrable: requires alpha > d_y/p "
            f"(alpha={alpha}, d_y={d_y}, p={p}, d_y/p={d_y / p})"
        )

    def __reduce__(self):
        return type(self), (self.alpha, self.p, self.d_y)


class NonpositiveTolerance(ValidationError):
    def __init__(self, name: str, value: float):
        self.name = name
        self.value = value
        super().__init__(f"{name} must be strictly positive, got {value}")

    def __reduce__(self):
        return type(self), (self.name, self.value)


class DegenerateFit(ValidationError):
    pass


class OffsetEvidence(ValidationError):
    def __init__(self, log_offset: float):
        self.log_offset = log_offset
        super().__init__(
            f"evidence is only defined up to the likelihood constant; ensemble built with log_offset={log_offset}"
        )

    def __reduce__(self):
        return type(self), (self.log_offset,)


class ConfigError(ValidationError):
    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)

    def __reduce__(self):
        return type(self), (self.path, self.message)


class DegenerateWeights(NumericalFailure):
    def __init__(self, max_log_weight: float, context: Optional[dict] = None):
        self.max_log_weight = max_log_weight
        self.context = dict(context or {})
        where = "".join(f" {k}={v}" for k, v in self.context.items())
        super().__init__(f"all importance weights degenerate (max raw log-weight {max_log_weight}){where}")

    def with_context(self, **context) -> "DegenerateWeights":
        merged = dict(self.context)
        merged.update(context)
        return DegenerateWeights(self.max_log_weight, merged)

    def __reduce__(self):
        return type(self), (self.max_log_weight, self.context)


class QuadratureNonConvergent(NumericalFailure):
    def __init__(self, what: str, abserr: float, value: float):
        self.what = what
        self.abserr = abserr
        self.value = value
        super().__init__(f"quadrature for {what} did not converge (value {value:.6e}, abserr {abserr:.3e})")

    def __reduce__(self):
        return type(self), (self.what, self.abserr, self.value)


class SeriesNonConvergent(NumericalFailure):
    pass


class SamplerUnavailable(NumericalFailure):
    pass
