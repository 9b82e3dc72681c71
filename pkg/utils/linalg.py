"""Symmetric positive definite algebra, Gaussian densities and Mahalanobis geometry."""
import math
from typing import Tuple

import numpy as np
from scipy.linalg import cho_solve, lapack, solve_triangular
from scipy.special import gammaln

from models.errors import DimensionMismatch, NotPositiveDefinite, NotSymmetric

SYMMETRY_RTOL = 1e-12
PIVOT_RTOL = 1e-12
LOG_2PI = math.log(2.0 * math.pi)


class SpdMatrix:
    """Immutable SPD matrix with its lower Cholesky factor computed on construction."""

    __slots__ = ("_entries", "_factor", "_log_det")

    def __init__(self, entries: np.ndarray, factor: np.ndarray):
        self._entries = entries
        self._factor = factor
        self._entries.setflags(write=False)
        self._factor.setflags(write=False)
        self._log_det = 2.0 * float(np.sum(np.log(np.diag(factor))))

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def factor(self) -> np.ndarray:
        return self._factor

    @property
    def log_det(self) -> float:
        return self._log_det

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.dim:
            raise DimensionMismatch("solve right-hand side", self.dim, b.shape[0])
        return cho_solve((self._factor, True), b)

    def inverse(self) -> np.ndarray:
        return self.solve(np.eye(self.dim))

    def inv_quad_form(self, v: np.ndarray) -> np.ndarray:
        """v^T M^{-1} v over the last axis of v."""
        v = np.asarray(v, dtype=float)
        z = solve_triangular(self._factor, v.reshape(-1, self.dim).T, lower=True)
        return np.sum(z * z, axis=0).reshape(v.shape[:-1])

    def quad_form(self, v: np.ndarray) -> np.ndarray:
        """v^T M v over the last axis of v."""
        v = np.asarray(v, dtype=float)
        return np.einsum("...i,ij,...j->...", v, self._entries, v)

    def apply_factor(self, z: np.ndarray) -> np.ndarray:
        """L z over the last axis; maps standard normals to N(0, M)."""
        return np.asarray(z, dtype=float) @ self._factor.T

    def inv_sqrt_apply(self, u: np.ndarray) -> np.ndarray:
        """L^{-T} u over the last axis, so that ||L^{-T} u||_M = ||u||."""
        u = np.asarray(u, dtype=float)
        w = solve_triangular(self._factor.T, u.reshape(-1, self.dim).T, lower=False)
        return w.T.reshape(u.shape)

    def __repr__(self) -> str:
        return f"SpdMatrix(dim={self.dim}, log_det={self._log_det:.6g})"

    def __reduce__(self):
        return (SpdMatrix, (np.array(self._entries), np.array(self._factor)))


def spd_factor(m) -> SpdMatrix:
    """Validates symmetry and factors m, naming the failing pivot on error."""
    a = np.atleast_2d(np.asarray(m, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch("square matrix", a.shape[0], a.shape[-1])

    scale = float(np.max(np.abs(a))) if a.size else 0.0
    deviation = np.abs(a - a.T)
    if scale > 0 and deviation.max() > SYMMETRY_RTOL * scale:
        i, j = np.unravel_index(int(np.argmax(deviation)), deviation.shape)
        raise NotSymmetric(int(i), int(j), float(deviation[i, j]))

    sym = 0.5 * (a + a.T)
    factor, info = lapack.dpotrf(sym, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefinite(info - 1)
    if info < 0:
        raise ValueError(f"illegal argument {-info} passed to dpotrf")

    threshold = PIVOT_RTOL * float(np.max(np.diag(sym)))
    squared_pivots = np.diag(factor) ** 2
    bad = np.flatnonzero(squared_pivots <= threshold)
    if bad.size:
        raise NotPositiveDefinite(int(bad[0]), float(squared_pivots[bad[0]]))
    return SpdMatrix(np.ascontiguousarray(sym), np.ascontiguousarray(factor))


def as_spd(m) -> SpdMatrix:
    return m if isinstance(m, SpdMatrix) else spd_factor(m)


def gaussian_log_pdf(y, mean, cov: SpdMatrix):
    """Log N(y; mean, cov); y and mean broadcast over leading axes."""
    y = np.asarray(y, dtype=float)
    mean = np.asarray(mean, dtype=float)
    d = cov.dim
    if y.shape[-1:] != (d,) or mean.shape[-1:] != (d,):
        raise DimensionMismatch("gaussian_log_pdf", d, (y.shape[-1:], mean.shape[-1:]))
    maha = cov.inv_quad_form(y - mean)
    out = -0.5 * (d * LOG_2PI + cov.log_det + maha)
    return float(out) if np.ndim(out) == 0 else out


def mahalanobis_norm(y, r: SpdMatrix):
    """sqrt(y^T R y) over the last axis of y."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1:] != (r.dim,):
        raise DimensionMismatch("mahalanobis_norm", r.dim, y.shape[-1:])
    out = np.sqrt(np.maximum(r.quad_form(y), 0.0))
    return float(out) if np.ndim(out) == 0 else out


def log_sphere_surface_area(d_y: int, r: SpdMatrix) -> float:
    if r.dim != d_y:
        raise DimensionMismatch("sphere_surface_area R", d_y, r.dim)
    return 0.5 * r.log_det + math.log(2.0) + 0.5 * d_y * math.log(math.pi) - float(gammaln(0.5 * d_y))


def sphere_surface_area(d_y: int, r: SpdMatrix) -> float:
    """|R|^{1/2} times the surface area of the unit sphere in R^{d_y}."""
    return math.exp(log_sphere_surface_area(d_y, r))


def eigen_extremes(m: SpdMatrix) -> Tuple[float, float]:
    eigenvalues = np.linalg.eigvalsh(m.entries)
    return float(eigenvalues[-1]), float(eigenvalues[0])
