"""Dense symmetric linear algebra and log-space helpers.

Everything here is a pure function of its inputs.  Cholesky factors are
never repaired: callers that can tolerate near-singular matrices (the EM
M-step) add their own diagonal jitter before calling :func:`cholesky`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, EmptyInput, InvalidParameter, NotPositiveDefinite

LOG_2PI = float(np.log(2.0 * np.pi))
SYM_RTOL = 1e-12


def sym_matrix(m, *, check=True) -> np.ndarray:
    """Return ``m`` as a float symmetric matrix, symmetrized as (M + M^T)/2.

    Raises :class:`InvalidParameter` if ``check`` is set and the asymmetry exceeds the
    relative tolerance ``SYM_RTOL`` (a 1x1 input or scalar is accepted).
    """
    a = np.atleast_2d(np.asarray(m, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if check:
        scale = max(float(np.max(np.abs(a))), np.finfo(float).tiny)
        if np.max(np.abs(a - a.T)) > SYM_RTOL * scale:
            raise InvalidParameter("matrix is not symmetric")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class CholFactor:
    """Lower Cholesky factor ``lower`` of a matrix M with ``logdet = ln|M|``."""

    lower: np.ndarray
    logdet: float

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def solve_lower(self, v):
        """Return L^{-1} v; ``v`` may be (d,) or (d, m)."""
        return solve_triangular(self.lower, v, lower=True, check_finite=False)

    def inverse(self) -> np.ndarray:
        li = self.solve_lower(np.eye(self.dim))
        return li.T @ li


def cholesky(m, rel_pivot: float = 0.0) -> CholFactor:
    """Factor a symmetric positive definite matrix.

    Raises :class:`NotPositiveDefinite` when a pivot is not strictly positive
    or the input contains non-finite entries.  With ``rel_pivot > 0`` a
    squared pivot below ``rel_pivot`` times the largest diagonal entry is
    also rejected, which catches singular matrices that factor only thanks
    to rounding.
    """
    a = sym_matrix(m, check=False)
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    try:
        lower = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    diag = np.diag(lower)
    if not np.all(diag > 0):
        raise NotPositiveDefinite("non-positive pivot")
    if rel_pivot > 0 and np.min(diag) ** 2 <= rel_pivot * np.max(np.diag(a)):
        raise NotPositiveDefinite("numerically singular (pivot below relative floor)")
    return CholFactor(lower=lower, logdet=float(2.0 * np.sum(np.log(diag))))


def quad_form(f: CholFactor, v) -> np.ndarray | float:
    """v^T M^{-1} v for the factored M, via a triangular solve.

    ``v`` may be a single d-vector or an (n, d) batch; a batch returns an
    n-vector.
    """
    v = np.asarray(v, dtype=float)
    d = f.dim
    if v.shape[-1] != d or v.ndim > 2:
        raise DimensionMismatch(f"vector of length {v.shape[-1]} for a {d}x{d} factor")
    z = f.solve_lower(v.T)
    q = np.sum(z * z, axis=0)
    return float(q) if v.ndim == 1 else q


def mvn_logpdf(x, mean, cov) -> np.ndarray | float:
    """Log density of N_d(mean, cov) at ``x`` ((d,) or (n, d))."""
    f = cov if isinstance(cov, CholFactor) else cholesky(cov)
    x = np.asarray(x, dtype=float)
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    if mean.shape != (f.dim,):
        raise DimensionMismatch("mean does not match covariance dimension")
    if x.shape[-1] != f.dim:
        raise DimensionMismatch(f"points of dimension {x.shape[-1]} for a {f.dim}-variate law")
    q = quad_form(f, x - mean)
    return -0.5 * f.dim * LOG_2PI - 0.5 * f.logdet - 0.5 * q


def logsumexp(terms, axis=None):
    """ln(sum(exp(terms))) computed without overflow.

    Shifts by the maximum so that ``logsumexp(t + c) == logsumexp(t) + c``.
    An all ``-inf`` slice returns ``-inf``.
    """
    t = np.asarray(terms, dtype=float)
    if t.size == 0:
        raise EmptyInput("logsumexp of an empty sequence")
    m = np.max(t, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(t - m), axis=axis, keepdims=True)) + m
    out = np.squeeze(out, axis=axis) if axis is not None else out.reshape(())
    return float(out) if np.ndim(out) == 0 else out
