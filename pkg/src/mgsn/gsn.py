"""Univariate geometric skew-normal distribution GSN(mu, sigma, p).

X is the sum of N ~ GE(p) i.i.d. N(mu, sigma^2) variables, so the density
is a geometric mixture of N(k mu, k sigma^2) densities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, OutsideDomain
from .linalg import cholesky, logsumexp
from .series import DEFAULT_SERIES, SeriesControl, log_terms


@dataclass(frozen=True)
class GsnParams:
    mu: float
    sigma: float
    p: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidParameter(f"sigma must be positive, got {self.sigma}")
        if not 0.0 < self.p <= 1.0:
            raise InvalidParameter(f"p must lie in (0, 1], got {self.p}")


@dataclass(frozen=True)
class GsnMoments:
    mean: float
    variance: float
    skewness: float
    kurtosis: float


def gsn_logpdf(x, params: GsnParams, ctl: SeriesControl = DEFAULT_SERIES):
    xs = np.asarray(x, dtype=float)
    chol = cholesky([[params.sigma**2]])
    t, _ = log_terms(xs.reshape(-1, 1), params.p, [params.mu], chol, ctl)
    out = logsumexp(t, axis=1)
    return float(out[0]) if xs.ndim == 0 else np.asarray(out).reshape(xs.shape)


def gsn_pdf(x, params: GsnParams, ctl: SeriesControl = DEFAULT_SERIES):
    """Density of GSN(mu, sigma, p) at scalar or array ``x``."""
    return np.exp(gsn_logpdf(x, params, ctl))


def gsn_mgf(t: float, params: GsnParams) -> float:
    """Moment generating function E[exp(tX)].

    Raises :class:`OutsideDomain` if ``(1-p) exp(mu t + sigma^2 t^2 / 2) >= 1``.
    """
    mu, s2, p = params.mu, params.sigma**2, params.p
    g = mu * t + 0.5 * s2 * t * t
    if p == 1.0:
        return math.exp(g)
    if g + math.log1p(-p) >= 0.0:
        raise OutsideDomain(f"t={t} is outside the MGF domain")
    e = math.exp(g)
    return p * e / (1.0 - (1.0 - p) * e)


def gsn_moments(params: GsnParams) -> GsnMoments:
    """Mean, variance, skewness and (non-excess) kurtosis.

    All four come from derivatives of the cumulant generating function
    ln M(t) at 0.  The kurtosis is kappa_4 / kappa_2^2 + 3, so it equals 3
    in the normal case p = 1.
    """
    mu, s2, p = params.mu, params.sigma**2, params.p
    q = 1.0 - p
    v = s2 * p + mu * mu * q
    skew = q * (mu**3 * (2.0 - p) + 3.0 * mu * s2 * p) / v**1.5
    k4 = q * (mu**4 * (p * p - 6.0 * p + 6.0) - 6.0 * mu * mu * s2 * p * (p - 2.0) + 3.0 * s2 * s2 * p * p)
    return GsnMoments(mean=mu / p, variance=v / p**2, skewness=skew, kurtosis=3.0 + k4 / v**2)
