"""The d-variate geometric skew-normal distribution MGSN_d(p, mu, Sigma).

X = X_1 + ... + X_N with X_i i.i.d. N_d(mu, Sigma) and N ~ GE(p)
independent of them.  The density, the E-step weights E(N | X = x) and
E(1/N | X = x) all come from the same truncated log-space series (see
:mod:`mgsn.series`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadIndexSet,
    DimensionMismatch,
    InvalidParameter,
    NotPositiveDefinite,
    OutsideDomain,
    RankDeficient,
    SeriesUnderflow,
)
from .gsn import GsnParams
from .linalg import CholFactor, cholesky, logsumexp, mvn_logpdf, sym_matrix
from .series import DEFAULT_SERIES, SeriesControl, log_terms


@dataclass(frozen=True, eq=False)
class MgsnParams:
    """Parameters (p, mu, Sigma) of MGSN_d.

    ``sigma`` is symmetrized on construction and must be positive definite.
    """

    p: float
    mu: np.ndarray
    sigma: np.ndarray
    chol: CholFactor = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p = float(self.p)
        if not 0.0 < p <= 1.0:
            raise InvalidParameter(f"p must lie in (0, 1], got {self.p}")
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float)).copy()
        sigma = sym_matrix(self.sigma)
        if mu.ndim != 1 or sigma.shape != (mu.size, mu.size):
            raise DimensionMismatch(f"mu has length {mu.size} but sigma is {sigma.shape}")
        chol = cholesky(sigma)
        mu.flags.writeable = False
        sigma.flags.writeable = False
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "chol", chol)

    @property
    def dim(self) -> int:
        return self.mu.size

    def __eq__(self, other):
        if not isinstance(other, MgsnParams):
            return NotImplemented
        return (
            self.p == other.p
            and np.array_equal(self.mu, other.mu)
            and np.array_equal(self.sigma, other.sigma)
        )

    def replace(self, **kw) -> "MgsnParams":
        args = dict(p=self.p, mu=self.mu, sigma=self.sigma)
        args.update(kw)
        return MgsnParams(**args)


@dataclass(frozen=True)
class MomentSummary:
    mean: np.ndarray
    covariance: np.ndarray
    correlation: np.ndarray
    mardia_beta1: float


def _rows(x, d):
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    x2 = np.atleast_2d(x) if x.ndim else x.reshape(1, 1)
    if x2.shape[-1] != d or x2.ndim != 2:
        raise DimensionMismatch(f"points of dimension {x2.shape[-1]} for a {d}-variate law")
    return x2, single


def mgsn_logpdf(x, params: MgsnParams, ctl: SeriesControl = DEFAULT_SERIES):
    """Log density at a d-vector (returns a float) or an (n, d) batch."""
    xs, single = _rows(x, params.dim)
    if params.p == 1.0:
        out = np.atleast_1d(mvn_logpdf(xs, params.mu, params.chol))
    else:
        t, _ = log_terms(xs, params.p, params.mu, params.chol, ctl)
        out = np.atleast_1d(logsumexp(t, axis=1))
    return float(out[0]) if single else out


def mgsn_pdf(x, params: MgsnParams, ctl: SeriesControl = DEFAULT_SERIES):
    return np.exp(mgsn_logpdf(x, params, ctl))


@dataclass(frozen=True)
class CondN:
    """Per-row latent-count summaries from one shared series evaluation."""

    mean: np.ndarray  # E(N | X = x), >= 1
    inv_mean: np.ndarray  # E(1/N | X = x), in (0, 1]
    logpdf: np.ndarray


def cond_n(x, params: MgsnParams, ctl: SeriesControl = DEFAULT_SERIES) -> CondN:
    """E(N | X=x), E(1/N | X=x) and ln f(x) for each row of ``x``.

    Raises :class:`SeriesUnderflow` (with the offending row indices) when all
    retained terms of some row are ``-inf``.
    """
    xs, _ = _rows(x, params.dim)
    n = xs.shape[0]
    if params.p == 1.0:
        lp = np.atleast_1d(mvn_logpdf(xs, params.mu, params.chol))
        return CondN(np.ones(n), np.ones(n), lp)
    t, k = log_terms(xs, params.p, params.mu, params.chol, ctl)
    lse = np.atleast_1d(logsumexp(t, axis=1))
    bad = np.flatnonzero(~np.isfinite(lse))
    if bad.size:
        raise SeriesUnderflow(f"density series underflowed at rows {bad.tolist()}", rows=bad)
    logk = np.log(k)[None, :]
    a = np.exp(np.atleast_1d(logsumexp(t + logk, axis=1)) - lse)
    b = np.exp(np.atleast_1d(logsumexp(t - logk, axis=1)) - lse)
    return CondN(np.maximum(a, 1.0), np.minimum(b, 1.0), lse)


def cond_n_mean(x, params: MgsnParams, ctl: SeriesControl = DEFAULT_SERIES):
    c = cond_n(x, params, ctl)
    return float(c.mean[0]) if np.ndim(x) <= 1 else c.mean


def cond_n_inv_mean(x, params: MgsnParams, ctl: SeriesControl = DEFAULT_SERIES):
    c = cond_n(x, params, ctl)
    return float(c.inv_mean[0]) if np.ndim(x) <= 1 else c.inv_mean


def _exponent(t, params: MgsnParams) -> float:
    t = np.asarray(t, dtype=float)
    if t.shape != (params.dim,):
        raise DimensionMismatch("t does not match the dimension")
    return float(params.mu @ t + 0.5 * t @ params.sigma @ t)


def mgsn_mgf(t, params: MgsnParams) -> float:
    """E[exp(t'X)]; raises :class:`OutsideDomain` where the series diverges."""
    g = _exponent(t, params)
    if params.p == 1.0:
        return math.exp(g)
    if g + math.log1p(-params.p) >= 0.0:
        raise OutsideDomain("t is outside the MGF domain")
    e = math.exp(g)
    return params.p * e / (1.0 - (1.0 - params.p) * e)


def moment_relation(params: MgsnParams):
    """Mean vector and dispersion matrix of X.

    Returns ``(mean, dispersion)`` with ``p * mean = mu`` and
    ``p^2 * dispersion = p Sigma + (1-p) mu mu^T``.
    """
    p, mu = params.p, params.mu
    mean = mu / p
    disp = (p * params.sigma + (1.0 - p) * np.outer(mu, mu)) / p**2
    return mean, sym_matrix(disp, check=False)


def params_from_moments(mean, dispersion, p: float) -> MgsnParams:
    """Invert :func:`moment_relation`: mu = p m, Sigma = p S - p(1-p) m m^T."""
    m = np.asarray(mean, dtype=float)
    s = np.asarray(dispersion, dtype=float)
    return MgsnParams(p, p * m, p * s - p * (1.0 - p) * np.outer(m, m))


def third_central_moments(params: MgsnParams) -> np.ndarray:
    """Array ``T[l, h, m] = E[(X_l - EX_l)(X_h - EX_h)(X_m - EX_m)]``."""
    p, mu, s = params.p, params.mu, params.sigma
    cubic = np.einsum("h,l,m->lhm", mu, mu, mu)
    mixed = (
        np.einsum("m,hl->lhm", mu, s)
        + np.einsum("l,hm->lhm", mu, s)
        + np.einsum("h,lm->lhm", mu, s)
    )
    return (p * (1 - p) * (2 - p) * cubic + p * p * (1 - p) * mixed) / p**4


def mardia_beta1(params: MgsnParams) -> float:
    _, disp = moment_relation(params)
    w = cholesky(disp).inverse()
    t3 = third_central_moments(params)
    return float(np.einsum("ra,sb,tc,rst,abc->", w, w, w, t3, t3))


def mgsn_moments(params: MgsnParams) -> MomentSummary:
    mean, cov = moment_relation(params)
    sd = np.sqrt(np.diag(cov))
    corr = cov / np.outer(sd, sd)
    np.fill_diagonal(corr, 1.0)
    corr = np.clip(corr, -1.0, 1.0)
    return MomentSummary(mean=mean, covariance=cov, correlation=corr, mardia_beta1=mardia_beta1(params))


def marginal(params: MgsnParams, indices) -> MgsnParams:
    """Law of the sub-vector X[indices] (0-based, strictly increasing)."""
    idx = np.asarray(indices, dtype=int).ravel()
    if idx.size == 0 or np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= params.dim:
        raise BadIndexSet(f"bad index set {list(indices)} for dimension {params.dim}")
    return MgsnParams(params.p, params.mu[idx], params.sigma[np.ix_(idx, idx)])


def affine(params: MgsnParams, D) -> MgsnParams:
    """Law of D X for an s x d matrix D of full row rank."""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    if D.shape[1] != params.dim:
        raise DimensionMismatch(f"D has {D.shape[1]} columns, expected {params.dim}")
    s = D @ params.sigma @ D.T
    try:
        cholesky(s, rel_pivot=1e-12)
    except NotPositiveDefinite:
        raise RankDeficient("D Sigma D^T is not positive definite") from None
    return MgsnParams(params.p, D @ params.mu, s)


def projection(params: MgsnParams, c) -> GsnParams:
    """GSN law of the scalar projection c^T X."""
    proj = affine(params, np.asarray(c, dtype=float).reshape(1, -1))
    return GsnParams(mu=float(proj.mu[0]), sigma=math.sqrt(proj.sigma[0, 0]), p=params.p)


def canonical_corr(params: MgsnParams, h: int) -> float:
    """Largest canonical correlation between X[:h] and X[h:].

    Uses only Sigma; the location vector is ignored.
    """
    d = params.dim
    if not 1 <= h < d:
        raise BadIndexSet(f"split index {h} must satisfy 1 <= h < {d}")
    s = params.sigma
    l1 = cholesky(s[:h, :h])
    l2 = cholesky(s[h:, h:])
    # M = L1^{-1} S12 L2^{-T}; its singular values are the canonical correlations
    m = l1.solve_lower(l2.solve_lower(s[:h, h:].T).T)
    ev = np.linalg.eigvalsh(m @ m.T if h <= d - h else m.T @ m)
    return float(min(1.0, math.sqrt(max(ev[-1], 0.0))))


def mtp2_holds(params: MgsnParams, tol: float = 1e-12) -> bool:
    """True when every off-diagonal entry of Sigma^{-1} is <= ``tol``."""
    prec = params.chol.inverse()
    off = prec[~np.eye(params.dim, dtype=bool)]
    return bool(np.all(off <= tol))


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    std_error: float


def mgsn_cdf_mc(x, params: MgsnParams, seed: int, n_samples: int = 100_000) -> McEstimate:
    """Monte Carlo estimate of P(X <= x) componentwise."""
    from .sampling import RngStream, sample_mgsn

    if n_samples < 1000:
        raise InvalidParameter("n_samples must be at least 1000")
    x = np.asarray(x, dtype=float)
    if x.shape != (params.dim,):
        raise DimensionMismatch("x does not match the dimension")
    draws = sample_mgsn(RngStream(seed), params, n_samples)
    est = float(np.mean(np.all(draws <= x, axis=1)))
    return McEstimate(est, math.sqrt(est * (1.0 - est) / n_samples))
