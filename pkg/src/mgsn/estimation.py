"""Maximum likelihood fitting of MGSN_d by EM and profile likelihood over p.

For fixed p the latent geometric count N is treated as missing data.  The
E-step needs only a_i = E(N | x_i) and b_i = E(1/N | x_i); the M-step is
then closed form.  p itself is chosen by maximizing the profile
log-likelihood l(p, mu(p), Sigma(p)) over a grid, optionally refined by a
golden-section search inside the best grid cell.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distribution import MgsnParams, cond_n, mgsn_logpdf
from .errors import DegenerateUpdate, DimensionMismatch, InvalidParameter, MgsnError, NotPositiveDefinite
from .linalg import cholesky, sym_matrix
from .series import DEFAULT_SERIES, SeriesControl

log = logging.getLogger(__name__)

CONSTRAINTS = ("none", "mu_zero", "diag_sigma", "normal_p1")
PAPER_ITERATIONS = 20


@dataclass(frozen=True)
class DataMatrix:
    """An n x d observation matrix with column labels."""

    values: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise DimensionMismatch("data must be two-dimensional")
        if v.shape[0] < 2:
            raise InvalidParameter("need at least two observations")
        if not np.all(np.isfinite(v)):
            raise InvalidParameter("data contains missing or non-finite entries")
        labels = tuple(self.labels) or tuple(f"x{j + 1}" for j in range(v.shape[1]))
        if len(labels) != v.shape[1]:
            raise DimensionMismatch("one label per column is required")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def scaled(self, c: float) -> "DataMatrix":
        return DataMatrix(self.values * c, self.labels)


def as_data(data) -> DataMatrix:
    return data if isinstance(data, DataMatrix) else DataMatrix(np.asarray(data, dtype=float))


@dataclass(frozen=True)
class EmControl:
    """EM stopping rule and degeneracy guard.

    Iteration stops when the relative change of the observed log-likelihood
    falls below ``rel_tol`` or after ``max_iter`` M-steps.  ``paper_mode``
    runs exactly 20 M-steps with no convergence test, and the profile then
    starts every grid point from the sample moments instead of warm
    starting.  ``jitter`` is the first diagonal loading (relative to
    trace/d) tried when an update is not positive definite; it grows by 10x
    up to 1e-4.
    """

    max_iter: int = 500
    rel_tol: float = 1e-8
    jitter: float = 1e-10
    paper_mode: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise InvalidParameter("max_iter must be >= 1")


DEFAULT_EM = EmControl()
PAPER_EM = EmControl(paper_mode=True)


@dataclass(frozen=True)
class FitResult:
    params: MgsnParams
    loglik: float
    n_iter: int
    converged: bool
    constraint: str = "none"
    profile_trace: tuple = ()
    loglik_trace: tuple = ()
    failures: tuple = ()

    @property
    def p(self) -> float:
        return self.params.p

    def trace_array(self) -> np.ndarray:
        return np.asarray(self.profile_trace, dtype=float).reshape(-1, 2)


@dataclass(frozen=True)
class EStep:
    a: np.ndarray
    b: np.ndarray
    loglik: float


def observed_loglik(data, params: MgsnParams, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    x = as_data(data).values
    if x.shape[1] != params.dim:
        raise DimensionMismatch("data and parameters differ in dimension")
    return float(np.sum(mgsn_logpdf(x, params, ctl)))


def em_e_step(data, params: MgsnParams, ctl: SeriesControl = DEFAULT_SERIES) -> EStep:
    """Conditional moments a_i = E(N|x_i), b_i = E(1/N|x_i) at ``params``.

    The observed log-likelihood at ``params`` falls out of the same series
    and is returned alongside.
    """
    x = as_data(data).values
    c = cond_n(x, params, ctl)
    return EStep(a=c.mean, b=c.inv_mean, loglik=float(np.sum(c.logpdf)))


_PIVOT_FLOOR = 1e-13


def _with_jitter(sigma, jitter, iteration=None):
    base = max(float(np.trace(sigma)) / sigma.shape[0], np.finfo(float).tiny)
    try:
        cholesky(sigma, rel_pivot=_PIVOT_FLOOR)
        return sigma
    except NotPositiveDefinite:
        pass
    eps = max(jitter, 1e-10)
    while eps <= 1e-4 * (1 + 1e-9):
        s = sigma + eps * base * np.eye(sigma.shape[0])
        try:
            cholesky(s, rel_pivot=_PIVOT_FLOOR)
            log.debug("M-step covariance needed jitter %.1e", eps)
            return s
        except NotPositiveDefinite:
            eps *= 10.0
    raise DegenerateUpdate(
        f"covariance update is not positive definite (iteration {iteration})", iteration=iteration
    )


def check_rank(data, constraint: str = "none"):
    """Raise DegenerateUpdate when no positive definite covariance update exists.

    Jitter only repairs rounding; a scatter matrix that is singular for
    structural reasons (n <= d, collinear columns) makes the likelihood
    unbounded.
    """
    x = as_data(data).values
    if constraint == "mu_zero":
        r = np.linalg.matrix_rank(x)
        full = r == x.shape[1]
    elif constraint == "diag_sigma":
        full = bool(np.all(np.ptp(x, axis=0) > 0))
        r = None
    else:
        r = np.linalg.matrix_rank(x - x.mean(axis=0))
        full = r == x.shape[1]
    if not full:
        raise DegenerateUpdate(
            f"data (n = {x.shape[0]}, d = {x.shape[1]}) cannot support a positive definite "
            f"covariance under constraint {constraint!r}",
            iteration=0,
        )


def em_m_step(data, a, b, constraint: str = "none", jitter: float = 1e-10, iteration=None):
    """Closed-form maximizer of the expected complete-data log-likelihood.

    Returns ``(mu, sigma)``.  ``constraint`` is ``"none"``, ``"mu_zero"``
    (mu pinned at 0) or ``"diag_sigma"`` (Sigma restricted to its diagonal).
    """
    x = as_data(data).values
    n, d = x.shape
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    sa = float(np.sum(a))
    if not sa > 0:
        raise InvalidParameter("sum of E(N|x) weights must be positive")
    s = x.sum(axis=0)
    bxx = (b[:, None] * x).T @ x
    if constraint == "mu_zero":
        mu = np.zeros(d)
        sigma = bxx / n
    else:
        mu = s / sa
        sigma = (bxx - np.outer(s, mu) - np.outer(mu, s) + sa * np.outer(mu, mu)) / n
    sigma = sym_matrix(sigma, check=False)
    if constraint == "diag_sigma":
        sigma = np.diag(np.diag(sigma))
    elif constraint not in ("none", "mu_zero"):
        raise InvalidParameter(f"unknown constraint {constraint!r}")
    return mu, _with_jitter(sigma, jitter, iteration)


def default_init(data, constraint: str = "none", p: float = 1.0, method: str = "sample"):
    """Starting (mu, sigma): the p = 1 maximum likelihood estimate.

    ``method="moments"`` instead inverts the moment relation at ``p``
    (mu = p xbar, Sigma = p S - p(1-p) xbar xbar^T), falling back to the
    sample moments when that Sigma is not positive definite.
    """
    x = as_data(data)
    ones = np.ones(x.n)
    mu, sigma = em_m_step(x, ones, ones, "none" if constraint == "normal_p1" else constraint)
    if method == "moments" and constraint == "none" and p < 1.0:
        mm = p * mu
        ss = p * sigma - p * (1 - p) * np.outer(mu, mu)
        try:
            cholesky(ss)
            return mm, ss
        except NotPositiveDefinite:
            pass
    elif method not in ("sample", "moments"):
        raise InvalidParameter(f"unknown init method {method!r}")
    return mu, sigma


def fit_normal(data) -> FitResult:
    """Closed-form Gaussian fit (the p = 1 model)."""
    x = as_data(data)
    check_rank(x)
    mu, sigma = default_init(x)
    params = MgsnParams(1.0, mu, sigma)
    ll = observed_loglik(x, params)
    return FitResult(params, ll, 1, True, "normal_p1", loglik_trace=(ll,))


def em_fit_fixed_p(
    data,
    p: float,
    init: Optional[tuple] = None,
    ctl: EmControl = DEFAULT_EM,
    sctl: SeriesControl = DEFAULT_SERIES,
    constraint: str = "none",
    init_method: str = "sample",
) -> FitResult:
    """EM estimates of (mu, Sigma) for known p.

    ``init`` is an optional ``(mu, sigma)`` starting point; by default the
    sample mean and covariance are used (adapted to the constraint).
    """
    x = as_data(data)
    if constraint not in ("none", "mu_zero", "diag_sigma"):
        raise InvalidParameter(f"unknown constraint {constraint!r}")
    if not 0.0 < p <= 1.0:
        raise InvalidParameter(f"p must lie in (0, 1], got {p}")
    check_rank(x, constraint)
    if p == 1.0:
        ones = np.ones(x.n)
        mu, sigma = em_m_step(x, ones, ones, constraint, ctl.jitter, 1)
        params = MgsnParams(1.0, mu, sigma)
        ll = observed_loglik(x, params, sctl)
        return FitResult(params, ll, 1, True, constraint, loglik_trace=(ll,))

    if init is None:
        mu, sigma = default_init(x, constraint, p, init_method)
    else:
        mu, sigma = init
        mu = np.zeros(x.d) if constraint == "mu_zero" else np.asarray(mu, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        if constraint == "diag_sigma":
            sigma = np.diag(np.diag(sigma))
    params = MgsnParams(p, mu, _with_jitter(sym_matrix(sigma, check=False), ctl.jitter, 0))

    trace = []
    converged = False
    n_iter = 0
    while True:
        e = em_e_step(x, params, sctl)
        trace.append(e.loglik)
        if ctl.paper_mode:
            if n_iter >= PAPER_ITERATIONS:
                break
        else:
            if n_iter > 0 and abs(trace[-1] - trace[-2]) <= ctl.rel_tol * abs(trace[-2]):
                converged = True
                break
            if n_iter >= ctl.max_iter:
                break
        n_iter += 1
        mu, sigma = em_m_step(x, e.a, e.b, constraint, ctl.jitter, n_iter)
        params = MgsnParams(p, mu, sigma)
    return FitResult(params, trace[-1], n_iter, converged or ctl.paper_mode, constraint, loglik_trace=tuple(trace))


def em_fit_mu_zero(data, p, ctl: EmControl = DEFAULT_EM, sctl: SeriesControl = DEFAULT_SERIES, init=None):
    return em_fit_fixed_p(data, p, init, ctl, sctl, constraint="mu_zero")


def em_fit_diag(data, p, ctl: EmControl = DEFAULT_EM, sctl: SeriesControl = DEFAULT_SERIES, init=None):
    return em_fit_fixed_p(data, p, init, ctl, sctl, constraint="diag_sigma")


def default_grid() -> np.ndarray:
    return np.round(np.arange(1, 51) * 0.02, 10)


def _golden(f, lo, hi, tol):
    """Golden-section search for a maximum of f on [lo, hi]; f keeps its own record."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)


def profile_fit(
    data,
    grid: Optional[Sequence[float]] = None,
    ctl: EmControl = DEFAULT_EM,
    sctl: SeriesControl = DEFAULT_SERIES,
    constraint: str = "none",
    refine: bool = True,
    refine_tol: float = 1e-4,
) -> FitResult:
    """Maximize the profile log-likelihood over p.

    Grid points are visited in increasing order, each EM run warm-started
    from the previous solution (cold-started from the sample moments in
    paper mode).  Failed grid points are logged and skipped.  Unless in
    paper mode, a golden-section search refines p inside the best cell.
    """
    x = as_data(data)
    grid = default_grid() if grid is None else np.asarray(sorted(set(float(g) for g in grid)))
    if grid.size == 0 or grid[0] <= 0 or grid[-1] > 1:
        raise InvalidParameter("grid must be a nonempty subset of (0, 1]")
    check_rank(x, constraint)
    fits = {}
    failures = []
    prev = None
    for p in grid:
        init = None if ctl.paper_mode or prev is None else (prev.params.mu, prev.params.sigma)
        try:
            fit = em_fit_fixed_p(x, float(p), init, ctl, sctl, constraint)
        except MgsnError as exc:
            log.warning("profile point p=%g failed: %s", p, exc)
            failures.append((float(p), str(exc)))
            continue
        fits[float(p)] = fit
        if fit.p < 1.0:
            prev = fit
    if not fits:
        raise DegenerateUpdate("every profile grid point failed")

    keys = sorted(fits)
    best_p = max(keys, key=lambda q: fits[q].loglik)
    if refine and not ctl.paper_mode and len(keys) > 1:
        i = keys.index(best_p)
        lo = keys[i - 1] if i > 0 else best_p
        hi = keys[i + 1] if i + 1 < len(keys) else best_p
        start = fits[best_p] if best_p < 1.0 else fits[lo]
        warm = (start.params.mu, start.params.sigma)

        def f(q):
            q = float(q)
            if q not in fits:
                try:
                    fits[q] = em_fit_fixed_p(x, q, warm, ctl, sctl, constraint)
                except MgsnError as exc:
                    failures.append((q, str(exc)))
                    return -np.inf
            return fits[q].loglik

        if hi > lo:
            _golden(f, lo, hi, refine_tol)
        best_p = max(fits, key=lambda q: fits[q].loglik)

    best = fits[best_p]
    trace = tuple((q, fits[q].loglik) for q in sorted(fits))
    return FitResult(
        best.params,
        best.loglik,
        best.n_iter,
        best.converged,
        constraint,
        profile_trace=trace,
        loglik_trace=best.loglik_trace,
        failures=tuple(failures),
    )
