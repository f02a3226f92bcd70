"""Likelihood ratio tests for normality, symmetry and uncorrelatedness.

============  ===========================  ===========================
test          null model                   limiting law of 2*(l1 - l0)
============  ===========================  ===========================
normality     p = 1 (Gaussian)             1/2 delta_0 + 1/2 chi2(1)
symmetry      mu = 0, p and Sigma free     chi2(d)
diagonal      Sigma diagonal               chi2(d(d+1)/2)
============  ===========================  ===========================
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from .errors import MgsnError
from .estimation import (
    DEFAULT_EM,
    EmControl,
    FitResult,
    as_data,
    em_fit_fixed_p,
    fit_normal,
    profile_fit,
)
from .series import DEFAULT_SERIES, SeriesControl

log = logging.getLogger(__name__)

CLAMP_TOL = 1e-6


class NestingViolation(MgsnError, ArithmeticError):
    """The null fit beat the alternative by more than the clamp tolerance."""


def chi2_sf(x: float, df: int) -> float:
    """P(chi2_df > x), the regularized upper incomplete gamma Q(df/2, x/2)."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 1.0
    return float(gammaincc(0.5 * df, 0.5 * x))


@dataclass(frozen=True)
class TailFunction:
    family: str  # "chi2" or "half_chi2_mix"
    df: int

    def sf(self, x: float) -> float:
        if self.family == "chi2":
            return chi2_sf(x, self.df)
        if self.family == "half_chi2_mix":
            return 1.0 if x <= 0 else 0.5 * chi2_sf(x, self.df)
        raise ValueError(f"unknown family {self.family!r}")

    def __str__(self):
        if self.family == "half_chi2_mix":
            return f"0.5*delta0 + 0.5*chi2({self.df})"
        return f"chi2({self.df})"


@dataclass(frozen=True)
class LrtResult:
    statistic: float
    null_fit: FitResult
    alt_fit: FitResult
    reference: TailFunction
    p_value: float
    name: str = ""


def _statistic(alt: FitResult, null: FitResult) -> float:
    t = 2.0 * (alt.loglik - null.loglik)
    if t < 0:
        if t < -CLAMP_TOL:
            raise NestingViolation(f"null log-likelihood exceeds alternative by {-t / 2:.3g}")
        log.warning("clamping LRT statistic %.3g to 0", t)
        t = 0.0
    return t


def _ensure_nested(x, alt: FitResult, null: FitResult, ctl, sctl) -> FitResult:
    """Re-run the unconstrained EM from the null optimum if it scored higher.

    EM can stop at a local maximum; starting the free model at the null
    solution guarantees, by the ascent property, an alternative at least as
    good as the null.
    """
    if alt.loglik >= null.loglik:
        return alt
    refit = em_fit_fixed_p(x, null.p, (null.params.mu, null.params.sigma), ctl, sctl)
    if refit.loglik > alt.loglik:
        return FitResult(
            refit.params, refit.loglik, refit.n_iter, refit.converged, "none",
            profile_trace=alt.profile_trace, loglik_trace=refit.loglik_trace, failures=alt.failures,
        )
    return alt


def _lrt(data, null_constraint, reference, name, grid, ctl, sctl, alt=None):
    x = as_data(data)
    if alt is None:
        alt = profile_fit(x, grid, ctl, sctl)
    if null_constraint == "normal_p1":
        null = fit_normal(x)
    else:
        null = profile_fit(x, grid, ctl, sctl, constraint=null_constraint)
    alt = _ensure_nested(x, alt, null, ctl, sctl)
    t = _statistic(alt, null)
    return LrtResult(t, null, alt, reference, reference.sf(t), name)


def lrt_normality(data, ctl: EmControl = DEFAULT_EM, sctl: SeriesControl = DEFAULT_SERIES, grid=None, alt=None):
    """Test H0: p = 1 against p < 1."""
    return _lrt(data, "normal_p1", TailFunction("half_chi2_mix", 1), "normality", grid, ctl, sctl, alt)


def lrt_symmetry(data, ctl: EmControl = DEFAULT_EM, sctl: SeriesControl = DEFAULT_SERIES, grid=None, alt=None):
    """Test H0: mu = 0."""
    d = as_data(data).d
    return _lrt(data, "mu_zero", TailFunction("chi2", d), "symmetry", grid, ctl, sctl, alt)


def lrt_diagonal(
    data, ctl: EmControl = DEFAULT_EM, sctl: SeriesControl = DEFAULT_SERIES, grid=None, alt=None, df=None
):
    """Test H0: Sigma is diagonal.

    The reference law defaults to chi2(d(d+1)/2).  The null removes only the
    d(d-1)/2 off-diagonal entries, so that default is conservative; pass
    ``df`` to use another count.
    """
    d = as_data(data).d
    df = d * (d + 1) // 2 if df is None else int(df)
    return _lrt(data, "diag_sigma", TailFunction("chi2", df), "diagonal", grid, ctl, sctl, alt)


TESTS = {"normality": lrt_normality, "symmetry": lrt_symmetry, "diagonal": lrt_diagonal}

