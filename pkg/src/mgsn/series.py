"""Truncated evaluation of the compound-geometric Gaussian series.

Both the univariate and the d-variate densities are mixtures

    f(x) = sum_{k>=1} p (1-p)^(k-1) phi_d(x; k mu, k Sigma)

and the EM weights are ratios of the same sums.  All of them go through
:func:`log_terms`, so one truncation policy governs every series.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .linalg import LOG_2PI, CholFactor

PAPER_TERMS = 50


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for the infinite series.

    Terms are added in blocks until a rigorous bound on the remaining mass
    falls below ``rel_tol`` times the running sum (per row), or ``k_max``
    terms have been used.  ``paper_mode`` uses exactly 50 terms with no
    early stop.
    """

    k_max: int = 10_000
    rel_tol: float = 1e-12
    paper_mode: bool = False

    def __post_init__(self):
        if int(self.k_max) < 1:
            raise InvalidParameter("k_max must be >= 1")
        if not 0.0 < self.rel_tol < 1.0:
            raise InvalidParameter("rel_tol must lie in (0, 1)")


DEFAULT_SERIES = SeriesControl()
PAPER_SERIES = SeriesControl(paper_mode=True)

_FIRST_BLOCK = 64


def _block(z0, m, logdet, p, k):
    """Log terms for the integer array ``k`` at whitened points ``z0``."""
    d = z0.shape[1]
    r = z0[:, None, :] - k[None, :, None] * m[None, None, :]
    q = np.einsum("nkd,nkd->nk", r, r) / k[None, :]
    if p < 1.0:
        lw = np.log(p) + (k - 1) * np.log1p(-p)
    else:
        lw = np.where(k == 1, 0.0, -np.inf)
    return lw[None, :] - 0.5 * d * LOG_2PI - 0.5 * logdet - 0.5 * d * np.log(k)[None, :] - 0.5 * q


def log_terms(x, p: float, mu, chol: CholFactor, ctl: SeriesControl = DEFAULT_SERIES):
    """Return ``(terms, k)`` for rows of ``x``.

    ``terms[i, j]`` is ln[p (1-p)^(k_j - 1) phi_d(x_i; k_j mu, k_j Sigma)] and
    ``k`` is the integer array 1..K actually used.  For ``p == 1`` a single
    term is returned.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    mu = np.asarray(mu, dtype=float)
    d = x.shape[1]
    z0 = chol.solve_lower(x.T).T
    m = chol.solve_lower(mu)

    if p >= 1.0:
        k = np.ones(1)
        return _block(z0, m, chol.logdet, 1.0, k), k
    if ctl.paper_mode:
        k = np.arange(1, PAPER_TERMS + 1, dtype=float)
        return _block(z0, m, chol.logdet, p, k), k

    k_max = int(ctl.k_max)
    log_q = np.log1p(-p)
    log_tol = np.log(ctl.rel_tol)
    mm = float(m @ m)
    zm = z0 @ m
    log_r = log_q - 0.5 * mm
    blocks = []
    running = None
    start, size = 1, _FIRST_BLOCK
    while start <= k_max:
        stop = min(start + size - 1, k_max)
        k = np.arange(start, stop + 1, dtype=float)
        t = _block(z0, m, chol.logdet, p, k)
        blocks.append(t)
        bm = np.max(t, axis=1)
        with np.errstate(divide="ignore"):
            blk = bm + np.log(np.sum(np.exp(t - np.where(np.isfinite(bm), bm, 0.0)[:, None]), axis=1))
        running = blk if running is None else np.logaddexp(running, blk)
        # Two bounds on the mass beyond K, using phi_d(x; j mu, j Sigma) <=
        # C j^(-d/2) exp(-q_j / 2) with q_j >= j|m|^2 - 2 z.m:
        #   (1-p)^K C (K+1)^(-d/2)                                  (mode bound)
        #   p C (K+1)^(-d/2) e^(z.m - |m|^2/2) r^K / (1 - r),  r = (1-p) e^(-|m|^2/2)
        log_c = -0.5 * d * LOG_2PI - 0.5 * chol.logdet - 0.5 * d * np.log(stop + 1.0)
        tail = stop * log_q + log_c
        if mm > 0:
            tail2 = np.log(p) + log_c + zm - 0.5 * mm + stop * log_r - np.log(-np.expm1(log_r))
            tail = np.minimum(tail, tail2)
        if np.all(tail < running + log_tol):
            break
        start = stop + 1
        size *= 2
    t = np.concatenate(blocks, axis=1)
    return t, np.arange(1, t.shape[1] + 1, dtype=float)
