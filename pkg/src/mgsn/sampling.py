"""Reproducible samplers for GE(p), MGSN_d and its two decompositions.

Every sampler draws from an :class:`RngStream`, a (seed, stream_id) pair
mapped onto numpy's PCG64 through ``SeedSequence``.  The same pair gives
the same draws on every platform for a given numpy version; distinct
stream ids give independent streams.
"""
from __future__ import annotations

import math

import numpy as np

from .distribution import MgsnParams
from .errors import InvalidParameter

RNG_ALGORITHM = f"numpy.random.PCG64 via SeedSequence(seed, spawn_key=(stream_id,)), numpy {np.__version__}"

_U64 = 2**64


class RngStream:
    """A single-owner random stream identified by ``(seed, stream_id)``."""

    def __init__(self, seed: int, stream_id: int = 0):
        if not (0 <= int(seed) < _U64 and 0 <= int(stream_id) < _U64):
            raise InvalidParameter("seed and stream_id must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def uniform_open0(self, size=None):
        """Uniform draws on (0, 1]."""
        return 1.0 - self.generator.random(size)


def sample_geometric(rng: RngStream, p: float, size=None):
    """Draw N with P(N = n) = p (1-p)^(n-1), n >= 1, by inversion."""
    if not 0.0 < p <= 1.0:
        raise InvalidParameter(f"p must lie in (0, 1], got {p}")
    if p == 1.0:
        return 1 if size is None else np.ones(size, dtype=np.int64)
    u = rng.uniform_open0(size)
    n = np.floor(np.log(u) / np.log1p(-p)).astype(np.int64) + 1
    return int(n) if size is None else n


def _gaussian_sums(rng: RngStream, params: MgsnParams, counts):
    """Rows distributed N_d(c mu, c Sigma) for each count c."""
    counts = np.asarray(counts, dtype=float)
    z = rng.generator.standard_normal((counts.size, params.dim))
    return counts[:, None] * params.mu[None, :] + np.sqrt(counts)[:, None] * (z @ params.chol.lower.T)


def sample_mgsn(rng: RngStream, params: MgsnParams, n: int) -> np.ndarray:
    """n x d matrix of i.i.d. draws: N ~ GE(p), then X | N ~ N_d(N mu, N Sigma)."""
    if n < 1:
        raise InvalidParameter("n must be positive")
    counts = sample_geometric(rng, params.p, n)
    return _gaussian_sums(rng, params, counts)


def _logarithmic_cdf(p: float, upto: float):
    """Cumulative LD(p) probabilities until they exceed ``upto``."""
    lam = -math.log(p)
    log_q = math.log1p(-p)
    cdf = []
    total = 0.0
    k = 0
    while total < upto:
        k += 1
        step = math.exp(k * log_q - math.log(lam * k))
        if total + step == total:
            break
        total += step
        cdf.append(total)
    return np.asarray(cdf)


def sample_logarithmic(rng: RngStream, p: float, size=None):
    """Draw Z with P(Z = k) = (1-p)^k / (-ln(p) k), k >= 1."""
    if not 0.0 < p < 1.0:
        raise InvalidParameter(f"p must lie in (0, 1), got {p}")
    u = rng.generator.random(size)
    cdf = _logarithmic_cdf(p, float(np.max(u)))
    z = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1) + 1
    return int(z) if size is None else z.astype(np.int64)


def sample_negbin_real(rng: RngStream, r: float, p: float, size=None):
    """Draw T with MGF ((1-p) / (1 - p e^t))^r for real r > 0.

    Implemented as a Poisson(L) draw with L ~ Gamma(shape r, scale p/(1-p)).
    """
    if not r > 0:
        raise InvalidParameter("r must be positive")
    if not 0.0 < p < 1.0:
        raise InvalidParameter(f"p must lie in (0, 1), got {p}")
    lam = rng.generator.gamma(r, p / (1.0 - p), size)
    t = rng.generator.poisson(lam)
    return int(t) if size is None else t.astype(np.int64)


def sample_decomp1(rng: RngStream, params: MgsnParams, n_parts: int, size=None):
    """Infinitely-divisible representation with ``n_parts`` i.i.d. pieces.

    Piece k is a sum of 1 + n_parts*T_k Gaussians N_d(mu/n_parts, Sigma/n_parts)
    with T_k negative binomial of index 1/n_parts, whose MGF is
    (p / (1 - (1-p) e^t))^(1/n_parts); each piece then has MGF M_X^(1/n_parts).
    """
    if params.p >= 1.0:
        raise InvalidParameter("decomposition requires p < 1")
    if n_parts < 1:
        raise InvalidParameter("n_parts must be positive")
    m = 1 if size is None else int(size)
    r = 1.0 / n_parts
    piece = params.replace(mu=r * params.mu, sigma=r * params.sigma)
    out = np.zeros((m, params.dim))
    for _ in range(n_parts):
        t = sample_negbin_real(rng, r, 1.0 - params.p, m)
        out += _gaussian_sums(rng, piece, 1 + n_parts * t)
    return out[0] if size is None else out


def sample_decomp2(rng: RngStream, params: MgsnParams, size=None):
    """Gaussian plus a Poisson(-ln p) number of logarithmic-count Gaussian sums."""
    if params.p >= 1.0:
        raise InvalidParameter("decomposition requires p < 1")
    m = 1 if size is None else int(size)
    g = rng.generator
    out = _gaussian_sums(rng, params, np.ones(m))
    q = g.poisson(-math.log(params.p), m)
    total = int(q.sum())
    if total:
        z = sample_logarithmic(rng, params.p, total)
        y = _gaussian_sums(rng, params, z)
        owner = np.repeat(np.arange(m), q)
        np.add.at(out, owner, y)
    return out[0] if size is None else out


def sample_geometric_sum(rng: RngStream, draw, alpha: float, n: int) -> np.ndarray:
    """Sum a GE(alpha) number of draws from ``draw(k) -> (k, d)`` per row."""
    m = sample_geometric(rng, alpha, n)
    x = draw(int(m.sum()))
    owner = np.repeat(np.arange(n), m)
    out = np.zeros((n, x.shape[1]))
    np.add.at(out, owner, x)
    return out
