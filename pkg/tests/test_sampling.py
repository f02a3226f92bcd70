import math

import numpy as np
import pytest

from mc import cov_z, mean_z, two_sample_z
from mgsn.datasets import simulation_params
from mgsn.distribution import MgsnParams, moment_relation
from mgsn.errors import InvalidParameter
from mgsn.sampling import (
    RNG_ALGORITHM,
    RngStream,
    sample_decomp1,
    sample_decomp2,
    sample_geometric,
    sample_geometric_sum,
    sample_logarithmic,
    sample_mgsn,
    sample_negbin_real,
)

N = 100_000


def test_stream_determinism_and_independence():
    prm = simulation_params(0.5)
    a = sample_mgsn(RngStream(42, 3), prm, 100)
    b = sample_mgsn(RngStream(42, 3), prm, 100)
    c = sample_mgsn(RngStream(42, 4), prm, 100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    u = RngStream(1, 0).generator.random(200_000)
    v = RngStream(1, 1).generator.random(200_000)
    assert abs(np.corrcoef(u, v)[0, 1]) < 3 / math.sqrt(u.size)
    assert "PCG64" in RNG_ALGORITHM


def test_stream_validation():
    with pytest.raises(InvalidParameter):
        RngStream(-1)
    with pytest.raises(InvalidParameter):
        RngStream(0, 2**64)


def test_uniform_open0_excludes_zero():
    u = RngStream(0).uniform_open0(100_000)
    assert np.all(u > 0) and np.all(u <= 1)


def test_geometric():
    rng = RngStream(5)
    assert sample_geometric(rng, 1.0) == 1
    assert np.all(sample_geometric(rng, 1.0, 10) == 1)
    n = sample_geometric(rng, 0.5, 1_000_000)
    assert n.min() >= 1
    assert abs(n.mean() - 2.0) < 3 * n.std() / 1000
    n = sample_geometric(rng, 0.25, 1_000_000)
    hit = (n == 1).mean()
    assert abs(hit - 0.25) < 3 * math.sqrt(0.25 * 0.75 / n.size)
    assert isinstance(sample_geometric(rng, 0.3), int)
    with pytest.raises(InvalidParameter):
        sample_geometric(rng, 0.0)


def test_geometric_pmf_chi_square():
    from scipy.stats import chisquare

    p = 0.3
    n = sample_geometric(RngStream(8), p, 200_000)
    k = np.arange(1, 21)
    obs = np.array([(n == j).sum() for j in k] + [(n > 20).sum()])
    exp = np.append(p * (1 - p) ** (k - 1), (1 - p) ** 20) * n.size
    assert chisquare(obs, exp).pvalue > 1e-3


def test_logarithmic():
    rng = RngStream(6)
    z = sample_logarithmic(rng, 0.5, 1_000_000)
    p1 = 0.5 / math.log(2)
    assert abs((z == 1).mean() - p1) < 3 * math.sqrt(p1 * (1 - p1) / z.size)
    m = 0.5 / (-0.5 * math.log(0.5))
    assert abs(z.mean() - m) < 3 * z.std() / math.sqrt(z.size)
    assert (sample_logarithmic(rng, 0.999, 100_000) == 1).mean() > 0.999
    with pytest.raises(InvalidParameter):
        sample_logarithmic(rng, 1.0)


def test_negbin():
    rng = RngStream(7)
    for r, mean in ((1.0, 1.0), (0.5, 0.5)):
        t = sample_negbin_real(rng, r, 0.5, 1_000_000)
        assert t.min() >= 0
        assert abs(t.mean() - mean) < 3 * t.std() / 1000
    # r = 1 gives T + 1 ~ GE(1 - p)
    t = sample_negbin_real(rng, 1.0, 0.3, 500_000)
    assert abs((t == 0).mean() - 0.7) < 3 * math.sqrt(0.21 / t.size)
    # MGF ((1-p)/(1-p e^s))^r at s = 0.2
    p, r, s = 0.4, 0.25, 0.2
    t = sample_negbin_real(rng, r, p, 1_000_000)
    e = np.exp(s * t)
    assert abs(e.mean() - ((1 - p) / (1 - p * math.exp(s))) ** r) < 3 * e.std() / 1000
    with pytest.raises(InvalidParameter):
        sample_negbin_real(rng, 0.0, 0.5)


def test_direct_sampler_moments():
    prm = simulation_params(0.5)
    x = sample_mgsn(RngStream(10), prm, N)
    mean, cov = moment_relation(prm)
    assert np.all(np.abs(mean_z(x, mean)) < 3)
    assert np.all(np.abs(cov_z(x, cov)) < 3.5)
    g = sample_mgsn(RngStream(10), MgsnParams(1.0, np.zeros(3), np.eye(3)), N)
    assert np.all(np.abs(mean_z(g, np.zeros(3))) < 3)


def test_decomp1_single_part_matches_direct():
    prm = simulation_params(0.5)
    a = sample_decomp1(RngStream(11), prm, 1, N)
    b = sample_mgsn(RngStream(12), prm, N)
    zm, zc = two_sample_z(a, b)
    assert np.all(np.abs(zm) < 3) and np.all(np.abs(zc) < 3.5)


def test_decomposition_samplers_moments():
    prm = simulation_params(0.5)
    mean, cov = moment_relation(prm)
    for x in (sample_decomp1(RngStream(13), prm, 4, N), sample_decomp2(RngStream(14), prm, N)):
        assert np.all(np.abs(mean_z(x, mean)) < 3)
        assert np.all(np.abs(cov_z(x, cov)) < 3.5)


def test_decomp2_near_one_is_gaussian():
    prm = simulation_params(0.5).replace(p=1 - 1e-9)
    x = sample_decomp2(RngStream(15), prm, N)
    assert np.all(np.abs(mean_z(x, prm.mu)) < 3)
    assert np.all(np.abs(cov_z(x, prm.sigma)) < 3.5)


def test_decomp2_location_matches_direct():
    prm = simulation_params(0.5)
    zm, _ = two_sample_z(sample_decomp2(RngStream(16), prm, N), sample_mgsn(RngStream(17), prm, N))
    assert np.all(np.abs(zm) < 3)


def test_decompositions_reject_p_one_and_return_vectors():
    prm = simulation_params(0.5)
    assert sample_decomp1(RngStream(1), prm, 3).shape == (4,)
    assert sample_decomp2(RngStream(1), prm).shape == (4,)
    with pytest.raises(InvalidParameter):
        sample_decomp1(RngStream(1), prm.replace(p=1.0), 2)
    with pytest.raises(InvalidParameter):
        sample_decomp2(RngStream(1), prm.replace(p=1.0))
    with pytest.raises(InvalidParameter):
        sample_decomp1(RngStream(1), prm, 0)


def test_geometric_sum_closure():
    base = simulation_params(0.8)
    rng = RngStream(18)
    x = sample_geometric_sum(rng, lambda k: sample_mgsn(rng, base, k), 0.5, N)
    mean, cov = moment_relation(base.replace(p=0.4))
    assert np.all(np.abs(mean_z(x, mean)) < 3)
    assert np.all(np.abs(cov_z(x, cov)) < 3.5)
