import math

import numpy as np
import pytest
from scipy import special, stats

from helpers import assert_within_se
from nrlp.yule_simon import (counts_at, sample_standard_yule, sample_ys_jump_times,
                             sample_ys_path, sample_ys_values, ys_cond_mean, ys_cov, ys_expect,
                             ys_mean, ys_pmf, ys_sf, ys_support)


def test_yule_zero_horizon(rng):
    assert len(sample_standard_yule(0.0, rng)) == 0


def test_yule_gaps_are_exponential(rng):
    # k-th gap ~ Exp(k): the first two gaps of long runs
    # r = 7: censoring of the first two gaps shifts their means by < 0.01
    runs = (sample_standard_yule(7.0, rng) for _ in range(5000))
    gaps = np.array([np.diff(np.concatenate(([0.0], j[:2]))) for j in runs if len(j) >= 2])
    assert_within_se(gaps[:, 0], 1.0)
    assert_within_se(gaps[:, 1], 0.5)


def test_yule_mean_and_geometric_law(rng):
    z = np.array([1 + len(sample_standard_yule(1.0, rng)) for _ in range(100_000)])
    assert_within_se(z, math.e)
    ks = np.arange(1, 15)
    emp = np.array([np.mean(z == k) for k in ks])
    assert np.max(np.abs(emp - stats.geom.pmf(ks, math.exp(-1)))) < 0.005


def test_pmf_closed_form():
    assert ys_pmf(0.5, 1) == pytest.approx(2 / 3)
    assert ys_pmf(0.5, 2) == pytest.approx(1 / 6)
    k = np.arange(1, 50)
    np.testing.assert_allclose(ys_pmf(0.5, k), 4 / (k * (k + 1) * (k + 2)), rtol=1e-12)


@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_pmf_normalisation(p):
    total = np.sum(ys_pmf(p, np.arange(1, 10 ** 6 + 1)))
    assert 1 - 1e-3 <= total <= 1 + 1e-12


@pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
def test_survival_matches_pmf(p):
    k = np.arange(1, 200)
    tail = 1 - np.cumsum(ys_pmf(p, k))
    np.testing.assert_allclose(ys_sf(p, k), tail, atol=1e-12)
    # tail asymptotics used for series truncation: P(eta = k) ~ Gamma(1/p + 1) k^{-(1+p)/p} / p
    big = 10 ** 6
    assert ys_pmf(p, big) == pytest.approx(special.gamma(1 / p + 1) * big ** (-(1 + p) / p) / p,
                                           rel=1e-4)


def test_support_and_expectation():
    k = ys_support(0.5, 1e-8)
    assert ys_sf(0.5, k) < 1e-8 <= ys_sf(0.5, k - 1)
    assert ys_expect(0.5, lambda kk: np.ones_like(kk, dtype=float), 1e-10) == pytest.approx(1.0,
                                                                                          abs=1e-9)


def test_moment_formulas():
    assert ys_mean(0.3, 1.0) == pytest.approx(1 / 0.7)
    assert ys_cond_mean(0.5, 2, 0.25, 1.0) == pytest.approx(4.0)
    assert ys_cov(0.25, 0.5, 1.0) == pytest.approx(0.5 ** 0.75 / (0.75 * 0.5), rel=1e-12)
    assert ys_cov(0.25, 0.5, 1.0) == pytest.approx(1.58566, abs=1e-4)
    with pytest.raises(ValueError, match="second moment undefined"):
        ys_cov(0.5, 0.5, 1.0)


def test_paths_are_counting_paths(rng):
    for p in (0.1, 0.5, 0.9):
        for _ in range(300):
            path = sample_ys_path(p, rng)
            j = path.jumps
            assert 0 < j[0] <= 1 and np.all(j <= 1)
            assert np.all(np.diff(j) > 0)
            assert path.value(j[0]) == 1
            assert path.value(np.nextafter(j[0], 0)) == 0


def test_first_jump_law(rng):
    y = sample_ys_values(0.5, [0.25, 0.5, 1.0], 100_000, rng)
    for j, t in enumerate((0.25, 0.5, 1.0)):
        assert_within_se(y[:, j] >= 1, t)


def test_sequential_path_law(rng):
    n = 100_000
    y1 = np.array([sample_ys_path(0.5, rng).value(1.0) for _ in range(n)])
    kmax = 20
    ks = np.arange(1, kmax + 1)
    obs = np.append([np.sum(y1 == k) for k in ks], np.sum(y1 > kmax))
    exp = n * np.append(ys_pmf(0.5, ks), ys_sf(0.5, kmax))
    assert stats.chisquare(obs, exp).pvalue > 0.01


@pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
def test_batch_values_match_pmf(p, rng):
    n = 100_000
    y = sample_ys_values(p, [1.0], n, rng)[:, 0]
    kmax = int(np.searchsorted(-n * ys_pmf(p, np.arange(1, 10 ** 4)), -5))
    ks = np.arange(1, kmax + 1)
    obs = np.append([np.sum(y == k) for k in ks], np.sum(y > kmax))
    exp = n * np.append(ys_pmf(p, ks), ys_sf(p, kmax))
    assert stats.chisquare(obs, exp).pvalue > 0.01


def test_covariance_grid(rng):
    p, grid = 0.25, (0.25, 0.5, 1.0)
    y = sample_ys_values(p, grid, 200_000, rng)
    for i in range(3):
        for j in range(i, 3):
            assert_within_se(y[:, i] * y[:, j], ys_cov(p, grid[i], grid[j]))


def test_conditional_mean(rng):
    p, s = 0.25, 0.5
    y = sample_ys_values(p, [s, 1.0], 200_000, rng)
    for k in (1, 2, 3):
        ind = y[:, 0] == k
        # E[Y(1) 1{Y(s) = k}] = k (1/s)^p P(Y(s) = k)
        assert_within_se(ind * y[:, 1] - ind * ys_cond_mean(p, k, s, 1.0), 0.0)


def test_self_similarity(rng):
    y = sample_ys_values(0.5, [0.5], 200_000, rng)[:, 0]
    cond = y[y >= 1]
    ref = sample_ys_values(0.5, [1.0], len(cond), rng)[:, 0]
    assert stats.ks_2samp(cond, ref).pvalue > 0.01


def test_jump_times_agree_with_paths(rng):
    first, owner, times = sample_ys_jump_times(0.5, 20_000, rng)
    batch = 1 + np.bincount(owner, minlength=20_000)
    seq = np.array([len(sample_ys_path(0.5, rng).jumps) for _ in range(20_000)])
    assert stats.ks_2samp(batch, seq).pvalue > 0.01
    assert np.all(times > first[owner]) and np.all(times <= 1)


def test_counts_markov_step(rng):
    u = np.full(100_000, 0.25)
    z = counts_at(u, [0.5, 1.0], 0.5, rng)
    # from u = 0.25 the counts are geometric with parameter (u/t)^p
    assert_within_se(z[:, 0], 0.5 ** -0.5)
    assert_within_se(z[:, 1], 0.25 ** -0.5)
    assert np.all(z[:, 1] >= z[:, 0])
    with pytest.raises(ValueError):
        counts_at(u, [1.0, 0.5], 0.5, rng)
