import math

import numpy as np
import pytest
from scipy import stats

from helpers import assert_within_se
from nrlp.coupling import (coupled_bm_values, coupled_cov, coupled_marginals, joint_charfn,
                           levy_marginals, reinforce_jumps, sample_coupled_bm,
                           sample_coupled_pair, sample_levy_with_jumps)
from nrlp.measure import FULL, Band, FiniteAtoms, LevyTriplet, StableLike, char_exponent
from nrlp.paths import empirical_charfn, fdd_charfn, sample_nrlp_marginals
from nrlp.point_process import counting_process

DELTA1 = FiniteAtoms(((1.0, 1.0),))


def test_levy_path_examples(rng):
    grid = np.array([0.0, 1.0])
    bm = [sample_levy_with_jumps(LevyTriplet(0.0, 1.0), 1.0, 1e-3, rng, grid).value(1.0)
          for _ in range(20_000)]
    assert_within_se(np.square(bm), 1.0)
    pois = [len(sample_levy_with_jumps(LevyTriplet(0.0, 0.0, DELTA1), 1.0, 1e-3, rng, grid).jumps)
            for _ in range(20_000)]
    assert_within_se(pois, 1.0)
    st = np.array([sample_levy_with_jumps(LevyTriplet(0.0, 0.0, StableLike(0.5)), 1.0, 1e-3, rng,
                                          grid).value(1.0) for _ in range(20_000)])
    # symmetry: the sign is a fair coin, so the median sits at 0
    assert abs(np.mean(st > 0) - 0.5) <= 4 * 0.5 / math.sqrt(len(st))


def test_levy_marginals_match_paths(rng):
    trip = LevyTriplet(0.3, 0.5, FiniteAtoms(((1.0, 1.0), (-2.0, 0.5))))
    a = levy_marginals(trip, [1.0], 5000, rng)[:, 0]
    b = [sample_levy_with_jumps(trip, 1.0, 1e-3, rng, np.array([0.0, 1.0])).value(1.0)
         for _ in range(5000)]
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_reinforce_jumps_kept_fraction(rng):
    base = sample_levy_with_jumps(LevyTriplet(0.0, 0.0, FiniteAtoms(((1.0, 20_000.0),))), 1.0,
                                  1e-3, rng).jumps
    _, kept = reinforce_jumps(base, 0.99, 1.0, rng, return_kept=True)
    frac = kept.mean()
    assert abs(frac - 0.01) <= 4 * math.sqrt(0.01 * 0.99 / len(kept))


def test_reinforce_jumps_intensity_and_law(rng):
    counts = []
    for _ in range(10_000):
        base = sample_levy_with_jumps(LevyTriplet(0.0, 0.0, DELTA1), 1.0, 1e-3, rng).jumps
        counts.append(counting_process(reinforce_jumps(base, 0.5, 1.0, rng), FULL, 1.0))
    assert_within_se(counts, 1.0)
    ref = sample_nrlp_marginals(LevyTriplet(1.0, 0.0, DELTA1), 0.5, [1.0], 10_000, rng)[:, 0]
    assert stats.ks_2samp(counts, ref).pvalue > 0.01


def test_coupled_bm_covariances(rng):
    B, Bh = coupled_bm_values(0.25, np.array([0.0, 0.5, 1.0]), 100_000, rng)
    assert_within_se(B[:, 2] * Bh[:, 2], 1.0)
    assert coupled_cov(0.25, 1.0, 0.5) == pytest.approx(0.5)
    assert_within_se(B[:, 2] * Bh[:, 1], 0.5)
    assert_within_se(B[:, 1] * Bh[:, 2], coupled_cov(0.25, 0.5, 1.0))
    assert_within_se(Bh[:, 1] * Bh[:, 2], 0.5 ** 0.75 / 0.5)
    assert_within_se(B[:, 1] * B[:, 2], 0.5)


def test_coupled_bm_small_p(rng):
    B, Bh = coupled_bm_values(1e-6, np.array([0.0, 1.0]), 10_000, rng)
    assert np.corrcoef(B[:, 1], Bh[:, 1])[0, 1] > 0.999
    pair = sample_coupled_bm(0.25, np.linspace(0, 1, 5), rng)
    assert pair.B[0] == pair.B_hat[0] == 0
    with pytest.raises(ValueError):
        coupled_bm_values(0.5, np.array([0.0, 1.0]), 10, rng)


def test_coupled_pair_brownian(rng):
    grid = np.array([0.0, 0.5, 1.0])
    vals = np.array([[cp.base.value(1.0), cp.reinforced.value(0.5)] for cp in
                     (sample_coupled_pair(LevyTriplet(0.0, 1.0), 0.25, grid=grid, rng=rng)
                      for _ in range(20_000))])
    assert_within_se(vals[:, 0] * vals[:, 1], 0.5)


def test_coupled_pair_bookkeeping(rng):
    for _ in range(500):
        cp = sample_coupled_pair(LevyTriplet(0.0, 0.0, FiniteAtoms(((1.0, 3.0),))), 0.5,
                                 grid=np.array([0.0, 1.0]), rng=rng)
        jumps = cp.reinforced.jumps
        innov = jumps.is_innovation
        np.testing.assert_array_equal(np.sort(jumps.innovation_id[innov]), np.flatnonzero(cp.kept))
        np.testing.assert_allclose(np.sort(jumps.times[innov]), np.sort(cp.jump_time[cp.kept]))
        # discarded jumps never appear; repetitions follow their innovation
        assert not set(jumps.innovation_id) & set(np.flatnonzero(~cp.kept))
        for i in np.unique(jumps.innovation_id):
            fam = jumps.innovation_id == i
            assert np.all(jumps.times[fam] >= cp.jump_time[i])
            assert np.all(jumps.marks[fam] == cp.base.jumps.marks[i])
        m = cp.shared_jump_map
        assert len(m) == len(cp.kept)


def test_coupled_pair_inadmissible(rng):
    with pytest.raises(ValueError):
        sample_coupled_pair(LevyTriplet(0.0, 1.0), 0.6, rng=rng)


def test_joint_charfn_trivial(rng):
    trip = LevyTriplet(0.5, 1.0, DELTA1)
    assert joint_charfn(trip, 0.3, [0.5, 1.0], [0, 0], [0, 0], 1000, rng)[0] == 1.0


def test_joint_charfn_beta_zero_is_levy(rng):
    trip = LevyTriplet(0.0, 0.0, DELTA1)
    times, lams = np.array([0.5, 1.0]), np.array([0.7, -1.2])
    val, se = joint_charfn(trip, 0.5, times, lams, [0, 0], 200_000, rng)
    # classical fdd formula: independent increments
    want = np.exp(0.5 * char_exponent(trip, lams.sum()) + 0.5 * char_exponent(trip, lams[1]))
    assert abs(val - want) <= 4 * se + 1e-12


def test_joint_charfn_lambda_zero_is_nrlp(rng):
    trip = LevyTriplet(0.2, 0.5, DELTA1)
    val, se = joint_charfn(trip, 0.25, [0.5, 1.0], [0, 0], [0.8, 0.5], 100_000, rng)
    samples = sample_nrlp_marginals(trip, 0.25, [0.5, 1.0], 100_000, rng)
    emp, emp_se = empirical_charfn(samples, [0.8, 0.5])
    assert abs(val - emp) <= 4 * math.hypot(se, emp_se)
    ref, ref_se = fdd_charfn(trip, 0.25, [0.5, 1.0], [0.8, 0.5], 100_000, rng)
    assert abs(val - ref) <= 4 * math.hypot(se, ref_se)


@pytest.mark.parametrize("lam,beta", [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)])
def test_joint_charfn_against_coupling(lam, beta, rng):
    trip = LevyTriplet(1.0, 1.0, DELTA1)
    times = [0.5, 1.0]
    base, reinf = coupled_marginals(trip, 0.25, times, 100_000, rng)
    emp, emp_se = empirical_charfn(np.hstack([base, reinf]), [lam, lam, beta, beta])
    val, se = joint_charfn(trip, 0.25, times, [lam, lam], [beta, beta], 100_000, rng)
    assert abs(emp - val) <= 4 * math.hypot(emp_se, se)


def test_coupled_marginals_match_pairs(rng):
    trip = LevyTriplet(0.0, 1.0, FiniteAtoms(((1.0, 1.0), (-0.5, 2.0))))
    base, reinf = coupled_marginals(trip, 0.3, [1.0], 5000, rng)
    pairs = [sample_coupled_pair(trip, 0.3, grid=np.array([0.0, 1.0]), rng=rng) for _ in range(5000)]
    assert stats.ks_2samp(base[:, 0], [cp.base.value(1.0) for cp in pairs]).pvalue > 0.01
    assert stats.ks_2samp(reinf[:, 0], [cp.reinforced.value(1.0) for cp in pairs]).pvalue > 0.01


def test_discarded_jumps_independent(rng):
    n = 10_000
    disc, reinf = np.empty(n), np.empty(n)
    for i in range(n):
        cp = sample_coupled_pair(LevyTriplet(1.0, 0.0, DELTA1), 0.25, grid=np.array([0.0, 1.0]),
                                 rng=rng)
        disc[i] = cp.base.jumps.marks[~cp.kept].sum()
        reinf[i] = cp.reinforced.value(1.0)
    assert abs(np.corrcoef(disc, reinf)[0, 1]) <= 4 / math.sqrt(n)


def test_coupled_stable(rng):
    # infinite activity: kept small jumps are compensated with the full drift
    trip = LevyTriplet(0.0, 0.0, StableLike(0.8, 1.0, 2.0))
    base, reinf = coupled_marginals(trip, 0.5, [1.0], 20_000, rng, eps=0.01)
    ref = sample_nrlp_marginals(trip, 0.5, [1.0], 20_000, rng, eps=0.01)[:, 0]
    assert stats.ks_2samp(reinf[:, 0], ref).pvalue > 0.01
    assert_within_se(np.clip(base[:, 0], -5, 5), 0.0)
