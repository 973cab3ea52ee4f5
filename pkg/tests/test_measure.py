import math

import numpy as np
import pytest
from scipy import integrate

from helpers import assert_within_se
from nrlp.measure import (AdmissibilityError, Band, FULL, FiniteAtoms, LevyTriplet, StableLike,
                          TabulatedDensity, admissibility, band_mass, band_moment, bg_index,
                          char_exponent, check_admissible, is_admissible, is_centered,
                          load_triplet, poisson_triplet, sample_jump)


def direct_psi(triplet, lam, density, lo, hi):
    """Independent quadrature of the Levy-Khintchine integral for a density on lo <= |x| <= hi."""
    def integrand(x, part):
        z = np.exp(1j * lam * x) - 1 - 1j * lam * x * (abs(x) <= 1)
        return (z.real if part == 0 else z.imag) * density(x)
    total = 0j
    for a, b in ((-hi, -lo), (lo, hi)):
        re = integrate.quad(integrand, a, b, args=(0,), limit=500, epsabs=1e-12)[0]
        im = integrate.quad(integrand, a, b, args=(1,), limit=500, epsabs=1e-12)[0]
        total += re + 1j * im
    return 1j * triplet.drift * lam - triplet.gaussian_variance * lam ** 2 / 2 + total


def test_gaussian_exponent():
    assert char_exponent(LevyTriplet(0.0, 1.0), 2.0) == pytest.approx(-2.0)


def test_single_atom_exponent():
    psi = char_exponent(LevyTriplet(0.0, 0.0, FiniteAtoms(((1.0, 1.0),))), math.pi)
    assert psi == pytest.approx(-2 - 1j * math.pi, abs=1e-12)


@pytest.mark.parametrize("triplet", [
    LevyTriplet(0.3, 1.0),
    poisson_triplet(2.0, -1.5),
    LevyTriplet(0.0, 0.0, StableLike(0.5)),
    LevyTriplet(1.0, 0.5, StableLike(1.5, 2.0, 3.0)),
    LevyTriplet(0.0, 0.0, TabulatedDensity(np.linspace(-2, 2, 41), np.ones(41))),
])
def test_exponent_invariants(triplet):
    assert char_exponent(triplet, 0.0) == 0
    lam = np.array([0.1, 0.7, 3.0, 25.0])
    psi = char_exponent(triplet, lam)
    np.testing.assert_allclose(char_exponent(triplet, -lam), np.conj(psi), atol=1e-10)
    assert np.all(psi.real <= 1e-12)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("alpha,trunc", [(0.5, 1.0), (1.5, 1.0), (1.2, 2.5)])
@pytest.mark.parametrize("lam", [0.3, 4.0, 60.0])
def test_stable_exponent_matches_direct_quadrature(alpha, trunc, lam):
    spec = StableLike(alpha, 1.3, trunc)
    trip = LevyTriplet(0.2, 0.0, spec)
    dens = lambda x: 1.3 * abs(x) ** (-1 - alpha)
    # split at 1e-6: below it the compensated integrand is O(lam^2 x^2) and tiny
    got = char_exponent(trip, lam)
    lo = 1e-6
    tail = -1.3 * lam ** 2 * lo ** (2 - alpha) / (2 - alpha)
    want = direct_psi(trip, lam, dens, lo, trunc) + tail
    assert abs(got - want) < 1e-5 * max(1, abs(want))


def test_poisson_triplet_exponent():
    lam = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(char_exponent(poisson_triplet(2.0), lam),
                               2.0 * (np.exp(1j * lam) - 1), atol=1e-12)
    np.testing.assert_allclose(char_exponent(poisson_triplet(1.0, 3.0), lam),
                               np.exp(3j * lam) - 1, atol=1e-12)


def test_tabulated_exponent_matches_quadrature():
    x = np.linspace(-2, 2, 4001)
    f = np.exp(-x ** 2)
    trip = LevyTriplet(0.0, 0.0, TabulatedDensity(x, f))
    want = direct_psi(trip, 1.7, lambda t: math.exp(-t * t), 0.0, 2.0)
    assert abs(char_exponent(trip, 1.7) - want) < 1e-5


def test_bg_index_closed_forms():
    assert bg_index(FiniteAtoms(((1.0, 2.0),))) == 0
    assert bg_index(StableLike(0.5, 1, 1)) == 0.5
    assert bg_index(StableLike(1.5, 1, 1)) == 1.5


@pytest.mark.parametrize("alpha", [0.3, 0.8, 1.5])
def test_bg_index_tabulated_probe(alpha):
    x = np.concatenate((-np.logspace(0, -8, 400), np.logspace(-8, 0, 400)))
    f = np.abs(x) ** (-1 - alpha)
    value, resolution = bg_index(TabulatedDensity(x, f), return_resolution=True)
    assert resolution == pytest.approx(0.01)
    assert alpha <= value <= alpha + 0.02


def test_bg_index_monotone_under_restriction():
    full = StableLike(1.2, 1.0, 2.0)
    assert bg_index(StableLike(1.2, 1.0, 0.5)) <= bg_index(full)
    assert bg_index(FiniteAtoms(((0.5, 1.0),))) <= bg_index(FiniteAtoms(((0.5, 1.0), (0.1, 3.0))))


def test_admissibility_examples():
    gauss = LevyTriplet(0.0, 1.0, StableLike(0.5))
    assert is_admissible(0.3, gauss)
    assert not is_admissible(0.6, LevyTriplet(0.0, 1.0))
    assert is_admissible(0.9, LevyTriplet(0.0, 0.0, FiniteAtoms(((1.0, 1.0),))))
    ok, msg = admissibility(0.6, LevyTriplet(0.0, 1.0))
    assert not ok and ">= 1" in msg
    with pytest.raises(AdmissibilityError, match="0.6"):
        check_admissible(0.6, LevyTriplet(0.0, 1.0))


def test_admissibility_monotone_in_p():
    trip = LevyTriplet(0.0, 0.0, StableLike(1.5))
    flags = [is_admissible(p, trip) for p in np.linspace(0.01, 0.99, 99)]
    assert flags == sorted(flags, reverse=True)


def test_sample_single_atom(rng):
    x = sample_jump(FiniteAtoms(((1.0, 1.0),)), Band(0.5), rng, 100)
    assert np.all(x == 1.0)


def test_sample_symmetric_atoms(rng):
    x = sample_jump(FiniteAtoms(((-1.0, 1.0), (1.0, 1.0))), FULL, rng, 100_000)
    assert abs(np.mean(x == 1.0) - 0.5) < 0.01


def test_sample_truncated_power_law(rng):
    a = 0.1
    x = sample_jump(StableLike(0.5, 1.0, 1.0), Band(a, 1.0, True), rng, 100_000)
    assert np.all((np.abs(x) >= a) & (np.abs(x) <= 1))
    # density proportional to |x|^-1.5 on [a, 1]: analytic mean of |x|
    mean_abs = (2 * (1 - math.sqrt(a))) / (2 * (a ** -0.5 - 1))
    assert_within_se(np.abs(x), mean_abs)
    assert_within_se(x, 0.0)


def test_sample_tabulated(rng):
    # density 1 on [0.5, 1], 2 - x on [1, 2]; exact mean 3/8 + 2/3
    exact_mean = 3 / 8 + 2 / 3
    coarse = TabulatedDensity(np.array([0.5, 1.0, 2.0]), np.array([1.0, 1.0, 0.0]))
    # integrals use the trapezoid rule on the user's grid
    assert band_mass(coarse, FULL) == pytest.approx(1.0)
    assert band_moment(coarse, FULL, 1.0, signed=True) == pytest.approx(0.375 + 0.5)
    # draws follow the piecewise linear density exactly
    assert_within_se(sample_jump(coarse, FULL, rng, 100_000), exact_mean)
    x = np.linspace(0.5, 2.0, 3001)
    fine = TabulatedDensity(x, np.minimum(1.0, 2.0 - x))
    assert band_moment(fine, FULL, 1.0, signed=True) == pytest.approx(exact_mean, abs=1e-6)


def test_sample_empty_restriction(rng):
    with pytest.raises(ValueError, match="empty restriction"):
        sample_jump(FiniteAtoms(((1.0, 1.0),)), Band(2.0, 3.0), rng, 1)


def test_cutoff_boundary_at_one():
    # |x| = 1 is compensated, |x| > 1 is not
    assert is_centered(LevyTriplet(0.0, 0.0, FiniteAtoms(((1.0, 1.0),))))
    assert not is_centered(LevyTriplet(0.0, 0.0, FiniteAtoms(((1.5, 1.0),))))
    assert is_centered(LevyTriplet(-1.5, 0.0, FiniteAtoms(((1.5, 1.0),))))


def test_load_triplet(tmp_path):
    grid = tmp_path / "dens.txt"
    np.savetxt(grid, np.column_stack([np.linspace(-1, 1, 5), np.ones(5)]))
    cfg = tmp_path / "t.cfg"
    cfg.write_text("# comment\ndrift = 0.5\ngaussian_variance = 2\nmeasure.type = tabulated\n"
                   "measure.grid_file = dens.txt\n")
    t = load_triplet(cfg)
    assert t.drift == 0.5 and t.gaussian_variance == 2.0
    assert band_mass(t.measure) == pytest.approx(2.0)
    cfg.write_text("measure.type = atoms\nmeasure.atoms = 1:2, -0.5:1\n")
    t = load_triplet(cfg)
    assert t.measure.atoms == ((1.0, 2.0), (-0.5, 1.0))
    cfg.write_text("measure.type = stable\nmeasure.alpha = 0.7\nmeasure.truncation = 2\n")
    assert load_triplet(cfg).measure == StableLike(0.7, 1.0, 2.0)
    cfg.write_text("measure.type = stable\nmeasure.alpha = 0.7\nmeasure.bogus = 1\n")
    with pytest.raises(ValueError, match="unknown"):
        load_triplet(cfg)


def test_invalid_specs():
    with pytest.raises(ValueError):
        FiniteAtoms(((0.0, 1.0),))
    with pytest.raises(ValueError):
        StableLike(2.0)
    with pytest.raises(ValueError):
        LevyTriplet(0.0, -1.0)
    with pytest.raises(ValueError):
        TabulatedDensity([0.0, 1.0], [1.0, -1.0])
