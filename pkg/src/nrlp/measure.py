"""Levy triplets and Levy measures.

A triplet ``(a, q2, measure)`` describes the exponent

    psi(lam) = i a lam - q2 lam^2 / 2 + int (e^{i lam x} - 1 - i lam x 1{|x| <= 1}) measure(dx)

Three kinds of Levy measure are supported: finitely many atoms, a symmetric
truncated stable-like density ``c |x|^{-1-alpha}`` on ``0 < |x| <= R`` and a
density tabulated on a user grid (trapezoid rule).

Subsets of marks are described by :class:`Band`, a set of the form
``{lo <= |x| < hi}`` (or ``<= hi`` when ``closed_hi`` is set).
"""
from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

BG_PROBE_STEP = 0.01


class AdmissibilityError(ValueError):
    """The memory parameter is too large for the triplet (p * beta >= 1)."""


class QuadratureError(RuntimeError):
    def __init__(self, message, abserr):
        super().__init__(f"{message} (achieved absolute error {abserr:.3g})")
        self.abserr = abserr


@dataclass(frozen=True)
class Band:
    """Mark set ``{x : lo <= |x| < hi}``; ``closed_hi`` makes it ``<= hi``."""

    lo: float = 0.0
    hi: float = math.inf
    closed_hi: bool = False

    def __post_init__(self):
        if self.lo < 0 or self.hi < self.lo:
            raise ValueError(f"invalid band [{self.lo}, {self.hi}]")

    def contains(self, x):
        ax = np.abs(x)
        upper = ax <= self.hi if self.closed_hi else ax < self.hi
        return (ax >= self.lo) & upper & (ax > 0)

    def intersect(self, other: "Band") -> "Band":
        lo = max(self.lo, other.lo)
        if self.hi < other.hi:
            hi, closed = self.hi, self.closed_hi
        elif other.hi < self.hi:
            hi, closed = other.hi, other.closed_hi
        else:
            hi, closed = self.hi, self.closed_hi and other.closed_hi
        hi = max(hi, lo)
        return Band(lo, hi, closed)


FULL = Band()
SMALL = Band(0.0, 1.0, closed_hi=True)   # compensated by the cutoff x 1{|x| <= 1}


def large_band():
    """Jumps with |x| > 1, i.e. those not compensated by the cutoff."""
    return Band(np.nextafter(1.0, 2.0), math.inf)


def small_band(eps=0.0):
    """Compensated jumps with eps <= |x| <= 1."""
    return Band(eps, 1.0, closed_hi=True)


# ---------------------------------------------------------------------------
# measure variants


@dataclass(frozen=True)
class FiniteAtoms:
    """Finitely many atoms, given as ``((location, rate), ...)``."""

    atoms: tuple = ()

    def __post_init__(self):
        atoms = tuple((float(x), float(r)) for x, r in self.atoms)
        for x, r in atoms:
            if x == 0:
                raise ValueError("atoms at 0 are not allowed")
            if r < 0 or not np.isfinite(r):
                raise ValueError(f"invalid rate {r}")
        object.__setattr__(self, "atoms", atoms)

    @property
    def locations(self):
        return np.array([x for x, _ in self.atoms], dtype=float)

    @property
    def rates(self):
        return np.array([r for _, r in self.atoms], dtype=float)


@dataclass(frozen=True)
class StableLike:
    """Symmetric density ``scale * |x|^{-1-alpha}`` on ``0 < |x| <= truncation``."""

    alpha: float
    scale: float = 1.0
    truncation: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        if self.scale <= 0 or self.truncation <= 0:
            raise ValueError("scale and truncation must be positive")


@dataclass(frozen=True, eq=False)
class TabulatedDensity:
    """Piecewise linear density through the points ``(x, density)``."""

    x: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        f = np.asarray(self.density, dtype=float)
        if x.ndim != 1 or x.shape != f.shape or len(x) < 2:
            raise ValueError("grid and density must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(x) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            raise ValueError("density values must be finite and non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "density", f)
        # the trapezoid rule keeps everything finite, but check anyway
        total = _tab_integral(self, FULL, lambda t: np.minimum(1.0, t * t))
        if not np.isfinite(total):
            raise ValueError("int (1 ^ x^2) density(x) dx is not finite")


@dataclass(frozen=True)
class LevyTriplet:
    drift: float = 0.0
    gaussian_variance: float = 0.0
    measure: object = field(default_factory=FiniteAtoms)

    def __post_init__(self):
        if self.gaussian_variance < 0:
            raise ValueError("gaussian_variance must be >= 0")
        if self.measure is None:
            object.__setattr__(self, "measure", FiniteAtoms())

    @property
    def q(self):
        return math.sqrt(self.gaussian_variance)


def poisson_triplet(rate=1.0, jump=1.0):
    """Triplet of ``jump * N`` with N a Poisson process, i.e. psi = rate (e^{i lam jump} - 1)."""
    drift = rate * jump if abs(jump) <= 1 else 0.0
    return LevyTriplet(drift, 0.0, FiniteAtoms(((jump, rate),)))


def check_p(p):
    if not 0 < p < 1:
        raise ValueError(f"memory parameter must lie in (0, 1), got {p}")


# ---------------------------------------------------------------------------
# integrals over bands


def _tab_pieces(spec, band):
    """Refined (x, f) pieces of the tabulated density restricted to the band."""
    x, f = spec.x, spec.density
    pieces = []
    for sign in (1.0, -1.0):
        a, b = band.lo, min(band.hi, 1e300)
        lo, hi = (a, b) if sign > 0 else (-b, -a)
        lo, hi = max(lo, x[0]), min(hi, x[-1])
        if hi <= lo:
            continue
        inner = x[(x > lo) & (x < hi)]
        xs = np.concatenate(([lo], inner, [hi]))
        fs = np.interp(xs, x, f)
        pieces.append((xs, fs))
    return pieces


def _tab_integral(spec, band, g):
    total = 0.0
    for xs, fs in _tab_pieces(spec, band):
        total += np.trapezoid(g(xs) * fs, xs)
    return total


def band_moment(spec, band=FULL, power=0.0, signed=False):
    """``int_band sign(x)^signed |x|^power measure(dx)``; ``power=0`` is the mass."""
    if isinstance(spec, FiniteAtoms):
        if not spec.atoms:
            return 0.0
        x, r = spec.locations, spec.rates
        w = r * np.abs(x) ** power
        if signed:
            w = w * np.sign(x)
        return float(np.sum(w[band.contains(x)]))
    if isinstance(spec, StableLike):
        if signed:
            return 0.0
        lo, hi = band.lo, min(band.hi, spec.truncation)
        if hi <= lo:
            return 0.0
        e = power - spec.alpha
        if lo == 0 and e <= 0:
            return math.inf
        if e == 0:
            val = math.log(hi / lo)
        else:
            val = (hi ** e - lo ** e) / e
        return 2.0 * spec.scale * val
    if isinstance(spec, TabulatedDensity):
        if signed:
            return float(_tab_integral(spec, band, lambda t: np.sign(t) * np.abs(t) ** power))
        return float(_tab_integral(spec, band, lambda t: np.abs(t) ** power))
    raise TypeError(f"unknown measure {spec!r}")


def band_mass(spec, band=FULL):
    return band_moment(spec, band, 0.0)


def is_finite_measure(spec):
    return np.isfinite(band_mass(spec, FULL))


# ---------------------------------------------------------------------------
# Blumenthal-Getoor index and admissibility


def _tab_bg(spec, n_shells=4):
    # A trapezoid density is bounded, so every integral over the grid is
    # finite.  Instead read the behaviour towards 0 from the dyadic shells
    # {2^-(j+1) <= |x| < 2^-j} that the grid covers: int |x|^r over shell j
    # stops decaying in j exactly when r is below the local power-law index.
    # For each r on the probe grid, the decay is the least-squares slope of
    # log2(shell integral) against j over the innermost covered shells.
    ax = np.abs(spec.x[spec.density > 0])
    ax = ax[(ax > 0) & (ax <= 1)]
    if len(ax) < 3:
        return 0.0
    lo_cover = ax.min()
    shells = []
    j = 0
    while 2.0 ** (-j - 1) >= lo_cover:
        band = Band(2.0 ** (-j - 1), 2.0 ** (-j))
        if band_mass(spec, band) > 0:
            shells.append((j, band))
        j += 1
    shells = shells[-n_shells:]
    if len(shells) < 3:
        return 0.0
    js = np.array([j for j, _ in shells], dtype=float)
    beta = 0.0
    for r in np.arange(BG_PROBE_STEP, 2.0 + 1e-9, BG_PROBE_STEP):
        logs = np.log2([band_moment(spec, band, r) for _, band in shells])
        slope = np.polyfit(js, logs, 1)[0]
        if slope >= 0:
            beta = round(float(r) + BG_PROBE_STEP, 2)
    return min(beta, 2.0)


def bg_index(spec, return_resolution=False):
    """Blumenthal-Getoor index ``inf{r > 0 : int_{|x|<=1} |x|^r measure(dx) < inf}``.

    Closed form for atoms (0) and stable-like measures (alpha). For tabulated
    densities the value is probed on an r-grid with step ``BG_PROBE_STEP``,
    which is returned alongside when ``return_resolution`` is set.
    """
    if isinstance(spec, FiniteAtoms):
        val, res = 0.0, 0.0
    elif isinstance(spec, StableLike):
        val, res = float(spec.alpha), 0.0
    elif isinstance(spec, TabulatedDensity):
        val, res = _tab_bg(spec), BG_PROBE_STEP
    else:
        raise TypeError(f"unknown measure {spec!r}")
    return (val, res) if return_resolution else val


def beta_of(triplet):
    return 2.0 if triplet.gaussian_variance != 0 else bg_index(triplet.measure)


def admissibility(p, triplet):
    """Return ``(ok, message)`` for the condition ``p * beta < 1``."""
    beta = beta_of(triplet)
    prod = p * beta
    ok = prod < 1
    rel = "<" if ok else ">="
    return ok, f"p*beta = {p:g}*{beta:g} = {prod:g} {rel} 1"


def is_admissible(p, triplet):
    return admissibility(p, triplet)[0]


def check_admissible(p, triplet):
    check_p(p)
    ok, msg = admissibility(p, triplet)
    if not ok:
        raise AdmissibilityError(f"inadmissible memory parameter: {msg}")


def large_jump_mean(triplet):
    """``a + int_{|x| > 1} x measure(dx)``, zero for centred triplets."""
    return triplet.drift + band_moment(triplet.measure, large_band(), 1.0, signed=True)


def is_centered(triplet, tol=1e-8):
    if not np.isfinite(band_moment(triplet.measure, large_band(), 1.0)):
        return False
    return abs(large_jump_mean(triplet)) < tol


# ---------------------------------------------------------------------------
# characteristic exponent

_stable_cache = {}


def _stable_unit(alpha, upper):
    """``int_0^upper (cos y - 1) y^{-1-alpha} dy``."""
    if upper <= 0:
        return 0.0
    d = min(1.0, upper)
    # power series near the origin, where the integrand is ~ -y^{1-alpha}/2
    series, k = 0.0, 1
    while True:
        term = (-1) ** k * d ** (2 * k - alpha) / (math.factorial(2 * k) * (2 * k - alpha))
        series += term
        if abs(term) < 1e-17:
            break
        k += 1
    if upper <= d:
        return series
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            osc, err = integrate.quad(lambda y: y ** (-1 - alpha), d, upper,
                                      weight="cos", wvar=1.0, limit=500)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"stable exponent quadrature failed: {exc}", math.nan)
    if err > 1e-7 * max(1.0, abs(osc)):
        raise QuadratureError("stable exponent quadrature did not converge", err)
    return series + osc - (d ** -alpha - upper ** -alpha) / alpha


def _stable_psi(spec, lam):
    out = np.zeros(lam.shape, dtype=complex)
    a = np.abs(lam)
    uniq, inv = np.unique(a, return_inverse=True)
    vals = np.empty(len(uniq))
    for i, u in enumerate(uniq):
        key = (spec.alpha, spec.truncation, float(u))
        if key not in _stable_cache:
            if u == 0:
                _stable_cache[key] = 0.0
            else:
                _stable_cache[key] = u ** spec.alpha * _stable_unit(spec.alpha, u * spec.truncation)
        vals[i] = _stable_cache[key]
    out.real = 2.0 * spec.scale * vals[inv.reshape(a.shape)]
    return out


def _measure_psi(spec, lam):
    if isinstance(spec, FiniteAtoms):
        out = np.zeros(lam.shape, dtype=complex)
        for x, r in spec.atoms:
            comp = x if abs(x) <= 1 else 0.0
            out += r * (np.exp(1j * lam * x) - 1 - 1j * lam * comp)
        return out
    if isinstance(spec, StableLike):
        return _stable_psi(spec, lam)
    if isinstance(spec, TabulatedDensity):
        out = np.zeros(lam.shape, dtype=complex)
        flat = lam.reshape(-1)
        res = np.zeros(flat.shape, dtype=complex)
        for band, comp in ((small_band(), True), (large_band(), False)):
            for xs, fs in _tab_pieces(spec, band):
                for i0 in range(0, len(flat), 256):
                    lm = flat[i0:i0 + 256, None]
                    g = np.exp(1j * lm * xs) - 1
                    if comp:
                        g = g - 1j * lm * xs
                    res[i0:i0 + 256] += np.trapezoid(g * fs, xs, axis=1)
        out[...] = res.reshape(lam.shape)
        return out
    raise TypeError(f"unknown measure {spec!r}")


def char_exponent(triplet, lam):
    """Characteristic exponent psi(lam); vectorised over ``lam``."""
    lam_arr = np.asarray(lam, dtype=float)
    out = (1j * triplet.drift * lam_arr - 0.5 * triplet.gaussian_variance * lam_arr ** 2
           + _measure_psi(triplet.measure, lam_arr))
    out = np.where(lam_arr == 0, 0j, out)
    return complex(out) if np.ndim(lam) == 0 else out


# ---------------------------------------------------------------------------
# sampling


def _linear_segment_sample(x0, x1, f0, f1, v):
    """Inverse cdf of the linear density from f0 at x0 to f1 at x1."""
    w = x1 - x0
    df = f1 - f0
    with np.errstate(divide="ignore", invalid="ignore"):
        mass = 0.5 * (f0 + f1)
        flat = np.abs(df) <= 1e-12 * np.maximum(mass, 1e-300)
        root = np.sqrt(np.maximum(f0 * f0 + (f1 * f1 - f0 * f0) * v, 0.0))
        frac = np.where(flat, v, (root - f0) / np.where(flat, 1.0, df))
    return x0 + w * np.clip(frac, 0.0, 1.0)


def sample_jump(spec, band=FULL, rng=None, size=None):
    """Draw marks from ``measure(. & band) / measure(band)``."""
    rng = np.random.default_rng() if rng is None else rng
    mass = band_mass(spec, band)
    if not mass > 0:
        raise ValueError("empty restriction")
    if not np.isfinite(mass):
        raise ValueError(f"restriction has infinite mass: {band}")
    n = 1 if size is None else int(np.prod(size))
    if isinstance(spec, FiniteAtoms):
        x, r = spec.locations, spec.rates
        keep = band.contains(x)
        x, r = x[keep], r[keep]
        out = x[rng.choice(len(x), size=n, p=r / r.sum())] if len(x) > 1 else np.full(n, x[0])
    elif isinstance(spec, StableLike):
        lo, hi, a = band.lo, min(band.hi, spec.truncation), spec.alpha
        v = rng.random(n)
        mag = (lo ** -a - v * (lo ** -a - hi ** -a)) ** (-1.0 / a)
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        out = sign * mag
    elif isinstance(spec, TabulatedDensity):
        x0s, x1s, f0s, f1s = [], [], [], []
        for xs, fs in _tab_pieces(spec, band):
            x0s.append(xs[:-1]); x1s.append(xs[1:]); f0s.append(fs[:-1]); f1s.append(fs[1:])
        x0, x1, f0, f1 = (np.concatenate(a) for a in (x0s, x1s, f0s, f1s))
        seg_mass = 0.5 * (f0 + f1) * (x1 - x0)
        idx = rng.choice(len(seg_mass), size=n, p=seg_mass / seg_mass.sum())
        out = _linear_segment_sample(x0[idx], x1[idx], f0[idx], f1[idx], rng.random(n))
    else:
        raise TypeError(f"unknown measure {spec!r}")
    return float(out[0]) if size is None else out.reshape(size)


# ---------------------------------------------------------------------------
# triplet files


def _parse_atoms(text):
    atoms = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        loc, rate = item.split(":")
        atoms.append((float(loc), float(rate)))
    return FiniteAtoms(tuple(atoms))


def parse_key_values(text):
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def triplet_from_mapping(kv, base_dir="."):
    known = {"drift", "gaussian_variance", "measure.type", "measure.atoms", "measure.alpha",
             "measure.scale", "measure.truncation", "measure.grid_file"}
    kind = kv.get("measure.type", "none").lower()
    if kind in ("none", "empty", ""):
        measure = FiniteAtoms()
    elif kind in ("atoms", "finite_atoms", "finiteatoms"):
        measure = _parse_atoms(kv.get("measure.atoms", ""))
    elif kind in ("stable", "stable_like", "stablelike"):
        measure = StableLike(float(kv["measure.alpha"]), float(kv.get("measure.scale", 1.0)),
                             float(kv.get("measure.truncation", 1.0)))
    elif kind in ("tabulated", "tabulated_density", "tabulateddensity"):
        path = os.path.join(base_dir, kv["measure.grid_file"])
        data = np.loadtxt(path, delimiter=None if not path.endswith(".csv") else ",", ndmin=2)
        measure = TabulatedDensity(data[:, 0], data[:, 1])
    else:
        raise ValueError(f"unknown measure.type {kind!r}")
    extra = {k for k in kv if k.startswith("measure.") or k in ("drift", "gaussian_variance")} - known
    if extra:
        raise ValueError(f"unknown triplet keys: {sorted(extra)}")
    return LevyTriplet(float(kv.get("drift", 0.0)), float(kv.get("gaussian_variance", 0.0)), measure)


def load_triplet(path):
    """Read a triplet from a flat ``key = value`` file."""
    with open(path) as fh:
        kv = parse_key_values(fh.read())
    return triplet_from_mapping(kv, os.path.dirname(os.path.abspath(path)))
