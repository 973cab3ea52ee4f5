"""Sample paths of noise reinforced Levy processes (NRLP).

An NRLP with triplet ``(a, q2, measure)`` and memory parameter p is built
from independent blocks

    xi_hat(t) = a t + q B_hat(t) + (reinforced jumps with |x| > 1)
                + (reinforced jumps with eps <= |x| <= 1) - t int_{eps<=|x|<=1} x measure(dx)

where ``B_hat`` is a noise reinforced Brownian motion (NRBM) and the jumps come
from an NRPPP.  The compensated band includes |x| = 1 so that the
compensation matches the cutoff ``x 1{|x| <= 1}`` of the exponent exactly.

Paths on ``[0, T]`` are obtained by running the construction on the horizon T;
in law this is the same as rescaling the ``[0, 1]`` construction with the
measure multiplied by T.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .measure import (Band, FULL, LevyTriplet, band_mass, band_moment, check_admissible, check_p,
                      is_centered, is_finite_measure, large_band, sample_jump, small_band)
from .point_process import (MarkedPointPattern, _sorted_pattern, empty_pattern, mark_cells,
                            sample_nrppp)
from .yule_simon import counts_at, sample_ys_path

DEFAULT_EPS = 1e-3


@dataclass(frozen=True, eq=False)
class NrbmPath:
    grid: np.ndarray
    values: np.ndarray
    p: float


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Continuous part on a grid plus the recorded jump atoms.

    ``value(t) = interp(continuous) + sum of marks at times <= t - compensation * t``.
    """

    grid: np.ndarray
    continuous: np.ndarray
    jumps: MarkedPointPattern
    compensation: float = 0.0
    triplet: LevyTriplet | None = None
    p: float = 0.0
    eps: float = 0.0
    centered: bool = False

    @property
    def horizon(self):
        return float(self.grid[-1])

    def _jump_sum(self, t, band=FULL):
        mask = band.contains(self.jumps.marks)
        times = self.jumps.times[mask]
        csum = np.concatenate(([0.0], np.cumsum(self.jumps.marks[mask])))
        return csum[np.searchsorted(times, t, side="right")]

    def components(self, t):
        t = np.asarray(t, dtype=float)
        return {
            "continuous": np.interp(t, self.grid, self.continuous),
            "jump_large": self._jump_sum(t, large_band()),
            "jump_compensated": self._jump_sum(t, small_band()) - self.compensation * t,
        }

    def value(self, t):
        out = sum(self.components(t).values())
        return float(out) if np.ndim(t) == 0 else out

    def eval_times(self):
        """Grid times merged with jump times (plot-ready)."""
        return np.union1d(self.grid, self.jumps.times)


# ---------------------------------------------------------------------------
# NRBM


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or grid[0] != 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be increasing and start at 0")
    return grid


def wiener_cell_variances(p, grid):
    """Variances of ``int_{t_i}^{t_{i+1}} s^{-p} dB_s``."""
    e = 1.0 - 2.0 * p
    return np.diff(grid ** e) / e


def nrbm_values(p, grid, size, rng):
    """``size`` NRBM paths on the grid, shape ``(size, len(grid))``."""
    check_p(p)
    if p >= 0.5:
        raise ValueError("NRBM requires p < 1/2")
    grid = _check_grid(grid)
    sd = np.sqrt(wiener_cell_variances(p, grid))
    incr = rng.standard_normal((size, len(sd))) * sd
    out = np.zeros((size, len(grid)))
    out[:, 1:] = grid[1:] ** p * np.cumsum(incr, axis=1)
    return out


def sample_nrbm(p, grid, rng):
    grid = _check_grid(grid)
    return NrbmPath(grid, nrbm_values(p, grid, 1, rng)[0], p)


def nrbm_cov(p, s, t):
    s, t = min(s, t), max(s, t)
    return t ** p * s ** (1 - p) / (1 - 2 * p)


# ---------------------------------------------------------------------------
# jump blocks


def _ys_sum_pattern(x, p, horizon, rng):
    """Pattern of ``sum_i x_i Y_i`` with independent Yule-Simon paths (on the horizon)."""
    paths = [sample_ys_path(p, rng, horizon).jumps for _ in range(len(x))]
    if not paths:
        return empty_pattern(horizon)
    lens = np.array([len(j) for j in paths])
    owner = np.repeat(np.arange(len(x)), lens)
    times = np.concatenate(paths)
    first = np.zeros(len(times), dtype=bool)
    first[np.concatenate(([0], np.cumsum(lens)[:-1]))] = True
    u = np.array([j[0] for j in paths])
    return _sorted_pattern(horizon, times, x[owner], first, owner, u[owner],
                           np.zeros(len(times), dtype=np.int64), 1)


def sample_reinforced_cpp(measure, p, rng, horizon=1.0):
    """``sum_i x_i Y_i(t)``: Poisson((1-p) T measure(R)) marks with Yule-Simon clocks."""
    check_p(p)
    total = band_mass(measure, FULL)
    if not np.isfinite(total):
        raise ValueError("infinite measure: use synthesize_nrlp")
    n = rng.poisson((1 - p) * total * horizon) if total > 0 else 0
    x = sample_jump(measure, FULL, rng, n) if n else np.empty(0)
    pat = _ys_sum_pattern(x, p, horizon, rng)
    drift = band_moment(measure, small_band(), 1.0, signed=True)
    grid = np.array([0.0, horizon])
    triplet = LevyTriplet(drift, 0.0, measure)
    return SamplePath(grid, np.zeros(2), pat, 0.0, triplet, p, centered=is_centered(triplet))


def sample_compensated_series(measure, p, eps, rng, upper=1.0, horizon=1.0):
    """Compensated Yule-Simon series over marks ``eps <= |x| < upper``.

    ``sum 1{eps <= |x_i| < upper} x_i Y_i(t) - t int_{eps <= |x| < upper} x measure(dx)``.
    """
    check_p(p)
    if not 0 < eps < 1 or not eps < upper <= 1:
        raise ValueError("need 0 < eps < upper <= 1")
    band = Band(eps, upper)
    mass = band_mass(measure, band)
    n = rng.poisson((1 - p) * mass * horizon) if mass > 0 else 0
    x = sample_jump(measure, band, rng, n) if n else np.empty(0)
    pat = _ys_sum_pattern(x, p, horizon, rng)
    comp = band_moment(measure, band, 1.0, signed=True)
    grid = np.array([0.0, horizon])
    # every mark of the band lies in |x| < 1 and is compensated: centred
    return SamplePath(grid, np.zeros(2), pat, comp, None, p, eps, centered=True)


def synthesize_nrlp(triplet, p, eps=DEFAULT_EPS, grid=None, rng=None):
    """Reinforced Levy-Ito synthesis on ``[0, grid[-1]]``.

    For finite measures no truncation is applied; otherwise jumps below
    ``eps`` are dropped.
    """
    check_admissible(p, triplet)
    rng = np.random.default_rng() if rng is None else rng
    grid = _check_grid(np.linspace(0, 1, 101) if grid is None else grid)
    horizon = float(grid[-1])
    measure = triplet.measure
    finite = is_finite_measure(measure)
    if not finite and not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    cut = None if finite else eps
    cont = triplet.drift * grid
    if triplet.gaussian_variance > 0:
        cont = cont + triplet.q * nrbm_values(p, grid, 1, rng)[0]
    pat = sample_nrppp(measure, p, horizon, rng, eps=cut)
    comp = band_moment(measure, small_band(cut or 0.0), 1.0, signed=True)
    return SamplePath(grid, cont, pat, comp, triplet, p, cut or 0.0, centered=is_centered(triplet))


def sample_nrlp_marginals(triplet, p, times, n_paths, rng, eps=DEFAULT_EPS, band=None):
    """Joint draws of ``(xi_hat(t_1), ..., xi_hat(t_k))``, shape ``(n_paths, k)``.

    Vectorised over paths: innovation clocks are advanced with the Markov
    property of the Yule process.  ``band`` restricts the jumps to a mark set
    (drift and Gaussian part are then dropped and the band is compensated
    where it meets ``|x| <= 1``).
    """
    check_admissible(p, triplet)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    horizon = float(times[-1])
    measure = triplet.measure
    out = np.zeros((n_paths, len(times)))
    if band is None:
        out += triplet.drift * times
        if triplet.gaussian_variance > 0:
            grid = np.concatenate(([0.0], times))
            out += triplet.q * nrbm_values(p, grid, n_paths, rng)[:, 1:]
        cells = mark_cells(measure, None if is_finite_measure(measure) else eps)
    else:
        cells = [band]
    for cell in cells:
        mass = band_mass(measure, cell)
        if mass <= 0:
            continue
        counts = rng.poisson((1 - p) * mass * horizon, size=n_paths)
        total = int(counts.sum())
        owner = np.repeat(np.arange(n_paths), counts)
        if total:
            u = horizon * (1.0 - rng.random(total))
            x = sample_jump(measure, cell, rng, total)
            z = counts_at(u, times, p, rng)
            for j in range(len(times)):
                out[:, j] += np.bincount(owner, weights=x * z[:, j], minlength=n_paths)
        comp = band_moment(measure, cell.intersect(small_band()), 1.0, signed=True)
        out -= comp * times
    return out


# ---------------------------------------------------------------------------
# diagnostics


def martingale_transform(path, p, times):
    """Values of ``t^{-p} xi_hat(t)`` (0 at t = 0) for a centred path."""
    if not path.centered:
        raise ValueError("martingale requires centered exponent")
    times = np.asarray(times, dtype=float)
    vals = np.asarray(path.value(times), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(times > 0, vals / np.where(times > 0, times, 1.0) ** p, 0.0)
    return float(out) if np.ndim(times) == 0 else out


def compensator_residual(pat, band, measure, p, t):
    """``N_A(t) - (1-p) t measure(A) - p int_0^t N_A(s-)/s ds``.

    The time integral is evaluated exactly between atom times.  Returns one
    value per replica of the pattern (a float for single patterns).
    """
    check_p(p)
    mass = band_mass(measure, band)
    if band.lo == 0 and not np.isfinite(mass):
        raise ValueError("mark set touching 0 has infinite mass")
    mask = band.contains(pat.marks) & (pat.times <= t)
    times, rep = pat.times[mask], pat.replica[mask]
    nrep = pat.n_replicas
    count = np.bincount(rep, minlength=nrep).astype(float)
    if len(times):
        # rank within replica (atoms are sorted by replica, then time)
        start = np.searchsorted(rep, rep, side="left")
        rank = np.arange(len(times)) - start + 1
        nxt = np.append(times[1:], t)
        last = np.append(rep[1:] != rep[:-1], True)
        nxt = np.where(last, t, nxt)
        integral = np.bincount(rep, weights=rank * np.log(nxt / times), minlength=nrep)
    else:
        integral = np.zeros(nrep)
    res = count - (1 - p) * t * mass - p * integral
    return float(res[0]) if nrep == 1 else res


def series_sup(pat, compensation, horizon):
    """``sup_{s <= horizon} |V(s)|`` per replica for ``V = sum of marks - compensation * s``.

    V is linear between atoms, so the supremum is attained at an atom time
    (left or right limit) or at the horizon.
    """
    nrep = pat.n_replicas
    out = np.zeros(nrep)
    if len(pat):
        rep = pat.replica
        csum = np.cumsum(pat.marks)
        start = np.searchsorted(rep, rep, side="left")
        base = np.where(start > 0, csum[np.maximum(start - 1, 0)], 0.0)
        after = csum - base - compensation * pat.times
        before = after - pat.marks
        np.maximum.at(out, rep, np.maximum(np.abs(after), np.abs(before)))
        total = np.bincount(rep, weights=pat.marks, minlength=nrep)
    else:
        total = np.zeros(nrep)
    return np.maximum(out, np.abs(total - compensation * horizon))


def path_rows(path, path_id=0, times=None):
    """Rows ``(path_id, time, value, component)`` for the path CSV."""
    times = path.eval_times() if times is None else np.asarray(times, dtype=float)
    comps = path.components(times)
    for name, vals in comps.items():
        for t, v in zip(times, vals):
            yield (int(path_id), float(t), float(v), name)


def fdd_charfn(triplet, p, times, lams, n_mc, rng, horizon=None):
    """``E[exp(i sum_j lam_j xi_hat(t_j))] = exp{(1-p) t E[psi(sum_j lam_j Y(t_j/t))]}``.

    The expectation over the Yule-Simon process is a Monte Carlo average over
    ``n_mc`` paths.  Returns ``(value, std_error)``.
    """
    from .coupling import _exp_mean
    from .measure import char_exponent
    check_p(p)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    t = float(times[-1]) if horizon is None else float(horizon)
    u = 1.0 - rng.random(n_mc)
    y = counts_at(u, times / t, p, rng)
    return _exp_mean((1 - p) * t * char_exponent(triplet, y @ lams))


def empirical_charfn(samples, lams):
    """Empirical ``E[exp(i <lam, X>)]`` over rows of ``samples`` and its standard error."""
    samples = np.atleast_2d(samples)
    z = samples @ np.atleast_1d(np.asarray(lams, dtype=float))
    c, s = np.cos(z), np.sin(z)
    n = len(z)
    se = math.sqrt((c.var(ddof=1) + s.var(ddof=1)) / n)
    return complex(c.mean(), s.mean()), se
