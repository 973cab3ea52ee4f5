"""Joint construction of a Levy process and its noise reinforced version.

Each jump of the Levy path xi is kept with probability ``1 - p``; kept jumps
are decorated with repetitions and form the jump part of xi_hat, discarded
jumps are never seen by xi_hat.  The Gaussian parts are coupled through

    beta_bm = (1 - p) B + sqrt(1 - (1 - p)^2) W,   B_hat(t) = t^p int_0^t s^{-p} d beta_bm(s),

with W an independent Brownian motion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measure import (FULL, band_mass, band_moment, char_exponent, check_admissible, check_p,
                      is_finite_measure, sample_jump, small_band)
from .paths import SamplePath, _check_grid, DEFAULT_EPS
from .point_process import (MarkedPointPattern, _sorted_pattern, decorate_innovations,
                            empty_pattern, mark_cells)
from .yule_simon import counts_at


@dataclass(frozen=True, eq=False)
class CoupledBrownianPair:
    grid: np.ndarray
    B: np.ndarray
    B_hat: np.ndarray
    p: float


@dataclass(frozen=True, eq=False)
class CoupledPaths:
    base: SamplePath
    reinforced: SamplePath
    jump_time: np.ndarray   # time u of base jump i (index = innovation_id)
    kept: np.ndarray        # whether base jump i was kept

    @property
    def shared_jump_map(self):
        return {i: (float(u), bool(k)) for i, (u, k) in enumerate(zip(self.jump_time, self.kept))}


def _levy_jumps(measure, horizon, eps, rng, replicas=1):
    """Jumps of the Levy process (Poisson with intensity dt measure(dx))."""
    cells = mark_cells(measure, None if is_finite_measure(measure) else eps)
    u_parts, x_parts, r_parts = [], [], []
    for cell in cells:
        mass = band_mass(measure, cell)
        if mass <= 0:
            continue
        counts = rng.poisson(mass * horizon, size=replicas)
        total = int(counts.sum())
        if total:
            r_parts.append(np.repeat(np.arange(replicas), counts))
            u_parts.append(horizon * (1.0 - rng.random(total)))
            x_parts.append(sample_jump(measure, cell, rng, total))
    if not u_parts:
        return np.empty(0), np.empty(0), np.empty(0, dtype=np.int64)
    u, x, r = (np.concatenate(a) for a in (u_parts, x_parts, r_parts))
    order = np.lexsort((u, r))
    return u[order], x[order], r[order]


def _compensation(measure, eps):
    cut = 0.0 if is_finite_measure(measure) else eps
    return band_moment(measure, small_band(cut), 1.0, signed=True), cut


def sample_levy_with_jumps(triplet, horizon=1.0, eps=DEFAULT_EPS, rng=None, grid=None):
    """Levy path with every jump recorded (as innovation atoms)."""
    rng = np.random.default_rng() if rng is None else rng
    grid = _check_grid(np.linspace(0, horizon, 101) if grid is None else grid)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    cont = triplet.drift * grid
    if triplet.gaussian_variance > 0:
        incr = rng.standard_normal(len(grid) - 1) * np.sqrt(np.diff(grid))
        cont = cont + triplet.q * np.concatenate(([0.0], np.cumsum(incr)))
    u, x, _ = _levy_jumps(triplet.measure, horizon, eps, rng)
    ids = np.arange(len(u))
    pat = _sorted_pattern(horizon, u, x, np.ones(len(u), dtype=bool), ids, u,
                          np.zeros(len(u), dtype=np.int64), 1)
    comp, cut = _compensation(triplet.measure, eps)
    return SamplePath(grid, cont, pat, comp, triplet, 0.0, cut)


def reinforce_jumps(jumps, p, horizon, rng, return_kept=False):
    """Keep each jump with probability 1 - p and decorate the kept ones.

    The innovation ids of the result are the indices of the base jumps.
    """
    check_p(p)
    kept = rng.random(len(jumps)) < 1 - p
    u, x = jumps.times[kept], jumps.marks[kept]
    ids = np.flatnonzero(kept)
    if len(u):
        pat = decorate_innovations(u, x, jumps.replica[kept], p, horizon, rng,
                                   jumps.n_replicas, method="sequential")
        # map back to base jump indices
        pat = _sorted_pattern(horizon, pat.times, pat.marks, pat.is_innovation,
                              ids[pat.innovation_id], pat.innovation_time, pat.replica,
                              jumps.n_replicas)
    else:
        pat = empty_pattern(horizon, jumps.n_replicas)
    return (pat, kept) if return_kept else pat


def coupled_bm_values(p, grid, size, rng):
    """Arrays ``(B, B_hat)`` of shape ``(size, len(grid))``, exact at grid points."""
    check_p(p)
    if p >= 0.5:
        raise ValueError("NRBM requires p < 1/2")
    grid = _check_grid(grid)
    a, b = grid[:-1], grid[1:]
    dt = b - a
    c = (b ** (1 - p) - a ** (1 - p)) / (1 - p)
    v = (b ** (1 - 2 * p) - a ** (1 - 2 * p)) / (1 - 2 * p)
    l21 = c / np.sqrt(dt)
    l22 = np.sqrt(np.maximum(v - l21 ** 2, 0.0))
    k = len(dt)
    z = rng.standard_normal((4, size, k))
    dB = np.sqrt(dt) * z[0]
    iB = l21 * z[0] + l22 * z[1]
    iW = l21 * z[2] + l22 * z[3]
    mix = (1 - p) * iB + math.sqrt(1 - (1 - p) ** 2) * iW
    B = np.zeros((size, len(grid)))
    B_hat = np.zeros((size, len(grid)))
    B[:, 1:] = np.cumsum(dB, axis=1)
    B_hat[:, 1:] = grid[1:] ** p * np.cumsum(mix, axis=1)
    return B, B_hat


def sample_coupled_bm(p, grid, rng):
    grid = _check_grid(grid)
    B, B_hat = coupled_bm_values(p, grid, 1, rng)
    return CoupledBrownianPair(grid, B[0], B_hat[0], p)


def coupled_cov(p, s, t):
    """``E[B_s B_hat_t] = (s ^ t)^{1-p} t^p``."""
    return min(s, t) ** (1 - p) * t ** p


def sample_coupled_pair(triplet, p, eps=DEFAULT_EPS, grid=None, rng=None):
    check_admissible(p, triplet)
    rng = np.random.default_rng() if rng is None else rng
    grid = _check_grid(np.linspace(0, 1, 101) if grid is None else grid)
    horizon = float(grid[-1])
    base = sample_levy_with_jumps(triplet, horizon, eps, rng, grid=grid)
    cont = triplet.drift * grid
    base_cont = triplet.drift * grid
    if triplet.gaussian_variance > 0:
        bm = sample_coupled_bm(p, grid, rng)
        base_cont = base_cont + triplet.q * bm.B
        cont = cont + triplet.q * bm.B_hat
    base = SamplePath(grid, base_cont, base.jumps, base.compensation, triplet, 0.0, base.eps)
    pat, kept = reinforce_jumps(base.jumps, p, horizon, rng, return_kept=True)
    reinforced = SamplePath(grid, cont, pat, base.compensation, triplet, p, base.eps)
    return CoupledPaths(base, reinforced, base.jumps.times.copy(), kept)


def coupled_marginals(triplet, p, times, n_paths, rng, eps=DEFAULT_EPS):
    """Joint draws of ``(xi(t_j))_j`` and ``(xi_hat(t_j))_j`` from the coupling.

    Returns two arrays of shape ``(n_paths, k)``.
    """
    check_admissible(p, triplet)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    horizon = float(times[-1])
    base = np.tile(triplet.drift * times, (n_paths, 1))
    reinf = base.copy()
    if triplet.gaussian_variance > 0:
        B, B_hat = coupled_bm_values(p, np.concatenate(([0.0], times)), n_paths, rng)
        base += triplet.q * B[:, 1:]
        reinf += triplet.q * B_hat[:, 1:]
    u, x, rep = _levy_jumps(triplet.measure, horizon, eps, rng, n_paths)
    comp, _ = _compensation(triplet.measure, eps)
    if len(u):
        for j, t in enumerate(times):
            base[:, j] += np.bincount(rep, weights=x * (u <= t), minlength=n_paths)
        kept = rng.random(len(u)) < 1 - p
        z = counts_at(u[kept], times, p, rng)
        for j in range(len(times)):
            reinf[:, j] += np.bincount(rep[kept], weights=x[kept] * z[:, j], minlength=n_paths)
    base -= comp * times
    reinf -= comp * times
    return base, reinf


def levy_marginals(triplet, times, n_paths, rng, eps=DEFAULT_EPS):
    """Draws of ``(xi(t_1), ..., xi(t_k))`` for the Levy process itself."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.tile(triplet.drift * times, (n_paths, 1))
    if triplet.gaussian_variance > 0:
        incr = rng.standard_normal((n_paths, len(times))) * np.sqrt(np.diff(times, prepend=0.0))
        out += triplet.q * np.cumsum(incr, axis=1)
    u, x, rep = _levy_jumps(triplet.measure, float(times[-1]), eps, rng, n_paths)
    for j, t in enumerate(times):
        out[:, j] += np.bincount(rep, weights=x * (u <= t), minlength=n_paths)
    comp, _ = _compensation(triplet.measure, eps)
    return out - comp * times


def joint_charfn(triplet, p, times, lams, betas, n_mc, rng, horizon=None):
    """``E[exp(i sum_j (lam_j xi(t_j) + beta_j xi_hat(t_j)))]`` by Monte Carlo over (U, Y).

    Evaluates ``exp{t p E[psi(sum lam_j 1{U <= t_j/t})]
    + t (1-p) E[psi(sum (lam_j 1{Y(t_j/t) >= 1} + beta_j Y(t_j/t)))]}``.
    Returns ``(value, std_error)``.  ``p = 0`` gives the Levy process itself.
    """
    if not 0 <= p < 1:
        raise ValueError(f"p must lie in [0, 1), got {p}")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    t = float(times[-1]) if horizon is None else float(horizon)
    u = 1.0 - rng.random(n_mc)
    y = counts_at(u, times / t, p, rng)
    arg1 = (u[:, None] <= times / t) @ lams
    arg2 = (y >= 1) @ lams + y @ betas
    w = t * p * char_exponent(triplet, arg1) + t * (1 - p) * char_exponent(triplet, arg2)
    return _exp_mean(w)


def _exp_mean(w):
    w = np.asarray(w, dtype=complex)
    m = w.mean()
    value = complex(np.exp(m))
    se_m = math.sqrt((w.real.var(ddof=1) + w.imag.var(ddof=1)) / len(w)) if len(w) > 1 else 0.0
    return value, abs(value) * se_m
