"""Discrete reinforcement of random walks and n-skeletons of Levy paths.

Given steps ``X_1, X_2, ...`` the reinforced steps are ``X_hat_1 = X_1`` and,
for n >= 1,

    X_hat_{n+1} = X_{n+1}           with probability 1 - p,
    X_hat_{n+1} = X_hat_{U[n]}      with probability p, U[n] uniform on {1..n}.

Picks are made by index, so every reinforced step is a copy of some original
step ``X_source``; ``N_k(n)`` counts how often step k is used among the first
n reinforced steps and ``S_hat_n = sum_k N_k(n) X_k``.

For walks with non-negative integer steps the law of ``S_hat_n`` can also be
computed exactly (see :func:`lattice_skeleton_pmf`): the walk only needs to
remember how many used steps carry each value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse, stats

from .coupling import joint_charfn, levy_marginals
from .measure import (FiniteAtoms, band_mass, band_moment, is_centered, is_finite_measure,
                      sample_jump, small_band)
from .paths import DEFAULT_EPS, sample_nrlp_marginals
from .point_process import mark_cells
from .yule_simon import ys_pmf


def _check_p0(p):
    if not 0 <= p < 1:
        raise ValueError(f"p must lie in [0, 1), got {p}")


@dataclass(frozen=True, eq=False)
class ReinforcedWalk:
    steps: np.ndarray
    reinforced_steps: np.ndarray
    source: np.ndarray          # 0-based index of the original step copied
    is_repetition: np.ndarray   # Bernoulli draws epsilon_n
    picked_index: np.ndarray    # 0-based index U[n] picked, -1 for innovations

    def __len__(self):
        return len(self.steps)

    @property
    def partial_sums(self):
        return np.cumsum(self.reinforced_steps)

    def counts(self, n):
        """Vector ``(N_1(n), ..., N_len(n))``."""
        return np.bincount(self.source[:n], minlength=len(self.steps))

    def count_matrix(self):
        """Sparse matrix with ``N_k(n)`` in row n-1, column k-1."""
        n = len(self.steps)
        rows = np.arange(n)
        inc = sparse.csr_matrix((np.ones(n), (rows, self.source)), shape=(n, n)).toarray()
        return sparse.csr_matrix(np.cumsum(inc, axis=0))


def reinforce_steps(X, p, rng):
    """Reinforce a single sequence of steps."""
    _check_p0(p)
    X = np.asarray(X, dtype=float)
    n = len(X)
    if n == 0:
        raise ValueError("need at least one step")
    rep = rng.random(n) < p
    rep[0] = False
    picks = np.full(n, -1, dtype=np.int64)
    idx = np.arange(1, n)
    picks[1:] = np.where(rep[1:], np.floor(rng.random(n - 1) * idx).astype(np.int64), -1)
    src = np.arange(n)
    for m in np.flatnonzero(rep):
        src[m] = src[picks[m]]
    return ReinforcedWalk(X, X[src], src, rep, picks)


def reinforce_sources(n_walks, n, p, rng):
    """Source indices for ``n_walks`` independent reinforcements of length n."""
    _check_p0(p)
    src = np.empty((n_walks, n), dtype=np.int32)
    src[:, 0] = 0
    rows = np.arange(n_walks)
    for m in range(1, n):
        rep = rng.random(n_walks) < p
        pick = (rng.random(n_walks) * m).astype(np.int32)
        src[:, m] = np.where(rep, src[rows, pick], m)
    return src


def reinforced_sums(X, p, rng, at=None, chunk=500):
    """Partial sums ``S`` and ``S_hat`` of many walks (rows of X) at step counts ``at``."""
    X = np.asarray(X, dtype=float)
    w, n = X.shape
    at = np.array([n] if at is None else at, dtype=np.int64)
    S = np.cumsum(X, axis=1)[:, at - 1]
    S_hat = np.empty((w, len(at)))
    for i0 in range(0, w, chunk):
        block = X[i0:i0 + chunk]
        src = reinforce_sources(len(block), n, p, rng)
        csum = np.cumsum(np.take_along_axis(block, src, axis=1), axis=1)
        S_hat[i0:i0 + chunk] = csum[:, at - 1]
    return S, S_hat


# ---------------------------------------------------------------------------
# skeletons


def levy_increments(triplet, n, size, rng, eps=DEFAULT_EPS, horizon=1.0):
    """Increments of ``size`` Levy paths over the mesh ``horizon / n``; shape (size, n)."""
    dt = horizon / n
    measure = triplet.measure
    cells = mark_cells(measure, None if is_finite_measure(measure) else eps)
    cut = 0.0 if is_finite_measure(measure) else eps
    comp = band_moment(measure, small_band(cut), 1.0, signed=True)
    out = np.full((size, n), (triplet.drift - comp) * dt)
    if triplet.gaussian_variance > 0:
        out += triplet.q * math.sqrt(dt) * rng.standard_normal((size, n))
    flat = out.reshape(-1)
    for cell in cells:
        mass = band_mass(measure, cell)
        if mass <= 0:
            continue
        counts = rng.poisson(mass * dt, size=size * n)
        total = int(counts.sum())
        if total:
            x = sample_jump(measure, cell, rng, total)
            np.add.at(flat, np.repeat(np.arange(size * n), counts), x)
    return out


@dataclass(frozen=True, eq=False)
class SkeletonPair:
    n: int
    S: np.ndarray
    S_hat: np.ndarray
    walk: ReinforcedWalk


def skeleton_pair(sampler, n, p, rng, eps=DEFAULT_EPS):
    """n-skeleton of a Levy path and its reinforced version.

    ``sampler`` is a triplet or a callable ``(n, rng) -> increments``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if callable(sampler):
        X = np.asarray(sampler(n, rng), dtype=float)
    else:
        X = levy_increments(sampler, n, 1, rng, eps)[0]
    walk = reinforce_steps(X, p, rng)
    S = np.concatenate(([0.0], np.cumsum(X)))
    S_hat = np.concatenate(([0.0], walk.partial_sums))
    return SkeletonPair(n, S, S_hat, walk)


# ---------------------------------------------------------------------------
# martingale of the reinforced walk


def bercu_coefficients(p, n):
    """``a_k = prod_{j=1}^{k-1} j / (j + p)`` for k = 1..n."""
    j = np.arange(1, n)
    return np.concatenate(([1.0], np.cumprod(j / (j + p))))


def _reinforced(walk):
    if isinstance(walk, ReinforcedWalk):
        return walk.reinforced_steps
    return np.asarray(walk, dtype=float)


def _check_centered(triplet):
    if triplet is not None and not is_centered(triplet):
        raise ValueError("martingale requires centered steps")


def bercu_martingale(walk, p, triplet=None):
    """``M_n = a_n S_hat_n`` along the last axis of the reinforced steps."""
    _check_centered(triplet)
    xh = _reinforced(walk)
    n = xh.shape[-1]
    return bercu_coefficients(p, n) * np.cumsum(xh, axis=-1)


def predictable_qv(walk, p, sigma2, triplet=None):
    """``<M>_n = sigma2 + sum_{k=2}^n a_k^2 ((1-p) sigma2 - p^2 S_hat_{k-1}^2/(k-1)^2 + p V_hat_{k-1}/(k-1))``."""
    _check_centered(triplet)
    xh = _reinforced(walk)
    n = xh.shape[-1]
    a = bercu_coefficients(p, n)
    s = np.cumsum(xh, axis=-1)[..., :-1]
    v = np.cumsum(xh ** 2, axis=-1)[..., :-1]
    k1 = np.arange(1, n)
    terms = a[1:] ** 2 * ((1 - p) * sigma2 - p * p * s ** 2 / k1 ** 2 + p * v / k1)
    first = np.full(xh.shape[:-1] + (1,), float(sigma2))
    return np.concatenate((first, sigma2 + np.cumsum(terms, axis=-1)), axis=-1)


# ---------------------------------------------------------------------------
# exact laws for non-negative integer steps


def _partitions(K):
    """All count vectors c (index v-1 for value v) with sum v c_v <= K."""
    out = []

    def rec(v, remaining, cur):
        if v > K:
            out.append(tuple(cur))
            return
        for c in range(remaining // v + 1):
            cur.append(c)
            rec(v + 1, remaining - c * v, cur)
            cur.pop()

    rec(1, K, [])
    return out


def lattice_step_pmf(triplet, n, K):
    """pmf on 0..K of one skeleton step of an integer-valued compound Poisson triplet."""
    if not lattice_ready(triplet):
        raise ValueError("triplet is not a non-negative integer compound Poisson")
    pmf = np.zeros(K + 1)
    pmf[0] = 1.0
    for x, r in triplet.measure.atoms:
        k = int(round(x))
        single = np.zeros(K + 1)
        jumps = np.arange(0, K // k + 1)
        single[jumps * k] = stats.poisson.pmf(jumps, r / n)
        pmf = np.convolve(pmf, single)[:K + 1]
    return pmf


def lattice_ready(triplet):
    m = triplet.measure
    if triplet.gaussian_variance != 0 or not isinstance(m, FiniteAtoms) or not m.atoms:
        return False
    x = m.locations
    if np.any(x <= 0) or np.any(np.abs(x - np.round(x)) > 1e-12):
        return False
    net_drift = triplet.drift - band_moment(m, small_band(), 1.0, signed=True)
    return abs(net_drift) < 1e-12


def lattice_skeleton_pmf(step_pmf, p, n, K):
    """Exact pmf of ``S_hat_n`` on 0..K for iid steps with pmf ``step_pmf`` on 0..K.

    Markov chain on count vectors ``c_v = #{used steps of value v}``; mass
    above K is dropped, which does not affect the cdf on 0..K because
    ``S_hat`` is non-decreasing.
    """
    _check_p0(p)
    states = _partitions(K)
    index = {s: i for i, s in enumerate(states)}
    ns = len(states)
    total = np.array([sum((v + 1) * c for v, c in enumerate(s)) for s in states])
    used = np.array([sum(s) for s in states], dtype=float)
    shifts = []
    copy_rows, copy_cols, copy_vals = [], [], []
    for v in range(1, K + 1):
        rows, cols = [], []
        for i, s in enumerate(states):
            if total[i] + v <= K:
                t = list(s)
                t[v - 1] += 1
                j = index[tuple(t)]
                rows.append(i)
                cols.append(j)
                if s[v - 1]:
                    copy_rows.append(i)
                    copy_cols.append(j)
                    copy_vals.append(s[v - 1])
        shifts.append(sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(ns, ns)))
    innov = step_pmf[0] * sparse.identity(ns, format="csr")
    for v in range(1, K + 1):
        innov = innov + step_pmf[v] * shifts[v - 1]
    copy = sparse.csr_matrix((copy_vals, (copy_rows, copy_cols)), shape=(ns, ns))
    innov_t, copy_t = innov.T.tocsr(), copy.T.tocsr()
    pi = np.zeros(ns)
    pi[index[tuple([0] * K)]] = 1.0
    pi = innov_t @ pi
    for m in range(1, n):
        pi = (1 - p) * (innov_t @ pi) + p * (pi - used * pi / m + (copy_t @ pi) / m)
    return np.bincount(total, weights=pi, minlength=K + 1)


def compound_ys_pmf(triplet, p, t, K):
    """Exact pmf on 0..K of ``xi_hat(t)`` for an integer compound Poisson triplet.

    ``xi_hat(t)`` is compound Poisson with rate ``(1-p) t measure(R)`` and jumps
    ``x eta`` with eta Yule-Simon; the pmf follows from Panjer's recursion.
    """
    if not lattice_ready(triplet):
        raise ValueError("triplet is not a non-negative integer compound Poisson")
    m = triplet.measure
    lam = (1 - p) * t * m.rates.sum()
    g = np.zeros(K + 1)
    kk = np.arange(1, K + 1)
    for x, r in m.atoms:
        k = int(round(x))
        g[kk[kk * k <= K] * k] += r / m.rates.sum() * ys_pmf(p, kk[kk * k <= K])
    f = np.zeros(K + 1)
    f[0] = math.exp(-lam)
    for k in range(1, K + 1):
        i = np.arange(1, k + 1)
        f[k] = lam / k * np.sum(i * g[i] * f[k - i])
    return f


def lattice_ks_distance(triplet, p, n, K=25):
    """``max_{k <= K} |P(S_hat_n <= k) - P(xi_hat(1) <= k)|`` computed exactly."""
    skel = lattice_skeleton_pmf(lattice_step_pmf(triplet, n, K), p, n, K)
    limit = compound_ys_pmf(triplet, p, 1.0, K)
    return float(np.max(np.abs(np.cumsum(skel) - np.cumsum(limit))))


# ---------------------------------------------------------------------------
# convergence experiment


def _pure_gaussian(triplet):
    return band_mass(triplet.measure) == 0


def gaussian_mixture_distance(triplet, p, n, t, n_walks, rng, chunk=500, grid_size=2001):
    """KS distance between ``S_hat_{floor(n t)}`` and its Gaussian limit, conditionally on counts.

    For Gaussian steps, given the counts ``N_k`` the reinforced sum is normal
    with variance ``q^2 sum_k N_k^2 / n``, so the skeleton CDF is an average of
    normal CDFs over simulated count vectors.  This has far less Monte Carlo
    noise than an empirical KS distance.
    """
    m = max(int(math.floor(n * t)), 1)
    var = np.empty(n_walks)
    for i0 in range(0, n_walks, chunk):
        w = min(chunk, n_walks - i0)
        src = reinforce_sources(w, m, p, rng)
        counts = np.zeros((w, m))
        np.add.at(counts, (np.repeat(np.arange(w), m), src.reshape(-1)), 1.0)
        var[i0:i0 + w] = triplet.gaussian_variance * np.sum(counts ** 2, axis=1) / n
    mean = triplet.drift * m / n
    sd = math.sqrt(triplet.gaussian_variance * t / (1 - 2 * p))
    x = triplet.drift * t + sd * np.linspace(-6, 6, grid_size)
    mix = np.zeros(grid_size)
    for i0 in range(0, n_walks, chunk):
        v = var[i0:i0 + chunk, None]
        mix += stats.norm.cdf((x[None, :] - mean) / np.sqrt(v)).sum(axis=0)
    mix /= n_walks
    return float(np.max(np.abs(mix - stats.norm.cdf(x, triplet.drift * t, sd))))


def convergence_experiment(triplet, p, n_list, probes=(1.0,), n_paths=5000, rng=None,
                           eps=DEFAULT_EPS, charfn_probe=(1.0, 1.0), n_mc=100_000, exact_K=25):
    """Distances between skeleton marginals and the limiting NRLP marginals.

    For each n and probe time t: the KS distance between ``S_hat_{floor(n t)}``
    and ``xi_hat(t)`` (one-sample against the exact Gaussian law for pure
    Gaussian triplets, two-sample against synthesised paths otherwise), and
    the gap between the empirical joint char function of ``(S, S_hat)`` and
    the limiting one at ``charfn_probe = (lam, beta)``.  For non-negative
    integer compound Poisson triplets the exact KS distance at t = 1 is also
    reported (``exact_distance``); for pure Gaussian triplets ``exact_distance``
    is the conditional-on-counts distance of :func:`gaussian_mixture_distance`.
    """
    _check_p0(p)
    rng = np.random.default_rng() if rng is None else rng
    if len(n_list) == 0:
        raise ValueError("empty n_list")
    probes = np.sort(np.atleast_1d(np.asarray(probes, dtype=float)))
    if p > 0:
        ref = sample_nrlp_marginals(triplet, p, probes, n_paths, rng, eps)
    else:
        ref = levy_marginals(triplet, probes, n_paths, rng, eps)
    lam, beta = charfn_probe
    rows = []
    for n in n_list:
        at = np.maximum(np.floor(n * probes).astype(np.int64), 1)
        X = levy_increments(triplet, n, n_paths, rng, eps)
        S, S_hat = reinforced_sums(X, p, rng, at)
        exact = math.nan
        if lattice_ready(triplet):
            exact = lattice_ks_distance(triplet, p, n, exact_K)
        for j, t in enumerate(probes):
            if _pure_gaussian(triplet):
                sd = math.sqrt(triplet.gaussian_variance * t / (1 - 2 * p))
                ks = stats.kstest(S_hat[:, j], stats.norm(triplet.drift * t, sd).cdf).statistic
                exact = gaussian_mixture_distance(triplet, p, n, t, n_paths, rng)
            else:
                ks = stats.ks_2samp(S_hat[:, j], ref[:, j]).statistic
            z = lam * S[:, j] + beta * S_hat[:, j]
            emp = complex(np.cos(z).mean(), np.sin(z).mean())
            target, _ = joint_charfn(triplet, p, [t], [lam], [beta], n_mc, rng)
            rows.append({"n": int(n), "probe_time": float(t), "ks_distance": float(ks),
                         "charfn_gap": float(abs(emp - target)),
                         "exact_distance": exact if t == 1.0 or _pure_gaussian(triplet)
                         else math.nan})
    return rows
