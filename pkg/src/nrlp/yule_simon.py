"""Yule processes, Yule-Simon processes and the Yule-Simon distribution.

A standard Yule process ``Z`` starts from one individual and jumps from k to
k+1 at rate k.  The Yule-Simon process with parameter p is

    Y(t) = 1{U <= t} Z_{p (ln t - ln U)},   t in [0, 1],

with U uniform and independent of Z.  ``Y(1)`` has pmf ``p^{-1} B(k, 1/p + 1)``.

Two samplers are provided.  ``sample_standard_yule`` / ``sample_ys_path`` grow
a path gap by gap (the reference construction).  The batch samplers use two
exact shortcuts: ``Z_r`` is geometric with success probability ``e^{-r}``,
and given ``Z_r = n`` the ``n - 1`` birth times are iid on ``[0, r]`` with
density ``e^s / (e^r - 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betaln

from .measure import check_p

MAX_JUMPS = 10 ** 7


def sample_standard_yule(r, rng, max_jumps=MAX_JUMPS):
    """Birth times of a standard Yule process on ``[0, r]``; ``Z_r = 1 + len``."""
    if r < 0:
        raise ValueError("horizon must be non-negative")
    times = []
    t, k = 0.0, 1
    while True:
        t += rng.exponential(1.0 / k)
        if t > r:
            break
        times.append(t)
        k += 1
        if k > max_jumps:
            raise RuntimeError(f"Yule path exceeded {max_jumps} jumps")
    return np.array(times)


@dataclass(frozen=True, eq=False)
class YuleSimonPath:
    """Counting path on [0, 1]; ``jumps[0]`` is the first jump time U."""

    p: float
    jumps: np.ndarray

    @property
    def first_jump(self):
        return float(self.jumps[0])

    def value(self, t):
        out = np.searchsorted(self.jumps, t, side="right")
        return int(out) if np.ndim(t) == 0 else out


def sample_ys_path(p, rng, horizon=1.0):
    check_p(p)
    u = horizon * (1.0 - rng.random())   # uniform on (0, horizon]
    births = sample_standard_yule(p * np.log(horizon / u), rng)
    jumps = np.concatenate(([u], u * np.exp(births / p)))
    # rounding can push the last time a hair above the horizon
    return YuleSimonPath(p, np.minimum(jumps, horizon))


# ---------------------------------------------------------------------------
# batch samplers


def yule_births(r, rng):
    """Vectorised Yule populations on horizons ``r``.

    Returns ``(counts, owner, s)``: ``counts[i] = Z_{r[i]}`` and the birth
    times ``s`` of individuals 2..Z of population ``owner``.
    """
    r = np.asarray(r, dtype=float)
    counts = rng.geometric(np.exp(-r))
    owner = np.repeat(np.arange(len(r)), counts - 1)
    rr = r[owner]
    v = rng.random(len(owner))
    s = rr + np.log(v + (1.0 - v) * np.exp(-rr))
    return counts, owner, s


def decorate_batch(u, horizon, p, rng):
    """Repetition times ``u e^{T_n} <= horizon`` for many innovation times at once.

    Returns ``(owner, times)`` for repetitions only (the innovation itself is
    not included).
    """
    u = np.asarray(u, dtype=float)
    counts, owner, s = yule_births(p * np.log(horizon / u), rng)
    times = np.minimum(u[owner] * np.exp(s / p), horizon)
    return owner, times


def sample_ys_jump_times(p, size, rng, horizon=1.0):
    """Jump times of ``size`` Yule-Simon paths, flattened.

    Returns ``(first, owner, times)`` where ``first`` holds the first jump U of
    every path and ``(owner, times)`` lists the later jumps.
    """
    check_p(p)
    u = horizon * (1.0 - rng.random(size))
    owner, times = decorate_batch(u, horizon, p, rng)
    return u, owner, times


def counts_at(u, times, p, rng):
    """Values ``1{u <= t} Z_{p ln(t/u)}`` at increasing times, jointly.

    ``u`` holds the first jump of each path; the result has shape
    ``(len(u), len(times))``.  Uses the Markov property of Z: from k
    individuals, the population after a further time d is k plus a negative
    binomial(k, e^{-d}) number of births.
    """
    u = np.asarray(u, dtype=float)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    out = np.zeros((len(u), len(times)), dtype=np.int64)
    cur = np.zeros(len(u), dtype=np.int64)
    last = np.zeros(len(u))
    for j, t in enumerate(times):
        fresh = (u <= t) & (cur == 0)
        if np.any(fresh):
            cur[fresh] = rng.geometric((u[fresh] / t) ** p)
        old = (cur > 0) & ~fresh
        if np.any(old):
            prob = (last[old] / t) ** p
            cur[old] = cur[old] + rng.negative_binomial(cur[old], prob)
        last = np.where(u <= t, t, last)
        out[:, j] = cur
    return out


def sample_ys_values(p, times, size, rng):
    """``size`` independent draws of ``(Y(t_1), ..., Y(t_k))``."""
    check_p(p)
    u = 1.0 - rng.random(size)
    return counts_at(u, np.atleast_1d(times), p, rng)


# ---------------------------------------------------------------------------
# distribution and moments


def ys_logpmf(p, k):
    k = np.asarray(k, dtype=float)
    return -np.log(p) + betaln(k, 1.0 / p + 1.0)


def ys_pmf(p, k):
    """Yule-Simon pmf ``p^{-1} B(k, 1/p + 1)``, k >= 1."""
    check_p(p)
    k_arr = np.asarray(k)
    if np.any(k_arr < 1):
        raise ValueError("k must be >= 1")
    out = np.exp(ys_logpmf(p, k_arr))
    return float(out) if np.ndim(k) == 0 else out


def ys_sf(p, k):
    """``P(eta > k) = k B(k, 1/p + 1)``."""
    k = np.asarray(k, dtype=float)
    return np.where(k < 1, 1.0, np.exp(np.log(np.maximum(k, 1)) + betaln(np.maximum(k, 1), 1.0 / p + 1.0)))


def ys_support(p, tol=1e-12, kmax=10 ** 7):
    """Smallest K with ``P(eta > K) < tol`` (capped at kmax)."""
    k = 1
    while ys_sf(p, k) >= tol and k < kmax:
        k *= 2
    lo, hi = k // 2, k
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ys_sf(p, mid) < tol:
            hi = mid
        else:
            lo = mid
    return hi


def ys_expect(p, g, tol=1e-12, kmax=10 ** 7):
    """``E[g(eta)]`` by summing the pmf until the tail mass drops below tol.

    ``g`` must be vectorised and bounded by one for the error bound to hold.
    """
    kk = np.arange(1, ys_support(p, tol, kmax) + 1)
    return np.sum(g(kk) * ys_pmf(p, kk))


def ys_mean(p, t):
    check_p(p)
    return t / (1.0 - p)


def ys_cond_mean(p, k, s, t):
    """``E[Y(t) | Y(s) = k] = k (t/s)^p`` for ``0 < s <= t``."""
    check_p(p)
    if not 0 < s <= t:
        raise ValueError("need 0 < s <= t")
    return k * (t / s) ** p


def ys_cov(p, s, t):
    """Mixed moment ``E[Y(s) Y(t)]`` (not centred), finite only for p < 1/2."""
    check_p(p)
    if p >= 0.5:
        raise ValueError("second moment undefined for p >= 1/2")
    s, t = min(s, t), max(s, t)
    return s ** (1 - p) * t ** p / ((1 - p) * (1 - 2 * p))
