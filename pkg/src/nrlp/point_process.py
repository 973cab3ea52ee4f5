"""Noise reinforced Poisson point processes (NRPPP) built by decoration.

Innovations ``(u, x)`` form a Poisson process with intensity
``(1 - p) du measure(dx)``.  Each innovation is repeated at the times
``u e^{T_n}``, where ``0 = T_0 < T_1 < ...`` has independent gaps
``T_n - T_{n-1} ~ Exp(p n)``; all repetitions carry the mark of their
innovation.  The resulting pattern has intensity ``dt measure(dx)``.

For infinite measures the marks are cut at a truncation level ``eps``; the
cells are ``{|x| > 1}`` and the rings ``{1/(j+1) <= |x| < 1/j}`` down to eps.
Since a superposition of independent Poisson processes is again Poisson, the
rings are sampled jointly and each atom records its ring index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .measure import (Band, FULL, band_mass, band_moment, check_p, is_finite_measure,
                      large_band, sample_jump, small_band)
from .yule_simon import MAX_JUMPS, decorate_batch, sample_ys_jump_times


def sample_decoration(u, horizon, p, rng, max_jumps=MAX_JUMPS):
    """Times ``u e^{T_n}`` up to the horizon, starting with u itself."""
    if u > horizon:
        return np.empty(0)
    out = [u]
    big_t, n = 0.0, 1
    while True:
        big_t += rng.exponential(1.0 / (p * n))
        s = u * math.exp(big_t)
        if s > horizon:
            break
        out.append(s)
        n += 1
        if n > max_jumps:
            raise RuntimeError(f"decoration exceeded {max_jumps} repetitions")
    return np.array(out)


@dataclass(frozen=True, eq=False)
class MarkedPointPattern:
    """Struct-of-arrays marked pattern; may hold several independent replicas."""

    horizon: float
    times: np.ndarray
    marks: np.ndarray
    is_innovation: np.ndarray
    innovation_id: np.ndarray
    innovation_time: np.ndarray
    replica: np.ndarray
    n_replicas: int = 1
    ring: np.ndarray | None = None
    eps: float = 0.0
    dropped_second_moment: float = 0.0

    def __len__(self):
        return len(self.times)

    @property
    def origin(self):
        return np.where(self.is_innovation, "innovation", "repetition")

    def subset(self, mask):
        sel = lambda a: None if a is None else a[mask]
        return replace(self, times=self.times[mask], marks=self.marks[mask],
                       is_innovation=self.is_innovation[mask],
                       innovation_id=self.innovation_id[mask],
                       innovation_time=self.innovation_time[mask],
                       replica=self.replica[mask], ring=sel(self.ring))

    def restrict(self, band):
        return self.subset(band.contains(self.marks))

    def until(self, t):
        return self.subset(self.times <= t)

    def replica_pattern(self, r):
        out = self.subset(self.replica == r)
        return replace(out, replica=np.zeros(len(out), dtype=np.int64), n_replicas=1)


def empty_pattern(horizon=1.0, n_replicas=1):
    z = np.empty(0)
    zi = np.empty(0, dtype=np.int64)
    return MarkedPointPattern(horizon, z, z, np.empty(0, dtype=bool), zi, z, zi, n_replicas, zi)


def _sorted_pattern(horizon, times, marks, is_innov, ids, innov_t, rep, n_rep, **kw):
    order = np.lexsort((times, rep))
    ring = ring_index(marks)
    return MarkedPointPattern(horizon, times[order], marks[order], is_innov[order], ids[order],
                              innov_t[order], rep[order], n_rep, ring[order], **kw)


def ring_index(marks):
    """0 for |x| > 1, else j with 1/(j+1) <= |x| < 1/j (|x| = 1 goes to ring 1)."""
    ax = np.abs(np.asarray(marks, dtype=float))
    with np.errstate(divide="ignore"):
        j = np.ceil(1.0 / ax) - 1
    j = np.where(ax > 1, 0, np.maximum(j, 1))
    return j.astype(np.int64)


def ring_partition(eps, max_rings=10 ** 6):
    """The cells ``{|x| > 1}``, ``{1/2 <= |x| <= 1}``, ``{1/(j+1) <= |x| < 1/j}`` cut at eps."""
    if eps <= 0:
        raise ValueError("truncation required")
    rings = [large_band(), Band(max(0.5, eps), 1.0, True)]
    j = 2
    while 1.0 / j > eps:
        if j > max_rings:
            raise ValueError("too many rings; use a larger eps")
        rings.append(Band(max(1.0 / (j + 1), eps), 1.0 / j))
        j += 1
    return rings


def mark_cells(measure, eps=None):
    """Bands of finite mass covering the support of the (truncated) measure."""
    if eps is None or eps == 0:
        if not is_finite_measure(measure):
            raise ValueError("truncation required")
        return [FULL]
    if eps < 0:
        raise ValueError("truncation required")
    return [large_band(), small_band(eps)]


def sample_nrppp(measure, p, horizon=1.0, rng=None, eps=None, replicas=1, method="auto",
                 band=None):
    """Sample an NRPPP with characteristic measure ``measure`` on ``(0, horizon]``.

    ``method`` is ``"sequential"`` (decorations gap by gap), ``"batch"``
    (vectorised, via the conditional law of Yule birth times) or ``"auto"``
    (sequential for a single replica).  ``band`` restricts the marks to a
    mark set of finite mass instead of truncating at ``eps``.
    """
    check_p(p)
    rng = np.random.default_rng() if rng is None else rng
    if method == "auto":
        method = "sequential" if replicas == 1 else "batch"
    cells = [band] if band is not None else mark_cells(measure, eps)
    u_parts, x_parts, r_parts = [], [], []
    for cell in cells:
        mass = band_mass(measure, cell)
        if mass <= 0:
            continue
        counts = rng.poisson((1 - p) * mass * horizon, size=replicas)
        total = int(counts.sum())
        if total == 0:
            continue
        r_parts.append(np.repeat(np.arange(replicas), counts))
        u_parts.append(horizon * (1.0 - rng.random(total)))
        x_parts.append(sample_jump(measure, cell, rng, total))
    dropped = 0.0
    if eps:
        dropped = band_moment(measure, Band(0.0, eps), 2.0)
    if not u_parts:
        return replace(empty_pattern(horizon, replicas), eps=eps or 0.0,
                       dropped_second_moment=dropped)
    u = np.concatenate(u_parts)
    x = np.concatenate(x_parts)
    rep = np.concatenate(r_parts)
    return decorate_innovations(u, x, rep, p, horizon, rng, replicas, method,
                                eps=eps or 0.0, dropped_second_moment=dropped)


def decorate_innovations(u, x, rep, p, horizon, rng, n_replicas=1, method="batch", **kw):
    """Attach decorations to innovations ``(u, x)`` belonging to replicas ``rep``."""
    m = len(u)
    ids = np.arange(m)
    if method == "sequential":
        decos = [sample_decoration(ui, horizon, p, rng) for ui in u]
        lens = np.array([len(d) for d in decos], dtype=np.int64)
        owner = np.repeat(ids, lens)
        times = np.concatenate(decos) if m else np.empty(0)
        is_innov = np.zeros(len(times), dtype=bool)
        is_innov[np.concatenate(([0], np.cumsum(lens)[:-1]))[lens > 0]] = True
    elif method == "batch":
        owner_r, times_r = decorate_batch(u, horizon, p, rng)
        owner = np.concatenate((ids, owner_r))
        times = np.concatenate((u, times_r))
        is_innov = np.concatenate((np.ones(m, dtype=bool), np.zeros(len(times_r), dtype=bool)))
    else:
        raise ValueError(f"unknown method {method!r}")
    return _sorted_pattern(horizon, times, x[owner], is_innov, owner, u[owner], rep[owner],
                           n_replicas, **kw)


def counting_process(pat, band, t):
    """``#{atoms with time <= t and mark in band}``, per replica for batches."""
    if t > pat.horizon * (1 + 1e-12):
        raise ValueError("t exceeds the pattern horizon")
    mask = (pat.times <= t) & band.contains(pat.marks)
    if pat.n_replicas == 1:
        return int(np.count_nonzero(mask))
    return np.bincount(pat.replica[mask], minlength=pat.n_replicas)


def thin_pattern(pat, keep_prob, rng):
    """Bernoulli thinning of whole innovation families."""
    ids, inv = np.unique(pat.innovation_id, return_inverse=True)
    keep = rng.random(len(ids)) < keep_prob
    mask = keep[inv]
    return pat.subset(mask), pat.subset(~mask)


def superpose(a, b):
    """Union of two patterns on the same horizon (innovation ids of b shifted)."""
    if a.horizon != b.horizon or a.n_replicas != b.n_replicas:
        raise ValueError("patterns must share horizon and replica count")
    shift = (a.innovation_id.max() + 1) if len(a) else 0
    cat = lambda f: np.concatenate((getattr(a, f), getattr(b, f)))
    return _sorted_pattern(a.horizon, cat("times"), cat("marks"), cat("is_innovation"),
                           np.concatenate((a.innovation_id, b.innovation_id + shift)),
                           cat("innovation_time"), cat("replica"), a.n_replicas)


def laplace_functional(measure, p, t, f, n_mc, rng):
    """``exp{-t (1-p) int measure(dx) E[1 - exp(-int_0^1 f(s t, x) dY(s))]}``.

    ``f(s, x)`` is a vectorised non-negative function on ``(0, t] x marks``
    and ``measure`` must be finite.  The inner expectation is a Monte Carlo
    average over ``n_mc`` Yule-Simon paths; returns ``(value, std_error)``.
    """
    check_p(p)
    total = band_mass(measure, FULL)
    if not np.isfinite(total):
        raise ValueError("laplace_functional needs a finite measure")
    if total == 0:
        return 1.0, 0.0
    x = sample_jump(measure, FULL, rng, n_mc)
    first, owner, times = sample_ys_jump_times(p, n_mc, rng)
    integral = np.asarray(f(first * t, x), dtype=float)
    integral = integral + np.bincount(owner, weights=np.asarray(f(times * t, x[owner]), dtype=float),
                                      minlength=n_mc)
    g = -np.expm1(-integral)
    inner = total * g.mean()
    value = math.exp(-t * (1 - p) * inner)
    se = value * t * (1 - p) * total * g.std(ddof=1) / math.sqrt(n_mc)
    return value, se


def pattern_rows(pat, pattern_id=None):
    """Rows ``(pattern_id, time, mark, origin, innovation_id, innovation_time)``."""
    pid = pat.replica if pattern_id is None else np.full(len(pat), pattern_id)
    origin = pat.origin
    for i in range(len(pat)):
        yield (int(pid[i]), float(pat.times[i]), float(pat.marks[i]), str(origin[i]),
               int(pat.innovation_id[i]), float(pat.innovation_time[i]))
