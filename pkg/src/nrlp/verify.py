"""Statistical verification suites.

Every check produces a :class:`VerificationReport`.  Mean-type checks pass
when ``|estimate - target| <= tolerance_multiple * std_error`` (4 standard
errors by default); distribution checks use KS or chi-square p-values at
level 0.01; trend checks state their own criterion.  Each registered check
owns a random stream derived from ``(seed, suite/name)``, so a suite is
deterministic and independent of execution order.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .coupling import (coupled_bm_values, coupled_cov, coupled_marginals, joint_charfn,
                       sample_coupled_pair)
from .measure import (Band, FULL, FiniteAtoms, LevyTriplet, StableLike, band_mass, band_moment,
                      check_admissible, check_p, poisson_triplet)
from .paths import (compensator_residual, empirical_charfn, fdd_charfn, nrbm_cov, nrbm_values,
                    sample_compensated_series, sample_nrlp_marginals, sample_reinforced_cpp,
                    series_sup, synthesize_nrlp)
from .point_process import (counting_process, laplace_functional, sample_nrppp, thin_pattern)
from .seeding import derive_rng
from .skeleton import (bercu_martingale, lattice_ks_distance, levy_increments, predictable_qv,
                       reinforce_sources, reinforce_steps, reinforced_sums)
from .yule_simon import (counts_at, sample_standard_yule, sample_ys_path, sample_ys_values,
                         ys_cov, ys_mean, ys_pmf, ys_sf, ys_support)

TOL = 4.0
LEVEL = 0.01


@dataclass
class VerificationReport:
    test_name: str
    anchor: str
    estimate: object
    target: object
    std_error: float
    n_samples: int
    criterion: str
    verdict: str
    tolerance_multiple: float = TOL
    seed: int | None = None
    suite: str = ""
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_dict(self):
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def reports_to_json(reports):
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"


def _verdict(ok):
    return "pass" if bool(ok) else "fail"


def se_report(name, anchor, estimate, target, se, n, tol=TOL, **details):
    ok = abs(estimate - target) <= tol * se
    return VerificationReport(name, anchor, estimate, target, float(se), int(n),
                              f"|estimate - target| <= {tol:g} SE", _verdict(ok), tol,
                              details=details)


def mean_report(name, anchor, samples, target, **details):
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    return se_report(name, anchor, float(samples.mean()), target,
                     float(samples.std(ddof=1) / math.sqrt(n)), n, **details)


def pvalue_report(name, anchor, pvalue, n, test="KS", **details):
    return VerificationReport(name, anchor, float(pvalue), LEVEL, math.nan, int(n),
                              f"{test} p-value > {LEVEL:g}", _verdict(pvalue > LEVEL), TOL,
                              details=details)


def charfn_report(name, anchor, emp, emp_se, formula, formula_se, n, **details):
    se = math.hypot(emp_se, formula_se)
    ok = abs(emp - formula) <= TOL * se
    return VerificationReport(name, anchor, complex(emp), complex(formula), se, int(n),
                              f"|empirical - formula| <= {TOL:g} combined SE", _verdict(ok),
                              details=dict(gap=abs(emp - formula), **details))


# ---------------------------------------------------------------------------
# registry

SUITES = ("yule_simon", "point_process", "paths", "coupling", "skeleton", "growth", "small_time")
REGISTRY = {s: [] for s in SUITES}


def register(suite, name, anchor):
    if not anchor:
        raise ValueError(f"check {name!r} needs an anchor")
    if suite not in REGISTRY:
        raise ValueError(f"unknown suite {suite!r}")

    def deco(fn):
        REGISTRY[suite].append((name, anchor, fn))
        return fn

    return deco


def _run_check(args):
    suite, index, seed, config = args
    name, anchor, fn = REGISTRY[suite][index]
    rng = derive_rng(seed, f"{suite}/{name}")
    out = fn(rng, config)
    out = out if isinstance(out, list) else [out]
    for r in out:
        r.seed = int(seed)
        r.suite = suite
        if not r.anchor:
            r.anchor = anchor
    return out


def run_suite(name, config=None, seed=1, workers=1):
    """Run every check of a suite (or ``"all"``) and return the reports in registry order."""
    config = dict(config or {})
    suites = SUITES if name == "all" else (name,)
    for s in suites:
        if s not in REGISTRY:
            raise ValueError(f"unknown suite {s!r}")
    jobs = [(s, i, seed, config) for s in suites for i in range(len(REGISTRY[s]))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_check, jobs))
    else:
        results = [_run_check(j) for j in jobs]
    return [r for chunk in results for r in chunk]


def _cfg(config, key, default):
    val = config.get(key, default)
    if isinstance(default, int):
        return int(float(val))
    return type(default)(val)


# ---------------------------------------------------------------------------
# yule_simon suite


@register("yule_simon", "ys_pmf_chi2", "Y(1) has the Yule-Simon pmf p^-1 B(k, 1/p + 1)")
def _ys_pmf(rng, config):
    p, n = 0.5, _cfg(config, "yule_simon.n", 100_000)
    y1 = sample_ys_values(p, [1.0], n, rng)[:, 0]
    kmax = 1
    while n * ys_pmf(p, kmax + 1) >= 5:
        kmax += 1
    ks = np.arange(1, kmax + 1)
    expected = n * ys_pmf(p, ks)
    observed = np.array([np.sum(y1 == k) for k in ks], dtype=float)
    expected = np.append(expected, n - expected.sum())
    observed = np.append(observed, np.sum(y1 > kmax))
    chi = stats.chisquare(observed, expected)
    return pvalue_report("ys_pmf_chi2", "", chi.pvalue, n, test="chi-square",
                         statistic=float(chi.statistic), bins=int(len(observed)))


@register("yule_simon", "ys_mean", "E[Y(t)] = t / (1 - p)")
def _ys_means(rng, config):
    n = _cfg(config, "yule_simon.n", 100_000)
    out = []
    for p in (0.2, 0.5, 0.8):
        y = sample_ys_values(p, [0.25, 1.0], n, rng)
        for j, t in enumerate((0.25, 1.0)):
            details = {}
            if p >= 0.5:
                # infinite variance: the sample SE is unreliable, so also record the
                # mean of min(Y(t), cap) against its exact value
                cap = 1000
                kk = np.arange(1, cap)
                exact = t * np.sum(kk * ys_pmf(p, kk)) + t * cap * ys_sf(p, cap - 1)
                capped = np.minimum(y[:, j], cap)
                details = dict(cap=cap, capped_mean=float(capped.mean()), capped_target=float(exact),
                               capped_se=float(capped.std(ddof=1) / math.sqrt(n)))
            out.append(mean_report(f"ys_mean[p={p},t={t}]", "", y[:, j], ys_mean(p, t), **details))
    return out


@register("yule_simon", "ys_mixed_moment", "E[Y(s) Y(t)] = s^(1-p) t^p / ((1-p)(1-2p))")
def _ys_cov(rng, config):
    n = _cfg(config, "yule_simon.n", 100_000)
    p = 0.25
    y = sample_ys_values(p, [0.5, 1.0], n, rng)
    return mean_report("ys_mixed_moment[p=0.25,s=0.5,t=1]", "", y[:, 0] * y[:, 1],
                       ys_cov(p, 0.5, 1.0))


@register("yule_simon", "ys_first_jump", "P(Y(t) >= 1) = t")
def _ys_first(rng, config):
    n = _cfg(config, "yule_simon.n", 100_000)
    y = sample_ys_values(0.5, [0.25, 0.5, 1.0], n, rng)
    return [mean_report(f"ys_first_jump[t={t}]", "", y[:, j] >= 1, t)
            for j, t in enumerate((0.25, 0.5, 1.0))]


@register("yule_simon", "ys_self_similarity",
          "given Y(s) >= 1, (Y(r s))_r has the law of Y")
def _ys_self_sim(rng, config):
    n = _cfg(config, "yule_simon.n", 100_000)
    y = sample_ys_values(0.5, [0.5], 2 * n, rng)[:, 0]
    cond = y[y >= 1]
    ref = sample_ys_values(0.5, [1.0], len(cond), rng)[:, 0]
    res = stats.ks_2samp(cond, ref)
    return pvalue_report("ys_self_similarity", "", res.pvalue, len(cond),
                         statistic=float(res.statistic))


@register("yule_simon", "ys_markov", "E[Y(t) | Y(s) = k] = k (t/s)^p")
def _ys_markov(rng, config):
    n = _cfg(config, "yule_simon.n", 100_000)
    p, s = 0.25, 0.5
    y = sample_ys_values(p, [s, 1.0], n, rng)
    out = []
    for k in (1, 2):
        ind = y[:, 0] == k
        out.append(mean_report(f"ys_markov[k={k}]", "", ind * (y[:, 1] - k * (1.0 / s) ** p), 0.0))
    return out


@register("yule_simon", "ys_two_samplers", "sequential Yule clock and batch sampler agree in law")
def _ys_samplers(rng, config):
    n = _cfg(config, "yule_simon.n_seq", 20_000)
    seq = np.array([sample_ys_path(0.5, rng).value(1.0) for _ in range(n)])
    batch = sample_ys_values(0.5, [1.0], n, rng)[:, 0]
    res = stats.ks_2samp(seq, batch)
    return pvalue_report("ys_two_samplers", "", res.pvalue, n, statistic=float(res.statistic))


@register("yule_simon", "yule_standard", "Z_r is geometric with parameter e^-r, E[Z_r] = e^r")
def _yule_standard(rng, config):
    n = _cfg(config, "yule_simon.n", 100_000)
    z = np.array([1 + len(sample_standard_yule(1.0, rng)) for _ in range(n)])
    mean = mean_report("yule_mean[r=1]", "", z, math.e)
    ks = np.arange(1, 11)
    emp = np.array([np.mean(z == k) for k in ks])
    err = float(np.max(np.abs(emp - stats.geom.pmf(ks, math.exp(-1)))))
    geo = VerificationReport("yule_geometric[r=1]", "", err, 0.0, math.nan, n,
                             "max pmf error < 0.005", _verdict(err < 0.005))
    return [mean, geo]


# ---------------------------------------------------------------------------
# point_process suite

DELTA1 = FiniteAtoms(((1.0, 1.0),))
BAND1 = Band(0.5, 1.5)


@register("point_process", "nrppp_intensity", "E[N((0,T] x A)] = T measure(A)")
def _pp_intensity(rng, config):
    n = _cfg(config, "point_process.n", 100_000)
    out = []
    for horizon in (0.5, 1.0, 2.0):
        pat = sample_nrppp(DELTA1, 0.5, horizon, rng, replicas=n)
        c = counting_process(pat, BAND1, horizon)
        out.append(mean_report(f"nrppp_intensity[T={horizon}]", "", c, horizon * 1.0))
    return out


@register("point_process", "cross_construction",
          "decorated NRPPP and Poissonian Yule-Simon sum agree in law")
def _pp_cross(rng, config):
    n = _cfg(config, "point_process.n_cross", 10_000)
    times = (0.25, 0.5, 1.0)
    deco = np.array([[counting_process(pat, FULL, t) for t in times]
                     for pat in (sample_nrppp(DELTA1, 0.5, 1.0, rng, method="sequential")
                                 for _ in range(n))])
    cpp = np.array([sample_reinforced_cpp(DELTA1, 0.5, rng).value(np.array(times))
                    for _ in range(n)])
    out = []
    for j, t in enumerate(times):
        res = stats.ks_2samp(deco[:, j], cpp[:, j])
        out.append(pvalue_report(f"cross_construction[t={t}]", "", res.pvalue, n,
                                 statistic=float(res.statistic)))
    return out


@register("point_process", "compensation",
          "N_A(t) - (1-p) t measure(A) - p int_0^t N_A(s-)/s ds is a martingale")
def _pp_comp(rng, config):
    n = _cfg(config, "point_process.n_comp", 10_000)
    pat = sample_nrppp(DELTA1, 0.5, 1.0, rng, replicas=n)
    res = compensator_residual(pat, BAND1, DELTA1, 0.5, 1.0)
    return mean_report("compensation_residual[t=1]", "", res, 0.0)


@register("point_process", "independence", "counts over disjoint mark sets are independent")
def _pp_indep(rng, config):
    n = _cfg(config, "point_process.n", 100_000)
    m = FiniteAtoms(((1.0, 1.0), (2.0, 1.0)))
    pat = sample_nrppp(m, 0.25, 1.0, rng, replicas=n)
    a = counting_process(pat, Band(0.5, 1.5), 1.0)
    b = counting_process(pat, Band(1.5, 2.5), 1.0)
    rho = float(np.corrcoef(a, b)[0, 1])
    return se_report("independence_corr", "", rho, 0.0, 1.0 / math.sqrt(n), n)


@register("point_process", "restriction", "restricting an NRPPP to a mark set gives an NRPPP")
def _pp_restrict(rng, config):
    n = _cfg(config, "point_process.n_cross", 10_000)
    m = FiniteAtoms(((1.0, 1.0), (2.0, 1.0)))
    a = counting_process(sample_nrppp(m, 0.5, 1.0, rng, replicas=n), Band(0.5, 1.5), 1.0)
    b = counting_process(sample_nrppp(DELTA1, 0.5, 1.0, rng, replicas=n), FULL, 1.0)
    res = stats.ks_2samp(a, b)
    return pvalue_report("restriction", "", res.pvalue, n, statistic=float(res.statistic))


@register("point_process", "laplace_functional",
          "E[exp(-<N, f>)] = exp{-t(1-p) int measure(dx) E[1 - exp(-int f(st, x) dY(s))]}")
def _pp_laplace(rng, config):
    n = _cfg(config, "point_process.n", 100_000)
    p, theta = 0.5, 1.0
    f = lambda s, x: theta * ((s > 0) & (s <= 1.0) & BAND1.contains(x))
    val, se = laplace_functional(DELTA1, p, 1.0, f, n, rng)
    kk = np.arange(1, ys_support(p, 1e-14) + 1)
    series = math.exp((1 - p) * (np.sum(np.exp(-theta * kk) * ys_pmf(p, kk)) - 1))
    pat = sample_nrppp(DELTA1, p, 1.0, rng, replicas=n)
    emp = np.exp(-theta * counting_process(pat, BAND1, 1.0))
    emp_mean, emp_se = emp.mean(), emp.std(ddof=1) / math.sqrt(n)
    return [se_report("laplace_formula_vs_series", "", val, series, se, n),
            se_report("laplace_patterns_vs_formula", "", float(emp_mean), val,
                      math.hypot(emp_se, se), n)]


@register("point_process", "thinning", "Bernoulli thinning keeps whole innovation families")
def _pp_thin(rng, config):
    pat = sample_nrppp(DELTA1, 0.5, 1.0, rng, replicas=20_000)
    kept, _ = thin_pattern(pat, 0.7, rng)
    n_innov = int(pat.is_innovation.sum())
    frac = kept.is_innovation.sum() / n_innov
    return se_report("thinning_kept_fraction", "", float(frac), 0.7,
                     math.sqrt(0.7 * 0.3 / n_innov), n_innov)


# ---------------------------------------------------------------------------
# paths suite

GAUSS = LevyTriplet(0.0, 1.0)
POISSON = poisson_triplet(1.0)
STABLE_HALF = StableLike(0.5, 1.0, 1.0)


@register("paths", "nrbm_covariance", "Cov(B_hat_s, B_hat_t) = (t v s)^p (t ^ s)^(1-p) / (1 - 2p)")
def _nrbm_cov(rng, config):
    n = _cfg(config, "paths.n", 100_000)
    p, grid = 0.25, (0.25, 0.5, 1.0)
    v = nrbm_values(p, np.array((0.0,) + grid), n, rng)[:, 1:]
    out = []
    for i in range(3):
        for j in range(i, 3):
            out.append(mean_report(f"nrbm_cov[{grid[i]},{grid[j]}]", "", v[:, i] * v[:, j],
                                   nrbm_cov(p, grid[i], grid[j])))
    return out


@register("paths", "nrbm_small_p", "p -> 0 recovers Brownian motion")
def _nrbm_small(rng, config):
    n = _cfg(config, "paths.n", 100_000)
    v = nrbm_values(1e-6, np.array([0.0, 1.0]), n, rng)[:, 1]
    return mean_report("nrbm_var[p=1e-6]", "", v ** 2, 1.0)


@register("paths", "martingale", "t^-p xi_hat(t) is a martingale for centred exponents")
def _martingale(rng, config):
    n = _cfg(config, "paths.n_mart", 20_000)
    p, times = 0.5, np.array([0.25, 0.5, 1.0])
    trip = LevyTriplet(0.0, 0.0, STABLE_HALF)
    v = sample_nrlp_marginals(trip, p, times, n, rng, band=Band(1e-3, 1.0))
    m = v / times ** p
    out = [mean_report(f"martingale_mean[t={t}]", "", m[:, j], 0.0) for j, t in enumerate(times)]
    g = np.clip(m[:, 0], -1.0, 1.0)
    out.append(mean_report("martingale_orthogonality", "", (m[:, 2] - m[:, 1]) * g, 0.0))
    return out


@register("paths", "compensated_series", "the compensated Yule-Simon series has mean zero")
def _comp_series(rng, config):
    n = _cfg(config, "paths.n_series", 10_000)
    m = FiniteAtoms(((0.5, 2.0), (-0.25, 1.0), (0.8, 1.0)))
    vals = np.array([sample_compensated_series(m, 0.5, 0.1, rng).value(np.array([0.5, 1.0]))
                     for _ in range(n)])
    return [mean_report(f"compensated_series_mean[t={t}]", "", vals[:, j], 0.0)
            for j, t in enumerate((0.5, 1.0))]


def small_jump_sup(measure, p, eps, n_paths, rng, floor=1e-6):
    """Samples of ``sup_{s <= 1} |compensated series over floor <= |x| < eps|``."""
    band = Band(floor, eps)
    pat = sample_nrppp(measure, p, 1.0, rng, replicas=n_paths, band=band)
    comp = band_moment(measure, band, 1.0, signed=True)
    return series_sup(pat, comp, 1.0)


@register("paths", "sup_bound", "E[sup_{s<=1} |small-jump series below eps|] -> 0 as eps -> 0")
def _sup_bound(rng, config):
    n = _cfg(config, "paths.n_sup", 1000)
    eps_list = (0.2, 0.1, 0.05)
    means, ses = [], []
    for eps in eps_list:
        s = small_jump_sup(STABLE_HALF, 0.5, eps, n, rng)
        means.append(float(s.mean()))
        ses.append(float(s.std(ddof=1) / math.sqrt(n)))
    ok = all(a > b for a, b in zip(means, means[1:]))
    return VerificationReport("sup_bound_trend", "", means, None, math.nan, n,
                              "strictly decreasing in eps", _verdict(ok),
                              details=dict(eps=list(eps_list), std_errors=ses, floor=1e-6))


def test_fdd_charfn(builder, triplet, p, probes, rng, n_paths=100_000, n_mc=100_000,
                    eps=1e-3, skeleton_n=1024):
    """Empirical char functions of ``(xi_hat(t_j))_j`` against the fdd formula.

    ``probes`` is a list of ``(times, lams)``.  The report's estimate is the
    largest gap measured in combined standard errors.
    """
    check_admissible(p, triplet)
    all_times = sorted({t for times, _ in probes for t in times})
    if builder == "synthesize":
        samples = sample_nrlp_marginals(triplet, p, all_times, n_paths, rng, eps)
    elif builder == "coupled":
        samples = coupled_marginals(triplet, p, all_times, n_paths, rng, eps)[1]
    elif builder == "skeleton":
        at = np.maximum(np.floor(np.array(all_times) * skeleton_n).astype(int), 1)
        X = levy_increments(triplet, skeleton_n, n_paths, rng, eps)
        samples = reinforced_sums(X, p, rng, at)[1]
    else:
        raise ValueError(f"unknown builder {builder!r}")
    col = {t: i for i, t in enumerate(all_times)}
    rows, worst = [], 0.0
    for times, lams in probes:
        cols = [col[t] for t in times]
        emp, emp_se = empirical_charfn(samples[:, cols], lams)
        val, val_se = fdd_charfn(triplet, p, times, lams, n_mc, rng)
        se = math.hypot(emp_se, val_se)
        z = abs(emp - val) / se if se > 0 else (0.0 if emp == val else math.inf)
        worst = max(worst, z)
        rows.append(dict(times=list(times), lams=list(lams), empirical=emp, formula=val,
                         gap=abs(emp - val), combined_se=se, ok=bool(z <= TOL)))
    return VerificationReport(f"fdd_charfn[{builder}]", "", worst, 0.0, 1.0, n_paths,
                              f"every probe gap <= {TOL:g} combined SE",
                              _verdict(all(r["ok"] for r in rows)), details=dict(probes=rows))


FDD_PROBES = [((1.0,), (lam,)) for lam in (0.5, 1.0, 2.0)] + \
             [((0.5, 1.0), (lam, lam)) for lam in (0.5, 1.0, 2.0)]


@register("paths", "fdd_charfn", "E exp(i sum lam_j xi_hat(t_j)) = exp{(1-p) t E psi(sum lam_j Y(t_j/t))}")
def _fdd(rng, config):
    n = _cfg(config, "paths.n", 100_000)
    out = []
    for label, trip, p in (("gaussian", GAUSS, 0.25), ("poisson", POISSON, 0.5)):
        rep = test_fdd_charfn("synthesize", trip, p, FDD_PROBES, rng, n, n)
        # expand into one report per probe for readability
        for k, row in enumerate(rep.details["probes"]):
            r = charfn_report(f"fdd_charfn[{label},probe={k}]", "", row["empirical"],
                              0.0, row["formula"], 0.0, n, times=row["times"], lams=row["lams"])
            r.std_error = row["combined_se"]
            r.verdict = _verdict(row["ok"])
            out.append(r)
    return out


@register("paths", "scaling", "the law on [0,1] does not depend on the construction horizon")
def _scaling(rng, config):
    n = _cfg(config, "paths.n_scale", 20_000)
    trip = LevyTriplet(1.0, 0.5, DELTA1)
    a = sample_nrlp_marginals(trip, 0.25, [1.0], n, rng)[:, 0]
    b = sample_nrlp_marginals(trip, 0.25, [1.0, 2.0], n, rng)[:, 0]
    res = stats.ks_2samp(a, b)
    return pvalue_report("scaling_horizon", "", res.pvalue, n, statistic=float(res.statistic))


@register("paths", "synthesis_mean", "E[xi_hat(t)] = t E[xi(1)] for reinforced compound Poisson")
def _synth_mean(rng, config):
    n = _cfg(config, "paths.n_series", 10_000)
    trip = LevyTriplet(0.0, 0.0, FiniteAtoms(((2.0, 1.0),)))
    vals = [synthesize_nrlp(trip, 0.5, grid=np.array([0.0, 1.0]), rng=rng).value(1.0)
            for _ in range(n)]
    return mean_report("synthesis_mean[delta2]", "", vals, 2.0)


# ---------------------------------------------------------------------------
# coupling suite

MIXED = LevyTriplet(1.0, 1.0, DELTA1)


@register("coupling", "bm_covariance", "E[B_s B_hat_t] = (s ^ t)^(1-p) t^p")
def _cbm(rng, config):
    n = _cfg(config, "coupling.n", 100_000)
    p = 0.25
    B, Bh = coupled_bm_values(p, np.array([0.0, 0.5, 1.0]), n, rng)
    return [mean_report("coupled_cov[B1,Bhat1]", "", B[:, 2] * Bh[:, 2], coupled_cov(p, 1.0, 1.0)),
            mean_report("coupled_cov[B1,Bhat0.5]", "", B[:, 2] * Bh[:, 1], coupled_cov(p, 1.0, 0.5))]


@register("coupling", "joint_charfn", "joint char function of (xi, xi_hat) with a uniform U")
def _joint(rng, config):
    n = _cfg(config, "coupling.n", 100_000)
    p, times = 0.25, np.array([0.5, 1.0])
    base, reinf = coupled_marginals(MIXED, p, times, n, rng)
    both = np.hstack([base, reinf])
    out = []
    for lam, beta in ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0)):
        emp, emp_se = empirical_charfn(both, [lam, lam, beta, beta])
        val, val_se = joint_charfn(MIXED, p, times, [lam, lam], [beta, beta], n, rng)
        out.append(charfn_report(f"joint_charfn[lam={lam},beta={beta}]", "", emp, emp_se,
                                 val, val_se, n))
    return out


@register("coupling", "structure", "discarded jumps are independent of xi_hat; intensity is kept")
def _coupling_structure(rng, config):
    n = _cfg(config, "coupling.n_pairs", 10_000)
    p = 0.25
    disc, reinf, atoms = np.empty(n), np.empty(n), np.empty(n)
    bookkeeping = True
    for i in range(n):
        cp = sample_coupled_pair(POISSON, p, grid=np.array([0.0, 1.0]), rng=rng)
        disc[i] = cp.base.jumps.marks[~cp.kept].sum()
        reinf[i] = cp.reinforced.value(1.0)
        atoms[i] = len(cp.reinforced.jumps)
        innov = cp.reinforced.jumps.is_innovation
        ids = np.sort(cp.reinforced.jumps.innovation_id[innov])
        bookkeeping &= np.array_equal(ids, np.flatnonzero(cp.kept)) and np.allclose(
            np.sort(cp.reinforced.jumps.times[innov]), np.sort(cp.jump_time[cp.kept]))
    rho = float(np.corrcoef(disc, reinf)[0, 1])
    return [se_report("discarded_independence_corr", "", rho, 0.0, 1.0 / math.sqrt(n), n),
            mean_report("reinforced_intensity", "", atoms, 1.0),
            VerificationReport("shared_jump_bookkeeping", "", bool(bookkeeping), True, math.nan,
                               n, "kept base jumps are exactly the innovations",
                               _verdict(bookkeeping))]


# ---------------------------------------------------------------------------
# skeleton suite


@register("skeleton", "brownian_skeleton", "reinforced Brownian skeleton converges to NRBM")
def _skel_bm(rng, config):
    n_walks = _cfg(config, "skeleton.n_walks", 5000)
    n = _cfg(config, "skeleton.n_steps", 2 ** 14)
    p = 0.25
    X = rng.standard_normal((n_walks, n)) / math.sqrt(n)
    _, sh = reinforced_sums(X, p, rng, [n])
    sh = sh[:, 0]
    ks = stats.kstest(sh, stats.norm(0, math.sqrt(1 / (1 - 2 * p))).cdf).statistic
    var = float(np.var(sh, ddof=1))
    return [VerificationReport("skeleton_ks_brownian[n=2^14]", "", float(ks), 0.02, math.nan,
                               n_walks, "KS distance < 0.02", _verdict(ks < 0.02)),
            VerificationReport("skeleton_var_brownian[n=2^14]", "", var, 2.0, math.nan, n_walks,
                               "within 10% of 1/(1-2p)", _verdict(abs(var - 2.0) <= 0.2))]


@register("skeleton", "poisson_skeleton", "reinforced Poisson skeleton converges to the NRLP")
def _skel_poisson(rng, config):
    p, ns = 0.5, (2 ** 6, 2 ** 8, 2 ** 10)
    exact = [lattice_ks_distance(POISSON, p, n, 25) for n in ns]
    ok = all(a > b for a, b in zip(exact, exact[1:]))
    # Monte Carlo distances for reference (dominated by sampling noise)
    n_walks = _cfg(config, "skeleton.n_walks", 5000)
    ref = sample_nrlp_marginals(POISSON, p, [1.0], n_walks, rng)[:, 0]
    mc = []
    for n in ns:
        X = levy_increments(POISSON, n, n_walks, rng)
        sh = reinforced_sums(X, p, rng, [n])[1][:, 0]
        mc.append(float(stats.ks_2samp(sh, ref).statistic))
    return VerificationReport("skeleton_ks_poisson_trend", "", exact, None, math.nan, 0,
                              "exact KS distance strictly decreasing in n", _verdict(ok),
                              details=dict(n=list(ns), mc_ks=mc, mc_walks=n_walks, cdf_range=25))


@register("skeleton", "bercu", "M_n = a_n S_hat_n is a martingale with bracket <M>_n")
def _bercu(rng, config):
    n_walks = _cfg(config, "skeleton.n_bercu", 10_000)
    p = 0.25
    out = []
    for n in (256, 1024):
        X = np.where(rng.random((n_walks, n)) < 0.5, -1.0, 1.0)
        src = reinforce_sources(n_walks, n, p, rng)
        xh = np.take_along_axis(X, src, axis=1)
        m = bercu_martingale(xh, p)[:, -1]
        qv = predictable_qv(xh, p, 1.0)[:, -1]
        out.append(mean_report(f"bercu_mean[n={n}]", "", m, 0.0))
        out.append(mean_report(f"bercu_bracket[n={n}]", "", m ** 2 - qv, 0.0))
    return out


@register("skeleton", "counting_law", "the law of the counts N_l(k) does not depend on the mesh n")
def _counting_law(rng, config):
    n_walks = _cfg(config, "skeleton.n_count", 5000)
    p, k = 0.5, 100
    a = np.sum(reinforce_sources(n_walks, 100, p, rng)[:, :k] == 0, axis=1)
    b = np.sum(reinforce_sources(n_walks, 1000, p, rng)[:, :k] == 0, axis=1)
    res = stats.ks_2samp(a, b)
    return pvalue_report("counting_law_N1[k=100,mesh 100 vs 1000]", "", res.pvalue, n_walks,
                         statistic=float(res.statistic))


@register("skeleton", "identity", "S_hat_n = sum_k N_k(n) X_k")
def _identity(rng, config):
    X = rng.standard_normal(2000)
    w = reinforce_steps(X, 0.5, rng)
    sums = w.partial_sums
    err = max(abs(w.counts(n) @ X - sums[n - 1]) for n in (1, 10, 100, 2000))
    total_ok = all(w.counts(n).sum() == n for n in (1, 10, 100, 2000))
    ok = err < 1e-9 and total_ok
    return VerificationReport("counting_identity", "", float(err), 0.0, math.nan, 1,
                              "exact identity (error < 1e-9)", _verdict(ok))


# ---------------------------------------------------------------------------
# growth at the origin


def _vanish_stat(alpha, p, gamma, n_paths, rng, scales, floor):
    measure = StableLike(alpha, 1.0, 1.0)
    t0 = max(scales)
    pat = sample_nrppp(measure, p, t0, rng, replicas=n_paths, band=Band(floor, 1.0, True))
    rep, times, marks = pat.replica, pat.times, pat.marks
    csum = np.cumsum(marks)
    start = np.searchsorted(rep, rep, side="left")
    base = np.where(start > 0, csum[np.maximum(start - 1, 0)], 0.0)
    value = csum - base               # value of the path right after each atom
    out = np.zeros((n_paths, len(scales)))
    for j, T in enumerate(scales):
        left = np.bincount(rep[times <= T / 2], weights=marks[times <= T / 2], minlength=n_paths)
        sup = np.abs(left) * (T / 2) ** -gamma
        sel = (times > T / 2) & (times <= T)
        cand = np.zeros(n_paths)
        np.maximum.at(cand, rep[sel], np.abs(value[sel]) * times[sel] ** -gamma)
        out[:, j] = np.maximum(sup, cand)
    return out


def _explode_counts(alpha, p, gamma, r, floor, n_paths, rng, window=1.0):
    """Atoms with |x| >= floor, time <= window and |x| > 2 time^(gamma - r), per path.

    Only innovations at times below ``s(x) = (|x|/2)^kappa`` (kappa = 1/(gamma-r))
    can produce such atoms; they form a Poisson process whose marks have
    density proportional to ``s(x) |x|^(-1-alpha)``.  An innovation at u then
    contributes ``Z_{p ln(s/u)}`` atoms before s.
    """
    kappa = 1.0 / (gamma - r)
    e = kappa - alpha
    # (|x|/2)^kappa <= window for |x| <= 1 when window >= 2^-kappa
    if window < 2.0 ** -kappa:
        raise ValueError("window too small")
    mass = (1 - p) * 2.0 * 2.0 ** -kappa * (1.0 - floor ** e) / e
    n_innov = rng.poisson(mass, size=n_paths)
    total = int(n_innov.sum())
    v = rng.random(total)
    lo, hi = floor ** e, 1.0
    ax = (lo + v * (hi - lo)) ** (1.0 / e)
    s = (ax / 2.0) ** kappa
    u = s * (1.0 - rng.random(total))
    z = rng.geometric((u / s) ** p)
    owner = np.repeat(np.arange(n_paths), n_innov)
    expected = 2.0 * 2.0 ** -kappa * (1.0 - floor ** (kappa - alpha)) / (kappa - alpha)
    return np.bincount(owner, weights=z, minlength=n_paths), expected


def test_growth_rate(alpha, p, gamma, direction, rng, n_paths=500, floor=1e-8,
                     scales=tuple(2.0 ** -k for k in range(3, 9))):
    """Trend check of ``t^-gamma xi_hat(t)`` near the origin for a stable-like measure."""
    check_p(p)
    if abs(gamma * alpha - 1) < 1e-12:
        raise ValueError("dichotomy undefined at the boundary gamma*alpha = 1")
    if not p * alpha < 1:
        raise ValueError("need p*alpha < 1")
    if direction == "vanish":
        if not gamma * alpha < 1:
            raise ValueError("vanish mode needs gamma*alpha < 1")
        stat = _vanish_stat(alpha, p, gamma, n_paths, rng, scales, floor)
        means = stat.mean(axis=0).tolist()
        ses = (stat.std(axis=0, ddof=1) / math.sqrt(n_paths)).tolist()
        tail = means[1:]
        ok = all(a > b for a, b in zip(tail, tail[1:]))
        return VerificationReport(
            f"growth_vanish[alpha={alpha},gamma={gamma}]", "", means, None, math.nan, n_paths,
            "mean sup statistic strictly decreasing over T = 2^-4 .. 2^-8", _verdict(ok),
            details=dict(T=list(scales), std_errors=ses, medians=np.median(stat, axis=0).tolist(),
                         floor=floor))
    if direction == "explode":
        if not gamma * alpha > 1:
            raise ValueError("explode mode needs gamma*alpha > 1")
        r = (gamma - 1.0 / alpha) / 4.0
        c2, e2 = _explode_counts(alpha, p, gamma, r, 1e-2, n_paths, rng)
        c4, e4 = _explode_counts(alpha, p, gamma, r, 1e-4, n_paths, rng)
        ratio = float(c4.mean() / c2.mean()) if c2.mean() > 0 else math.inf
        return VerificationReport(
            f"growth_explode[alpha={alpha},gamma={gamma}]", "", ratio, 4.0, math.nan, n_paths,
            "count(eps=1e-4) >= 4 count(eps=1e-2)", _verdict(ratio >= 4.0),
            details=dict(r=r, mean_count_1e2=float(c2.mean()), mean_count_1e4=float(c4.mean()),
                         expected_1e2=e2, expected_1e4=e4))
    raise ValueError(f"unknown direction {direction!r}")


@register("growth", "growth_dichotomy", "t^-gamma xi_hat(t) vanishes or explodes as t -> 0")
def _growth(rng, config):
    if "growth.alpha" in config or "growth.gamma" in config:
        alpha = float(config.get("growth.alpha", 0.5))
        gamma = float(config.get("growth.gamma", 1.5))
        p = float(config.get("growth.p", 0.5))
        direction = "vanish" if gamma * alpha < 1 else "explode"
        return [test_growth_rate(alpha, p, gamma, direction, rng)]
    return [test_growth_rate(0.5, 0.5, 1.5, "vanish", rng),
            test_growth_rate(1.5, 0.5, 1.0, "explode", rng)]


# ---------------------------------------------------------------------------
# small-time behaviour


def small_time_target(triplet, p, tol=1e-8):
    """``(1-p) int measure(dx) sum_k min((k x)^2, 1) P(eta = k)``."""
    m = triplet.measure
    kk = np.arange(1, ys_support(p, tol) + 1)
    inner = np.array([k * k * band_moment(m, Band(0.0, 1.0 / k), 2.0) + band_mass(m, Band(1.0 / k))
                      for k in kk])
    return float((1 - p) * np.sum(inner * ys_pmf(p, kk)))


def test_small_time(triplet, p, h_list, rng, n_paths=100_000, eps=1e-3):
    """``h^-1 E[min(xi_hat(h)^2, 1)]`` against its small-time limit."""
    if triplet.gaussian_variance != 0:
        raise ValueError("small-time limit needs a triplet without Gaussian part")
    check_admissible(p, triplet)
    target = small_time_target(triplet, p)
    ests, ses = [], []
    for h in sorted(h_list, reverse=True):
        x = sample_nrlp_marginals(triplet, p, [h], n_paths, rng, eps)[:, 0]
        f = np.minimum(x * x, 1.0) / h
        ests.append(float(f.mean()))
        ses.append(float(f.std(ddof=1) / math.sqrt(n_paths)))
    est, se = ests[-1], ses[-1]
    tol = max(0.1 * abs(target), TOL * se)
    return VerificationReport(f"small_time[h={min(h_list):g}]", "", est, target, se, n_paths,
                              "within max(10%, 4 SE) of target", _verdict(abs(est - target) <= tol),
                              details=dict(h=sorted(h_list, reverse=True), estimates=ests,
                                           std_errors=ses))


@register("small_time", "small_time_limit",
          "h^-1 E f(xi_hat(h)) -> (1-p) int measure(dx) sum_k f(kx) P(eta = k)")
def _small_time(rng, config):
    n = _cfg(config, "small_time.n", 100_000)
    return test_small_time(POISSON, 0.5, [1e-2, 1e-3], rng, n)
