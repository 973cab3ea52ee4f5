import json
import math

import numpy as np
import pytest

from nrlp import verify as V
from nrlp.measure import FiniteAtoms, LevyTriplet, poisson_triplet

FIELDS = ("test_name", "anchor", "estimate", "target", "std_error", "n_samples", "criterion",
          "verdict", "tolerance_multiple", "seed", "suite")


@pytest.fixture(scope="module")
def ys_reports():
    return V.run_suite("yule_simon", seed=1)


def test_yule_simon_suite_structure(ys_reports):
    assert len(ys_reports) >= 5
    for r in ys_reports:
        d = r.to_dict()
        for f in FIELDS:
            assert d[f] is not None and d[f] != "", (r.test_name, f)
        assert r.verdict in ("pass", "fail")
        assert r.seed == 1 and r.suite == "yule_simon"


def test_every_check_has_anchor():
    for suite, checks in V.REGISTRY.items():
        assert checks, suite
        for name, anchor, _ in checks:
            assert anchor, name


def test_register_refuses_missing_anchor():
    with pytest.raises(ValueError, match="anchor"):
        V.register("yule_simon", "nameless", "")
    with pytest.raises(ValueError, match="unknown suite"):
        V.register("nowhere", "x", "some anchor")


def test_unknown_suite():
    with pytest.raises(ValueError, match="unknown suite"):
        V.run_suite("nowhere")


def test_same_seed_byte_identical(ys_reports):
    again = V.run_suite("yule_simon", seed=1)
    assert V.reports_to_json(again) == V.reports_to_json(ys_reports)
    assert V.reports_to_json(V.run_suite("yule_simon", seed=2)) != V.reports_to_json(ys_reports)


def test_order_and_workers_do_not_matter():
    a = V.run_suite("small_time", seed=3)
    b = V.run_suite("small_time", seed=3, workers=2)
    assert V.reports_to_json(a) == V.reports_to_json(b)


def test_paths_suite_has_fdd_probes():
    reports = V.run_suite("paths", config={"paths.n": 20_000}, seed=1)
    names = [r.test_name for r in reports]
    assert sum(n.startswith("fdd_charfn[") for n in names) == 2 * len(V.FDD_PROBES)


def test_verdict_rule():
    r = V.se_report("x", "a", 1.0, 0.0, 0.25, 10)
    assert r.passed
    r = V.se_report("x", "a", 1.01, 0.0, 0.25, 10)
    assert not r.passed and r.tolerance_multiple == 4


def test_json_encoding():
    r = V.charfn_report("c", "a", 0.5 + 0.25j, 0.01, 0.5 + 0.2j, 0.01, 100)
    d = json.loads(V.reports_to_json([r]))[0]
    assert d["estimate"] == {"re": 0.5, "im": 0.25}
    r = V.pvalue_report("p", "a", 0.5, 10)
    assert json.loads(V.reports_to_json([r]))[0]["std_error"] == "nan"


def test_growth_boundary(rng):
    with pytest.raises(ValueError, match="dichotomy undefined at the boundary"):
        V.test_growth_rate(0.5, 0.5, 2.0, "vanish", rng)
    with pytest.raises(ValueError, match="dichotomy undefined at the boundary"):
        V.run_suite("growth", config={"growth.alpha": 0.5, "growth.gamma": 2.0})


def test_growth_explode(rng):
    r = V.test_growth_rate(1.5, 0.5, 1.0, "explode", rng, n_paths=200)
    assert r.passed and r.estimate >= 4


def test_growth_direction_mismatch(rng):
    with pytest.raises(ValueError):
        V.test_growth_rate(1.5, 0.5, 1.0, "vanish", rng)


def test_small_time_targets():
    assert V.small_time_target(poisson_triplet(1.0), 0.5) == pytest.approx(0.5, abs=1e-7)
    assert V.small_time_target(poisson_triplet(1.0, 2.0), 0.5) == pytest.approx(0.5, abs=1e-7)
    # an atom at 1/2: f(k/2) = k^2/4 for k = 1, f = 1 from k = 2 on
    from nrlp.yule_simon import ys_pmf
    p1 = ys_pmf(0.5, 1)
    assert V.small_time_target(poisson_triplet(1.0, 0.5), 0.5) == pytest.approx(
        0.5 * (p1 / 4 + 1 - p1), abs=1e-7)


def test_small_time_empty_measure(rng):
    r = V.test_small_time(LevyTriplet(0.0, 0.0, FiniteAtoms(())), 0.5, [1e-2], rng, n_paths=100)
    assert r.target == 0 and r.estimate == 0 and r.passed


def test_small_time_delta2(rng):
    r = V.test_small_time(poisson_triplet(1.0, 2.0), 0.5, [1e-2, 1e-3], rng)
    assert r.passed


def test_small_time_rejects_gaussian(rng):
    with pytest.raises(ValueError, match="Gaussian"):
        V.test_small_time(LevyTriplet(0.0, 1.0), 0.5, [1e-3], rng)


def test_fdd_charfn_builders_agree(rng):
    probes = [((1.0,), (1.0,)), ((0.5, 1.0), (0.5, 0.5))]
    for builder in ("synthesize", "coupled", "skeleton"):
        r = V.test_fdd_charfn(builder, poisson_triplet(1.0), 0.5, probes, rng, n_paths=20_000,
                              n_mc=20_000)
        assert r.passed, (builder, r.details)
    with pytest.raises(ValueError):
        V.test_fdd_charfn("nope", poisson_triplet(1.0), 0.5, probes, rng)


def test_small_jump_sup_decreasing(rng):
    from nrlp.measure import StableLike
    vals = [V.small_jump_sup(StableLike(0.5), 0.5, e, 300, rng).mean() for e in (0.2, 0.05)]
    assert vals[0] > vals[1] > 0
