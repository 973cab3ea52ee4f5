"""Command-line front end: ``nrlp simulate | verify | converge``.

Exit codes: 0 success, 1 usage or configuration error, 2 inadmissible memory
parameter, 3 verification failure.  Every output file starts with a comment
header recording the package version, the seed and a hash of the resolved
configuration; identical (config, seed) pairs give byte-identical files.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .coupling import sample_coupled_pair
from .measure import (AdmissibilityError, LevyTriplet, check_admissible, check_p,
                      is_finite_measure, load_triplet, parse_key_values, triplet_from_mapping)
from .paths import path_rows, sample_nrbm, sample_reinforced_cpp, synthesize_nrlp
from .point_process import pattern_rows, sample_nrppp
from .seeding import derive_rng
from .skeleton import convergence_experiment, skeleton_pair
from .verify import SUITES, reports_to_json, run_suite
from .yule_simon import sample_ys_path

PROCESSES = ("yule-simon", "nrbm", "nr-poisson", "nr-cpp", "nrlp", "coupled", "skeleton")
RUN_KEYS = {"triplet_file", "p", "epsilon", "grid_points", "n_paths", "seed", "output_dir"}
CONVERGE_PATHS = 5000
DEFAULTS = dict(p=0.5, epsilon=1e-3, grid_points=101, n_paths=1, seed=1, output_dir=".")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def load_config(args):
    """Merge the config file with command-line flags (flags win)."""
    raw = {}
    base_dir = "."
    if args.config:
        try:
            with open(args.config) as fh:
                raw = parse_key_values(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        base_dir = os.path.dirname(os.path.abspath(args.config))
    cfg = dict(DEFAULTS)
    for key in RUN_KEYS:
        if key in raw:
            cfg[key] = raw[key]
    for key, flag in (("p", "p"), ("epsilon", "epsilon"), ("n_paths", "n_paths"),
                      ("grid_points", "grid"), ("seed", "seed"), ("output_dir", "out")):
        val = getattr(args, flag, None)
        if val is not None:
            cfg[key] = val
    try:
        cfg["p"] = float(cfg["p"])
        cfg["epsilon"] = float(cfg["epsilon"])
        cfg["grid_points"] = int(float(cfg["grid_points"]))
        cfg["n_paths"] = int(float(cfg["n_paths"]))
        cfg["seed"] = int(float(cfg["seed"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad numeric config value: {exc}") from exc
    if not 0 < cfg["p"] < 1:
        raise ConfigError(f"p must lie in (0, 1), got {cfg['p']}")
    if cfg["epsilon"] <= 0 or cfg["n_paths"] <= 0 or cfg["grid_points"] < 2 or cfg["seed"] < 0:
        raise ConfigError("epsilon, n_paths and seed must be positive and grid >= 2")
    triplet_keys = {k: v for k, v in raw.items()
                    if k in ("drift", "gaussian_variance") or k.startswith("measure.")}
    try:
        if "triplet_file" in cfg:
            path = cfg["triplet_file"]
            triplet = load_triplet(path if os.path.isabs(path) else os.path.join(base_dir, path))
        else:
            triplet = triplet_from_mapping(triplet_keys, base_dir)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"bad triplet: {exc}") from exc
    extra = {k: v for k, v in raw.items() if k not in RUN_KEYS and k not in triplet_keys}
    return cfg, triplet, extra, raw


def config_hash(cfg, raw):
    blob = json.dumps({"run": {k: cfg[k] for k in sorted(cfg) if k != "output_dir"},
                       "file": raw}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def header(cfg, raw, extra=""):
    line = f"# nrlp {__version__} seed={cfg['seed']} config={config_hash(cfg, raw)}"
    return line + (f" {extra}" if extra else "") + "\n"


def write_csv(path, head, columns, rows):
    buf = io.StringIO()
    buf.write(head)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


# ---------------------------------------------------------------------------
# simulate


def _grid(cfg):
    return np.linspace(0.0, 1.0, cfg["grid_points"])


def _simulate_one(process, triplet, cfg, index):
    """Rows for one replica, keyed by output table."""
    rng = derive_rng(cfg["seed"], f"simulate/{process}", index)
    p, eps = cfg["p"], cfg["epsilon"]
    if process == "yule-simon":
        path = sample_ys_path(p, rng)
        return {"paths": [(index, k, float(t), k + 1) for k, t in enumerate(path.jumps)]}
    if process == "nrbm":
        path = sample_nrbm(p, _grid(cfg), rng)
        return {"paths": [(index, float(t), float(v), "continuous")
                          for t, v in zip(path.grid, path.values)]}
    if process == "nr-poisson":
        cut = None if is_finite_measure(triplet.measure) else eps
        pat = sample_nrppp(triplet.measure, p, 1.0, rng, eps=cut)
        return {"patterns": list(pattern_rows(pat, index))}
    if process == "nr-cpp":
        path = sample_reinforced_cpp(triplet.measure, p, rng)
        return {"paths": list(path_rows(path, index))}
    if process == "nrlp":
        path = synthesize_nrlp(triplet, p, eps, _grid(cfg), rng)
        return {"paths": list(path_rows(path, index))}
    if process == "coupled":
        pair = sample_coupled_pair(triplet, p, eps, _grid(cfg), rng)
        times = np.union1d(pair.base.eval_times(), pair.reinforced.eval_times())
        vb, vr = pair.base.value(times), pair.reinforced.value(times)
        paths = [(index, float(t), float(a), float(b)) for t, a, b in zip(times, vb, vr)]
        jumps = [(index, i, float(u), float(x), bool(k)) for i, (u, x, k) in
                 enumerate(zip(pair.jump_time, pair.base.jumps.marks, pair.kept))]
        summary = [(index, len(pair.kept), int(pair.kept.sum()), len(pair.reinforced.jumps),
                    float(vb[-1]), float(vr[-1]))]
        return {"paths": paths, "jumps": jumps, "summary": summary}
    if process == "skeleton":
        n = cfg["grid_points"] - 1
        pair = skeleton_pair(triplet, n, p, rng, eps)
        w = pair.walk
        return {"walks": [(index, k + 1, float(w.steps[k]), float(w.reinforced_steps[k]),
                           bool(w.is_repetition[k]), int(w.picked_index[k]) + 1
                           if w.picked_index[k] >= 0 else 0) for k in range(n)]}
    raise ConfigError(f"unknown process {process!r}")


def _simulate_chunk(args):
    process, triplet, cfg, indices = args
    return [_simulate_one(process, triplet, cfg, i) for i in indices]


TABLES = {
    "yule-simon": {"paths": ("path_id", "jump_index", "time", "value")},
    "nrbm": {"paths": ("path_id", "time", "value", "component")},
    "nr-poisson": {"patterns": ("pattern_id", "time", "mark", "origin", "innovation_id",
                                "innovation_time")},
    "nr-cpp": {"paths": ("path_id", "time", "value", "component")},
    "nrlp": {"paths": ("path_id", "time", "value", "component")},
    "coupled": {"paths": ("path_id", "time", "value_base", "value_reinforced"),
                "jumps": ("path_id", "jump_id", "time", "mark", "kept"),
                "summary": ("path_id", "n_base_jumps", "n_kept", "n_reinforced_atoms",
                            "final_base", "final_reinforced")},
    "skeleton": {"walks": ("walk_id", "k", "step", "reinforced_step", "is_repetition",
                           "picked_index")},
}


def cmd_simulate(args):
    cfg, triplet, _, raw = load_config(args)
    process = args.process
    if process not in PROCESSES:
        raise ConfigError(f"unknown process {process!r}; choose from {', '.join(PROCESSES)}")
    if process == "nrbm":
        triplet = LevyTriplet(0.0, 1.0)
    if process == "yule-simon":
        check_p(cfg["p"])
    else:
        check_admissible(cfg["p"], triplet)
    start = time.perf_counter()
    n = cfg["n_paths"]
    workers = max(1, args.workers or 1)
    chunks = [c.tolist() for c in np.array_split(np.arange(n), min(workers, n))]
    jobs = [(process, triplet, cfg, c) for c in chunks]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for chunk in pool.map(_simulate_chunk, jobs) for r in chunk]
    else:
        results = [r for job in jobs for r in _simulate_chunk(job)]
    os.makedirs(cfg["output_dir"], exist_ok=True)
    head = header(cfg, raw, f"process={process}")
    written, n_rows = [], 0
    for table, columns in TABLES[process].items():
        rows = [row for res in results for row in res[table]]
        path = os.path.join(cfg["output_dir"], f"{process}_{table}.csv")
        write_csv(path, head, columns, rows)
        written.append(path)
        n_rows += len(rows)
    atoms = sum(len(res.get("patterns", res.get("jumps", []))) for res in results)
    print(f"simulate {process}: paths={n} atoms={atoms} rows={n_rows} "
          f"runtime={time.perf_counter() - start:.2f}s files={','.join(written)}")
    return 0


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args):
    cfg, _, extra, raw = load_config(args)
    suite = args.suite or "all"
    if suite != "all" and suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from all, {', '.join(SUITES)}")
    start = time.perf_counter()
    reports = run_suite(suite, extra, cfg["seed"], max(1, args.workers or 1))
    os.makedirs(cfg["output_dir"], exist_ok=True)
    path = os.path.join(cfg["output_dir"], f"verify_{suite}.json")
    body = reports_to_json(reports)
    meta = json.dumps({"version": __version__, "seed": cfg["seed"], "suite": suite,
                       "config": config_hash(cfg, raw)}, sort_keys=True)
    with open(path, "w") as fh:
        fh.write('{"header": ' + meta + ',\n"reports": ' + body + "}\n")
    failed = [r for r in reports if not r.passed]
    print(f"verify {suite}: {len(reports) - len(failed)}/{len(reports)} passed "
          f"runtime={time.perf_counter() - start:.1f}s report={path}")
    for r in failed:
        print(f"  FAIL {r.suite}/{r.test_name}: estimate={r.estimate!r} target={r.target!r} "
              f"({r.criterion})")
    return 3 if failed else 0


# ---------------------------------------------------------------------------
# converge


def parse_n_list(text):
    if text is None or not text.strip():
        raise ConfigError("empty n_list")
    try:
        out = [int(float(v)) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad n_list: {exc}") from exc
    if not out or min(out) < 1:
        raise ConfigError("n_list must hold positive integers")
    return out


def cmd_converge(args):
    cfg, triplet, _, raw = load_config(args)
    n_list = parse_n_list(args.n_list)
    check_admissible(cfg["p"], triplet)
    start = time.perf_counter()
    rng = derive_rng(cfg["seed"], "converge")
    # the simulate default of one replica is useless here; use 5000 walks unless set explicitly
    n_paths = cfg["n_paths"] if (args.n_paths or "n_paths" in raw) else CONVERGE_PATHS
    rows = convergence_experiment(triplet, cfg["p"], n_list, n_paths=max(n_paths, 2),
                                  rng=rng, eps=cfg["epsilon"])
    os.makedirs(cfg["output_dir"], exist_ok=True)
    path = os.path.join(cfg["output_dir"], "converge.csv")
    write_csv(path, header(cfg, raw, f"n_list={','.join(map(str, n_list))}"),
              ("n", "probe_time", "ks_distance", "charfn_gap", "exact_distance"),
              [(r["n"], float(r["probe_time"]), float(r["ks_distance"]), float(r["charfn_gap"]),
                float(r["exact_distance"])) for r in rows])
    print(f"converge: {len(rows)} rows runtime={time.perf_counter() - start:.1f}s file={path}")
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file (run keys and triplet keys)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--p", type=float, help="memory parameter in (0, 1)")
    common.add_argument("--epsilon", type=float, help="small-jump truncation level")
    common.add_argument("--n-paths", dest="n_paths", type=int, help="number of replicas")
    common.add_argument("--grid", type=int, help="number of grid points on [0, 1]")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, default=1, help="worker processes")
    parser = argparse.ArgumentParser(prog="nrlp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nrlp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", parents=[common], help="simulate paths or patterns")
    sim.add_argument("--process", required=True, help=", ".join(PROCESSES))
    ver = sub.add_parser("verify", parents=[common], help="run verification suites")
    ver.add_argument("--suite", default="all", help="all, " + ", ".join(SUITES))
    con = sub.add_parser("converge", parents=[common], help="skeleton convergence table")
    con.add_argument("--n-list", dest="n_list", help="comma separated mesh sizes")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    handler = {"simulate": cmd_simulate, "verify": cmd_verify, "converge": cmd_converge}
    try:
        return handler[args.command](args)
    except AdmissibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
