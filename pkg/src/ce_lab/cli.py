"""Command-line interface.

Exit codes: 0 success, 2 bad input or spec, 3 math domain error,
4 structural error (pair split or impossible k), 5 I/O error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import List, Optional

import numpy as np

from . import cases
from .ei import DEFAULT_L, ei_gaussian
from .emergence import delta_j, delta_j_max, feasibility
from .errors import ConjugatePairSplit, DomainError, SpecError, StructuralError
from .io import (SystemSpec, dumps, load_spec, read_matrix_csv, with_units,
                 write_csv, write_json, write_matrix_csv, write_trajectory_csv)
from .mi import METHODS, convergence_sweep
from .optimizer import optimal_w
from .simulation import macro_pair, simulate_micro
from .system import CoarseMap

EXIT_OK, EXIT_PARSE, EXIT_DOMAIN, EXIT_STRUCTURAL, EXIT_IO = 0, 2, 3, 4, 5

CASE_ALIASES = {
    "random-walk": "random_walk", "random_walk": "random_walk", "randomwalk": "random_walk",
    "heat": "heat", "spiral": "spiral",
}

NATS = {k: "nats" for k in ("ei", "determinism", "degeneracy", "per_dimension", "j_micro", "j_macro",
                            "delta_j", "delta_j1", "delta_j2", "delta_j_max", "eta", "constraint_eta")}
NATS["L"] = "state units"


def _spec_from_arg(arg: str, scenario: int = 1) -> SystemSpec:
    """A spec file path, or the name of a built-in case."""
    if not os.path.exists(arg) and arg.lower() in CASE_ALIASES:
        cfg = cases.build_case(CASE_ALIASES[arg.lower()], scenario)
        return SystemSpec(cfg.system, None, cfg.eta, None, None)
    return load_spec(arg)


def _load_w(arg: str, n: int) -> CoarseMap:
    if arg == "identity":
        return CoarseMap.identity(n)
    if arg.endswith(".json"):
        with open(arg, encoding="utf-8") as fh:
            obj = json.load(fh)
        if not isinstance(obj, dict) or "k" not in obj or "data" not in obj:
            raise SpecError("W file must be {\"k\": int, \"data\": [...]}")
        k = int(obj["k"])
        data = np.asarray(obj["data"], dtype=float)
        if data.size != k * n:
            raise SpecError(f"W data has {data.size} entries, expected {k}*{n}")
        return CoarseMap(data.reshape(k, n))
    try:
        W = read_matrix_csv(arg)
    except ValueError as exc:
        raise SpecError(f"cannot read W from {arg}: {exc}") from None
    if W.shape[1] != n:
        raise SpecError(f"W has {W.shape[1]} columns, system has n={n}")
    return CoarseMap(W)


def _check_k(k: int, n: int):
    if not 1 <= k <= n:
        raise StructuralError(f"k={k} must lie in [1, {n}]")


def _emit(obj, output: Optional[str], name: str):
    text = dumps(obj)
    sys.stdout.write(text)
    if output:
        write_json(os.path.join(output, name), obj)


def cmd_ei(args) -> int:
    spec = _spec_from_arg(args.spec)
    L = args.L if args.L is not None else (spec.L or DEFAULT_L)
    br = ei_gaussian(spec.system, L)
    _emit(with_units(br.to_dict(), NATS), args.output, "ei.json")
    return EXIT_OK


def cmd_emergence(args) -> int:
    spec = _spec_from_arg(args.spec)
    sysm = spec.system
    eta = args.eta if args.eta is not None else (spec.eta or 0.0)
    L = spec.L or DEFAULT_L
    if args.w is not None and args.k is not None:
        raise SpecError("give either --w or --k, not both")
    if args.k is not None:
        _check_k(args.k, sysm.n)
        opt = optimal_w(sysm, args.k, eta)
        rep = delta_j(sysm, opt.W, L=L, eta=eta)
        # the optimal W goes next to the spec unless --output says otherwise
        out_dir = args.output
        if out_dir is None:
            out_dir = os.path.dirname(os.path.abspath(args.spec)) if os.path.exists(args.spec) else "."
        w_path = os.path.join(out_dir, "w_optimal.csv")
        write_matrix_csv(w_path, opt.W.W)
        data = rep.to_dict()
        data.update({"delta_j_max": opt.analytic_bound, "W": opt.W.W, "w_path": w_path,
                     "retained_moduli": opt.retained_moduli})
    else:
        if args.w is not None:
            cm = _load_w(args.w, sysm.n)
        elif spec.W is not None:
            cm = spec.W
        else:
            raise SpecError("emergence needs --w, --k, or a W entry in the spec")
        rep = delta_j(sysm, cm, L=L, eta=eta)
        data = rep.to_dict()
        data["W"] = cm.W
    _emit(with_units(data, NATS), args.output, "emergence.json")
    return EXIT_OK


def cmd_feasibility(args) -> int:
    spec = _spec_from_arg(args.spec)
    eta = args.eta if args.eta is not None else (spec.eta or 0.0)
    _check_k(args.k, spec.system.n)
    data = {"feasible": feasibility(spec.system, args.k, eta),
            "delta_j_max": delta_j_max(spec.system, args.k, eta), "k": args.k, "eta": eta}
    _emit(with_units(data, NATS), args.output, "feasibility.json")
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = _spec_from_arg(args.spec)
    sysm = spec.system
    seed = args.seed if args.seed is not None else (spec.seed or 0)
    x0 = np.zeros(sysm.n) if args.x0 is None else np.asarray(args.x0, dtype=float)
    if x0.shape != (sysm.n,):
        raise SpecError(f"--x0 needs {sysm.n} values")
    out = args.output or "."
    traj = simulate_micro(sysm, x0, args.steps, seed)
    write_trajectory_csv(os.path.join(out, "trajectory_micro.csv"), traj.states)
    files = ["trajectory_micro.csv"]
    cm = _load_w(args.w, sysm.n) if args.w else spec.W
    if cm is not None:
        y, y_hat = macro_pair(sysm, cm, x0, args.steps, seed)
        write_trajectory_csv(os.path.join(out, "trajectory_macro.csv"), y.states, prefix="y",
                             extra={"yhat": y_hat.states})
        files.append("trajectory_macro.csv")
    sys.stdout.write(dumps(with_units({"steps": args.steps, "seed": seed, "files": files,
                                       "final_state": traj.states[-1]},
                                      {"final_state": "state units", "steps": "count"})))
    return EXIT_OK


def cmd_validate_mi(args) -> int:
    spec = _spec_from_arg(args.spec)
    sysm = spec.system
    seed = args.seed if args.seed is not None else (spec.seed or 0)
    L = args.L if args.L is not None else (spec.L or DEFAULT_L)
    if args.w is not None:
        cm = _load_w(args.w, sysm.n)
    elif spec.W is not None and args.k is None:
        cm = spec.W
    else:
        k = args.k if args.k is not None else 1
        _check_k(k, sysm.n)
        cm = optimal_w(sysm, k, args.eta if args.eta is not None else (spec.eta or 0.0)).W
    seeds = range(seed, seed + args.n_seeds)
    rows = convergence_sweep(sysm, cm, args.samples, L, seeds, args.k_neighbors, args.method)
    header = ["n_samples", "delta_i_mean", "delta_i_std", "delta_j"]
    if args.output:
        write_csv(os.path.join(args.output, "mi_sweep.csv"), header, [[r[h] for h in header] for r in rows])
    units = {"delta_i_mean": "nats", "delta_i_std": "nats", "delta_i_median_abs_err": "nats",
             "delta_j": "nats", "n_samples": "count"}
    top = with_units({"method": args.method, "k_neighbors": args.k_neighbors, "L": L, "seeds": list(seeds)},
                     {"L": "state units", "k_neighbors": "count"})
    top["rows"] = [with_units(r, units) for r in rows]
    sys.stdout.write(dumps(top))
    return EXIT_OK


def cmd_case(args) -> int:
    cfg = cases.build_case(CASE_ALIASES[args.name], args.scenario)
    if args.eta is not None:
        if args.eta < 0:
            raise ValueError("eta must be non-negative")
        cfg = cases.CaseConfig(cfg.name, cfg.system, args.eta, cfg.default_k, cfg.extras)
    if args.k is not None:
        _check_k(args.k, cfg.system.n)
    summary = cases.run_case(cfg, args.k, args.steps, args.seed or 0, args.output or ".")
    sys.stdout.write(dumps(summary))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = None
    if args.kind == "theta":
        cfg = cases.build_case("spiral", args.scenario)
        rows = cases.theta_sweep(cfg, args.points)
        header = ["theta", "k", "delta_j_max"]
    else:
        if args.spec.lower() in CASE_ALIASES and not os.path.exists(args.spec):
            cfg = cases.build_case(CASE_ALIASES[args.spec.lower()], args.scenario)
        else:
            spec = load_spec(args.spec)
            cfg = cases.CaseConfig("custom", spec.system, spec.eta or 0.0, 1)
        if args.eta is not None:
            cfg = cases.CaseConfig(cfg.name, cfg.system, args.eta, cfg.default_k, cfg.extras)
        rows = cases.k_sweep(cfg)
        header = ["k", "delta_j_max", "delta_j_orthogonal"]
    table = [[r[h] for h in header] for r in rows]
    name = f"sweep_{args.kind}.csv"
    if args.output:
        write_csv(os.path.join(args.output, name), header, table)
    sys.stdout.write(",".join(header) + "\n")
    for row in table:
        sys.stdout.write(",".join("nan" if isinstance(v, float) and math.isnan(v) else repr(v) for v in row) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ce-lab", description="Causal emergence of linear Gaussian iteration systems.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, spec=True):
        if spec:
            sp.add_argument("--spec", required=True, help="system spec JSON, or random-walk|heat|spiral")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--output", default=None, help="directory for output files")

    sp = sub.add_parser("ei", help="effective information of the micro system")
    common(sp)
    sp.add_argument("--L", type=float, default=None)
    sp.set_defaults(func=cmd_ei)

    sp = sub.add_parser("emergence", help="causal emergence of a map, or the optimum for k")
    common(sp)
    sp.add_argument("--w", default=None, help="W as CSV, JSON {k,data}, or 'identity'")
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--eta", type=float, default=None)
    sp.set_defaults(func=cmd_emergence)

    sp = sub.add_parser("feasibility", help="whether positive emergence is reachable")
    common(sp)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--eta", type=float, default=None)
    sp.set_defaults(func=cmd_feasibility)

    sp = sub.add_parser("simulate", help="simulate micro (and macro) trajectories")
    common(sp)
    sp.add_argument("--steps", type=int, default=100)
    sp.add_argument("--x0", type=float, nargs="+", default=None)
    sp.add_argument("--w", default=None)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("validate-mi", help="Monte Carlo check of causal emergence")
    common(sp)
    sp.add_argument("--samples", type=int, nargs="+", default=[1000, 10000, 100000])
    sp.add_argument("--n-seeds", type=int, default=1)
    sp.add_argument("--L", type=float, default=None)
    sp.add_argument("--k-neighbors", type=int, default=4)
    sp.add_argument("--method", choices=METHODS, default="residual")
    sp.add_argument("--w", default=None)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--eta", type=float, default=None)
    sp.set_defaults(func=cmd_validate_mi)

    sp = sub.add_parser("case", help="run a built-in case study")
    sp.add_argument("name", choices=sorted(set(CASE_ALIASES) - {"random_walk", "randomwalk"}))
    common(sp, spec=False)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--eta", type=float, default=None)
    sp.add_argument("--scenario", type=int, choices=(1, 2), default=1, help="spiral scenario")
    sp.set_defaults(func=cmd_case)

    sp = sub.add_parser("sweep", help="maximal emergence over k, or over theta for the spiral")
    sp.add_argument("kind", choices=("k", "theta"))
    sp.add_argument("--spec", default="heat", help="spec file or case name (k sweep)")
    sp.add_argument("--scenario", type=int, choices=(1, 2), default=1)
    sp.add_argument("--points", type=int, default=64)
    sp.add_argument("--eta", type=float, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--output", default=None)
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    threads = os.environ.get("CE_LAB_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConjugatePairSplit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STRUCTURAL
    except StructuralError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STRUCTURAL
    except DomainError as exc:
        print(f"math domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except SpecError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
