"""Command-line driver: ``spinpair verify | sdp | scan-mu | gpt-certify | povm``.

Every command writes JSON lines: one ``run`` record echoing the inputs, one
``check`` record per numeric claim (value, tolerance, pass flag) and a closing
``summary`` record. Only the summary's ``runtime_ms`` varies between runs.
"""
import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, checks, compat, gptcheck, povm, qubit, sdpsolve
from ._accel import backend_name


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj):
    return json.dumps(obj, default=_jsonable)


# ----------------------------------------------------------------------------
# Spec parsing
# ----------------------------------------------------------------------------

def parse_axes(spec):
    """'XYZ', 'XY' or unit vectors such as '1,0,0;0,1,0'."""
    spec = spec.strip()
    if spec and all(ch.upper() in compat.NAMED_AXES for ch in spec):
        return compat.named_axes(spec)
    try:
        vecs = [[float(x) for x in part.split(",")] for part in spec.split(";") if part]
        return [qubit.unit_vector(v) for v in vecs]
    except ValueError as exc:
        raise ValueError(f"cannot parse axes {spec!r}: {exc}") from None


def parse_config(spec):
    """single | parallel | antiparallel | fmu:<mu> | map:<file>."""
    name, _, arg = spec.partition(":")
    name = name.lower()
    if name == "single" and not arg:
        return compat.single_copy()
    if name == "parallel" and not arg:
        return compat.parallel()
    if name == "antiparallel" and not arg:
        return compat.antiparallel()
    if name == "fmu" and arg:
        return compat.partial_flip(float(arg))
    if name == "map" and arg:
        obj = json.loads(Path(arg).read_text())
        lam = qubit.map_from_json(obj)
        if not lam.label:
            lam = qubit.QubitMap(lam.matrix, lam.shift, Path(arg).stem, lam.trace_row)
        return compat.with_map(lam)
    raise ValueError(f"cannot parse configuration {spec!r}")


def parse_ensemble(spec):
    """all | gc:<n>,<plane> | tet | oct | file:<path>."""
    name, _, arg = spec.partition(":")
    name = name.lower()
    if name == "all" and not arg:
        return compat.ALL
    if name == "tet" and not arg:
        return compat.ensemble_tetrahedral()
    if name == "oct" and not arg:
        return compat.ensemble_octahedral()
    if name == "gc" and arg:
        n, _, plane = arg.partition(",")
        return compat.ensemble_great_circle(int(n), plane or "xz")
    if name == "file" and arg:
        obj = json.loads(Path(arg).read_text())
        if isinstance(obj, list):
            obj = {"label": Path(arg).stem, "states": obj}
        return compat.Ensemble.from_json(obj)
    raise ValueError(f"cannot parse ensemble {spec!r}")


# ----------------------------------------------------------------------------
# Commands (each returns a list of check records)
# ----------------------------------------------------------------------------

def _suite_worker(args):
    name, seed = args
    return checks.run_suite(name, seed)


def cmd_verify(targets, seed=42, jobs=1):
    names = list(checks.SUITES) if targets == ["all"] else targets
    for name in names:
        if name not in checks.SUITES:
            raise ValueError(f"unknown verification target {name!r}")
    work = [(name, seed) for name in names]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_suite_worker, work))
    else:
        parts = [_suite_worker(w) for w in work]
    return [rec for part in parts for rec in part]


def cmd_sdp(axes, config, ensemble, seed=42, tol=None, expect=None, expect_tol=2e-3,
            povm_out=None, constraints=None):
    if constraints is not None:
        cs = constraints
    else:
        cs = compat.build_constraints(axes, config, ensemble)
    sol = sdpsolve.solve_max_sharpness(cs, tol=tol)
    found = compat.povm_from_solution(cs, sol.effects)
    rep = povm.validate_povm(found, tol=1e-8)
    out = []
    lam_details = {"bracket": [sol.lambda_opt, sol.lambda_upper], "status": sol.status,
                   "lambda_rounded": round(sol.lambda_opt, 4),
                   "iterations": sol.iterations, "queries": len(sol.trace)}
    if expect is None:
        out.append({"check": "sdp.lambda_opt", "value": sol.lambda_opt, "op": "report",
                    "tol": None, "pass": True, **lam_details})
    else:
        out.append(checks.check("sdp.lambda_opt_error", abs(sol.lambda_opt - expect),
                                expect_tol, expected=expect, lambda_opt=sol.lambda_opt,
                                **lam_details))
    out.append(checks.check("sdp.status_certified",
                            int(sol.status in ("optimal", "feasible-only")), 1, "==",
                            status=sol.status))
    out.append(checks.check("sdp.primal_residual", sol.primal_residual, 1e-8))
    out.append(checks.check("sdp.psd_violation", sol.psd_violation, -1e-9, ">="))
    out.append(checks.check("sdp.completeness_residual", rep.completeness_residual, 1e-8))
    if constraints is None:
        err = compat.check_reproduction(found, config, axes, sol.lambda_opt, ensemble,
                                        n_random=1000, seed=seed)
        out.append(checks.check("sdp.marginal_error", err, 1e-6, states=ensemble.label))
    out.append(checks.check("sdp.trace_monotone", int(sdpsolve.trace_is_monotone(sol.trace)),
                            1, "=="))
    if povm_out:
        doc = povm.povm_to_json(found)
        doc["lambda_opt"] = sol.lambda_opt
        Path(povm_out).write_text(dumps(doc) + "\n")
    return out


def cmd_scan_mu(grid, seed=42):
    if grid < 2:
        raise ValueError("scan-mu needs a grid of at least 2 points")
    mus = sorted(set(np.linspace(0, 1, grid).tolist()) | {1 / 3})
    out = []
    for mu in mus:
        lam = checks.compat.fmu_marginal_sharpness(mu, seed=seed)
        expected = (1 + mu) / 2
        boundary = abs(mu - 1 / 3) < 1e-12
        out.append(checks.check("scan_mu.sharpness_error", np.abs(lam - expected).max(),
                                1e-10, mu=mu, sharpness=float(np.mean(lam)),
                                expected=expected, is_cp=qubit.map_is_cp(qubit.map_f_mu(mu)),
                                cp_boundary=boundary,
                                advantage=bool(expected > checks.SQRT3_2)))
    lo, hi = checks.crossover_bracket(np.linspace(0, 1, grid))
    exact = np.sqrt(3) - 1
    out.append(checks.check("scan_mu.crossover_bracketed", int(lo < exact <= hi), 1, "==",
                            bracket=[lo, hi], crossover=exact))
    return out


def cmd_gpt_certify(p, tol=gptcheck.GPT_TOL):
    rep = gptcheck.certify_gpt_povm(p, tol)
    out = [checks.check("gpt.completeness_residual", rep.completeness_residual, tol)]
    for c in rep.certificates:
        ident = c.operator_id
        out.append(checks.check("gpt.min_product_value", c.min_product_value, -tol, ">=",
                                effect=ident, worst_state=c.worst_product_state))
        out.append(checks.check("gpt.max_product_value", c.max_product_value, 1 + tol,
                                effect=ident))
        agree = (c.min_product_value >= -tol) == c.choi_map_positive
        agree &= (c.max_product_value <= 1 + tol) == c.choi_complement_positive
        out.append(checks.check("gpt.choi_route_concurs", int(agree), 1, "==", effect=ident))
    return out


POVM_FAMILIES = {"parallel": povm.build_parallel_povm,
                 "antiparallel": povm.build_antiparallel_povm,
                 "gpt": povm.build_gpt_povm,
                 "tet": povm.build_tet_povm}


# ----------------------------------------------------------------------------
# Reporting
# ----------------------------------------------------------------------------

def write_report(stream, command, inputs, seed, records, runtime_ms):
    head = {"record": "run", "command": command, "inputs": inputs, "seed": seed,
            "backend": backend_name(), "version": __version__,
            "residual_tol": sdpsolve.default_tol()}
    stream.write(dumps(head) + "\n")
    for rec in records:
        stream.write(dumps({"record": "check", **rec}) + "\n")
    passed = all(r["pass"] for r in records)
    stream.write(dumps({"record": "summary", "checks": len(records), "passed": passed,
                        "runtime_ms": runtime_ms}) + "\n")
    return passed


def write_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check", "value", "op", "tol", "pass"])
        for r in records:
            w.writerow([r["check"], r["value"], r["op"], r["tol"], r["pass"]])


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="seed for random states")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers for independent checks")
    common.add_argument("--out", help="JSON-lines report path (default: stdout)")
    common.add_argument("--csv", help="optional CSV summary path")

    ap = argparse.ArgumentParser(prog="spinpair", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run a named check suite")
    v.add_argument("targets", nargs="+", choices=list(checks.SUITES) + ["all"])

    s = sub.add_parser("sdp", parents=[common], help="maximise the sharpness by SDP")
    s.add_argument("--axes", default="XYZ")
    s.add_argument("--config", default="parallel")
    s.add_argument("--ensemble", default="all")
    s.add_argument("--constraints", help="load a ConstraintSystem JSON instead of building one")
    s.add_argument("--save-constraints", help="write the ConstraintSystem JSON here")
    s.add_argument("--povm-out", default="sdp_povm.json", help="where to write the optimal POVM")
    s.add_argument("--expect", type=float, help="expected lambda_opt, turns the value into a check")
    s.add_argument("--expect-tol", type=float, default=2e-3)

    m = sub.add_parser("scan-mu", parents=[common], help="sweep the partial-flip parameter")
    m.add_argument("--grid", type=int, default=21)

    g = sub.add_parser("gpt-certify", parents=[common], help="certify a POVM file separably")
    g.add_argument("--povm", required=True)
    g.add_argument("--tol", type=float, default=gptcheck.GPT_TOL)

    p = sub.add_parser("povm", parents=[common], help="export a built-in POVM as JSON")
    p.add_argument("family", choices=sorted(POVM_FAMILIES))
    p.add_argument("--path", required=True)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    inputs = {k: v for k, v in vars(args).items()
              if k not in ("command", "out", "csv", "seed", "jobs")}
    try:
        if args.command == "verify":
            records = cmd_verify(args.targets, args.seed, args.jobs)
        elif args.command == "sdp":
            cs = None
            if args.constraints:
                cs = compat.ConstraintSystem.from_json(json.loads(Path(args.constraints).read_text()))
                axes = config = ensemble = None
            else:
                axes = parse_axes(args.axes)
                config = parse_config(args.config)
                ensemble = parse_ensemble(args.ensemble)
                if args.save_constraints:
                    cs = compat.build_constraints(axes, config, ensemble)
                    Path(args.save_constraints).write_text(dumps(cs.to_json()) + "\n")
                    cs = None
                inputs["resolved"] = {"axes": axes, "config": config.to_json(),
                                      "ensemble": ensemble.to_json()}
            records = cmd_sdp(axes, config, ensemble, args.seed, expect=args.expect,
                              expect_tol=args.expect_tol, povm_out=args.povm_out,
                              constraints=cs)
        elif args.command == "scan-mu":
            records = cmd_scan_mu(args.grid, args.seed)
        elif args.command == "gpt-certify":
            p = povm.povm_from_json(json.loads(Path(args.povm).read_text()))
            records = cmd_gpt_certify(p, args.tol)
        else:
            doc = povm.povm_to_json(POVM_FAMILIES[args.family]())
            Path(args.path).write_text(dumps(doc) + "\n")
            records = [checks.check("povm.written", 1, 1, "==", path=args.path)]
    except (ValueError, KeyError, OSError) as exc:
        print(f"spinpair: error: {exc}", file=sys.stderr)
        return 2
    runtime_ms = int(round((time.perf_counter() - start) * 1000))
    if args.out:
        with open(args.out, "w") as fh:
            passed = write_report(fh, args.command, inputs, args.seed, records, runtime_ms)
    else:
        passed = write_report(sys.stdout, args.command, inputs, args.seed, records, runtime_ms)
    if args.csv:
        write_csv(args.csv, records)
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
