"""Command line interface.

File formats (JSON):
  space file: {"kind": "coords"|"matrix", "dim": int, "points": [[...]] or
               "dist": [[...]], "masses": [...], "quasi_constant": number}
  function file: flat array of reals, or {"values": [...]}
  lambda file: {"kind": "power", "c": ..., "degree": ...}
               {"kind": "floored", "c": ..., "degree": ..., "floors": [...]}
               {"kind": "fit", "degree": ...}   (fit a floored power law)
  suite config: see harness.run_suite

NHCZ_THREADS sets the worker count (checks are numpy-internal, so this is
advisory).  --sample-cap bounds every sampled pair enumeration.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .balls import DoublingParams, default_beta0
from .czdecomp import cz_decompose, verify_cz
from .harness import run_suite
from .maximal import (maximal_doubling, maximal_noncentered, maximal_p,
                      sharp_maximal)
from .reports import write_reports
from .scenarios import KINDS, generate
from .space import (DiscreteSpace, DominatingFunction, fit_floored_power,
                    validate_upper_doubling)


def load_space(path: str) -> DiscreteSpace:
    with open(path) as fh:
        doc = json.load(fh)
    masses = np.asarray(doc["masses"], dtype=float)
    qc = float(doc.get("quasi_constant", 1.0))
    if doc["kind"] == "coords":
        return DiscreteSpace.from_coords(doc["points"], masses, quasi_constant=qc)
    if doc["kind"] == "matrix":
        return DiscreteSpace.from_matrix(doc["dist"], masses, quasi_constant=qc)
    raise ValueError("space kind must be 'coords' or 'matrix'")


def save_space(space: DiscreteSpace, path: str) -> None:
    if space.points is not None:
        doc = {"kind": "coords", "dim": space.points.shape[1],
               "points": space.points.tolist()}
    else:
        doc = {"kind": "matrix", "dim": 0, "dist": space.dist.tolist()}
    doc["masses"] = space.masses.tolist()
    doc["quasi_constant"] = space.quasi_constant
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_function(space: DiscreteSpace, path: str) -> np.ndarray:
    with open(path) as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        doc = doc["values"]
    return np.asarray(doc, dtype=float)


def load_lambda(space: DiscreteSpace, path: str) -> DominatingFunction:
    with open(path) as fh:
        doc = json.load(fh)
    kind = doc["kind"]
    if kind == "power":
        return DominatingFunction.power_law(c=doc["c"], degree=doc["degree"])
    if kind == "floored":
        return DominatingFunction.floored_power(
            c=doc["c"], degree=doc["degree"],
            floors=np.asarray(doc["floors"], dtype=float))
    if kind == "fit":
        return fit_floored_power(space, degree=doc.get("degree", 1.0))
    raise ValueError("lambda kind must be power, floored or fit")


def cmd_gen(args) -> int:
    scn = generate(args.kind, args.size, args.seed)
    save_space(scn.space, args.out)
    print("wrote %s (%d points, kind %s)" % (args.out,
                                             scn.space.point_count, args.kind))
    return 0


def cmd_validate(args) -> int:
    space = load_space(args.space)
    lam = load_lambda(space, getattr(args, "lambda"))
    rep = validate_upper_doubling(space, lam)
    for name, (ok, wit) in rep.properties.items():
        print("%-24s %s  %s" % (name, "ok" if ok else "FAIL",
                                "" if wit is None else wit))
    print("worst mu/lambda ratio: %.6g at %s" % (rep.worst_ratio,
                                                 rep.worst_witness))
    return 0 if rep.passed else 1


def cmd_maximal(args) -> int:
    space = load_space(args.space)
    f = load_function(space, args.f)
    if args.op == "m":
        res = maximal_noncentered(space, f, rho=args.rho)
    elif args.op == "mp":
        res = maximal_p(space, f, p=args.p, rho=args.rho)
    else:
        lam = (load_lambda(space, args.lam) if args.lam
               else fit_floored_power(space))
        params = DoublingParams.for_lambda(lam)
        if args.op == "n":
            res = maximal_doubling(space, f, params)
        else:
            res = sharp_maximal(space, lam, f, params,
                                pair_cap=args.sample_cap)
    json.dump(res.values.tolist(), sys.stdout)
    print()
    return 0


def cmd_czdecomp(args) -> int:
    space = load_space(args.space)
    f = load_function(space, args.f)
    lam = load_lambda(space, getattr(args, "lambda_file"))
    dec = cz_decompose(space, lam, f, args.level, p=args.p, beta0=args.beta0)
    rep = verify_cz(space, lam, f, dec)
    with open(args.out, "w") as fh:
        json.dump(dec.to_dict(), fh)
    print("blocks: %d  kappa: %.6g  verified: %s"
          % (dec.n_blocks, dec.kappa, rep["passed"]))
    return 0 if rep["passed"] else 1


def cmd_operator(args) -> int:
    from .czop import (Kernel, apply_truncated, cotlar_check, weak11_check)
    from .fspaces import commutator_pointwise_check, rbmo_estimate
    space = load_space(args.space)
    f = load_function(space, args.f)
    if args.kernel == "bergman":
        from .czop import BergmanConfig, bergman_kernel
        if space.points is None or space.points.shape[1] != 2:
            raise ValueError("bergman kernel needs 2-d coordinate spaces "
                             "(real/imag parts)")
        pts = space.points[:, 0] + 1j * space.points[:, 1]
        space, lam, kernel = bergman_kernel(
            BergmanConfig(dim=1, m=args.m, points=pts))
    else:
        with open(args.kernel) as fh:
            doc = json.load(fh)
        kernel = Kernel(matrix=np.asarray(doc["matrix"]),
                        holder_delta=doc.get("holder_delta", 1.0))
        lam = fit_floored_power(space)
    params = DoublingParams.for_lambda(lam)
    if args.check == "weak11":
        tf = np.abs(apply_truncated(space, kernel, f, space.eps_min))
        grid = np.quantile(tf[tf > 0], np.linspace(0.05, 0.95, 16)) \
            if np.any(tf > 0) else [1.0]
        out = weak11_check(space, kernel, f, grid)
        out.pop("rows", None)
    elif args.check == "cotlar":
        out = cotlar_check(space, lam, kernel, f, eta=0.5)
    elif args.check == "commutator":
        b = load_function(space, args.b) if args.b else np.sin(
            np.arange(space.point_count, dtype=float))
        out = commutator_pointwise_check(space, lam, kernel, b, f, p=2.0,
                                         params=params,
                                         pair_cap=args.sample_cap)
    else:   # rbmo-image
        tf = apply_truncated(space, kernel, f, space.eps_min)
        est = rbmo_estimate(space, lam, np.real(tf), params,
                            pair_cap=args.sample_cap)
        val = est.value
        if np.iscomplexobj(tf):
            val += rbmo_estimate(space, lam, np.imag(tf), params,
                                 pair_cap=args.sample_cap).value
        finf = float(np.max(np.abs(f)))
        out = {"vacuous": finf == 0,
               "constant": val / finf if finf > 0 else 0.0}
    json.dump(out, sys.stdout, default=repr)
    print()
    return 0


def cmd_suite(args) -> int:
    with open(args.config) as fh:
        config = json.load(fh)
    if args.sample_cap is not None:
        config["pair_cap"] = args.sample_cap
    reports, code = run_suite(config)
    write_reports(reports, args.out, fmt=args.format)
    n_fail = sum(1 for r in reports if not r.passed and not r.vacuous
                 and r.check != "regression")
    n_drift = sum(1 for r in reports if not r.passed
                  and r.check == "regression")
    print("%d reports, %d failures, %d drift flags -> %s"
          % (len(reports), n_fail, n_drift, args.out))
    return code


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="nhcz", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate a scenario space file")
    g.add_argument("--kind", required=True, choices=KINDS)
    g.add_argument("--size", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_gen)

    v = sub.add_parser("validate", help="check upper-doubling on a space")
    v.add_argument("--space", required=True)
    v.add_argument("--lambda", required=True)
    v.set_defaults(fn=cmd_validate)

    m = sub.add_parser("maximal", help="evaluate a maximal operator")
    m.add_argument("--space", required=True)
    m.add_argument("--f", required=True)
    m.add_argument("--op", required=True, choices=["m", "n", "sharp", "mp"])
    m.add_argument("--rho", type=float, default=1.0)
    m.add_argument("--p", type=float, default=1.0)
    m.add_argument("--lam", help="lambda file (op n / sharp)")
    m.add_argument("--sample-cap", type=int, default=100_000)
    m.set_defaults(fn=cmd_maximal)

    c = sub.add_parser("czdecomp", help="decomposition at a height")
    c.add_argument("--space", required=True)
    c.add_argument("--f", required=True)
    c.add_argument("--lambda", dest="lambda_file", required=True)
    c.add_argument("--level", type=float, required=True)
    c.add_argument("--p", type=float, default=1.0)
    c.add_argument("--beta0", type=float, default=None)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=cmd_czdecomp)

    o = sub.add_parser("operator", help="singular-integral checks")
    o.add_argument("--space", required=True)
    o.add_argument("--kernel", required=True,
                   help="'bergman' or a kernel matrix file")
    o.add_argument("--f", required=True)
    o.add_argument("--b", help="symbol for the commutator check")
    o.add_argument("--m", type=float, default=1.0)
    o.add_argument("--check", required=True,
                   choices=["weak11", "cotlar", "commutator", "rbmo-image"])
    o.add_argument("--sample-cap", type=int, default=100_000)
    o.set_defaults(fn=cmd_operator)

    s = sub.add_parser("suite", help="run a configured check suite")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    s.add_argument("--sample-cap", type=int, default=None)
    s.set_defaults(fn=cmd_suite)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
