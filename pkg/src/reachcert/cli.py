"""Command-line frontend for batch verification workflows.

Exit codes: 0 success (including verified certificates), 1 input or usage
errors, 2 certificate rejection, 3 property false.  All outputs are
deterministic and re-readable by the corresponding parsers.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import certificates as ct
from . import hardness, treedp, witness as wt
from .linsys import build_farkas_system, reach_value
from .model import (ModelError, ReachMdp, parse_model, parse_property,
                    parse_rational, serialize_model, swap_goal_fail, validate)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)


def _load_model(args) -> ReachMdp:
    m = parse_model(_read(args.model))
    if getattr(args, "swap_goal_fail", False):
        m = swap_goal_fail(m)
    return m


def _format_value(value: Fraction, decimal: int | None) -> str:
    if decimal is None:
        return str(value)
    return f"{float(value):.{decimal}f}"


def _polytope_spec(args, m: ReachMdp) -> wt.PolytopeSpec:
    prop = parse_property(args.prop)
    spec = wt.polytope_spec_for(prop)
    if args.flavor is not None:
        flavor = "min-nonneg" if args.flavor == "min" else "max"
        if flavor != spec.flavor and not m.is_dtmc:
            raise ModelError(
                f"flavor {args.flavor} does not match property direction "
                f"{prop.direction} on an MDP (only DTMCs may mix them)")
        spec = wt.PolytopeSpec(flavor=flavor, lam=prop.lam)
    return spec


def _cmd_probability(args) -> int:
    m = _load_model(args)
    value = reach_value(m, args.dir)
    print(_format_value(value, args.decimal))
    return 0


def _cmd_certify(args) -> int:
    m = _load_model(args)
    prop = parse_property(args.prop)
    cert = ct.generate_certificate(m, prop, mode=args.mode)
    _emit(ct.serialize_certificate(cert), args.output)
    return 0


def _cmd_verify(args) -> int:
    m = _load_model(args)
    fs = build_farkas_system(m)
    cert = ct.parse_certificate(_read(args.certificate),
                                z_dim=fs.num_cols, y_dim=fs.num_rows)
    report = ct.verify_certificate(m, cert)
    if report.ok:
        print("verified")
        return 0
    print("rejected")
    for violation in report.violations:
        print(f"  {violation}")
    return 2


def _cmd_witness(args) -> int:
    m = _load_model(args)
    spec = _polytope_spec(args, m)
    if args.method == "qs":
        result = wt.qs_heuristic(m, spec, iterations=args.iters)
    else:
        result = wt.exact_minimal_witness(m, spec, time_budget=args.budget)
    _emit(wt.serialize_witness(result), args.output)
    return 0


def _cmd_tree_witness(args) -> int:
    m = _load_model(args)
    result = treedp.tree_minimal_witness(m, parse_rational(args.lam))
    _emit(wt.serialize_witness(result), args.output)
    return 0


def _cmd_reduce(args) -> int:
    m = _load_model(args)
    if args.to == "state-from-size":
        reduced = wt.reduce_size_to_state(m)
    else:
        reduced = wt.reduce_transition_to_state(m)
    _emit(serialize_model(reduced), args.output)
    return 0


def _cmd_gen_clique(args) -> int:
    g = hardness.parse_graph(_read(args.graph))
    m, lam, kprime = hardness.clique_to_witness_instance(g, args.k)
    document = serialize_model(m) + f"# lambda {lam}\n# kprime {kprime}\n"
    _emit(document, args.output)
    if args.output is not None:
        print(f"lambda {lam}")
        print(f"kprime {kprime}")
    return 0


def _cmd_validate(args) -> int:
    m = _load_model(args)
    report = validate(m)
    if report.ok:
        print("ok")
        return 0
    print("invalid")
    for name, states in report.violations:
        print(f"  {name}: {' '.join(map(str, states))}")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reachcert",
        description="certificates and minimal witnesses for reachability "
                    "thresholds in MDPs")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        p.add_argument("--swap-goal-fail", action="store_true",
                       help="exchange goal and fail before any computation "
                            "(handles upper-bound properties)")
        return p

    p = add("probability", _cmd_probability,
            help="print the optimal reachability probability")
    p.add_argument("model")
    p.add_argument("--dir", choices=("min", "max"), required=True)
    p.add_argument("--decimal", type=int, default=None, metavar="DIGITS",
                   help="print as decimal instead of an exact rational")

    p = add("certify", _cmd_certify, help="emit a verified certificate")
    p.add_argument("model")
    p.add_argument("--prop", required=True, metavar="PROP",
                   help="property, e.g. 'min>=2/5' or 'max>0.3'")
    p.add_argument("--mode", choices=("exact", "float"), default="exact")
    p.add_argument("-o", "--output", default=None)

    p = add("verify", _cmd_verify, help="check a certificate exactly")
    p.add_argument("model")
    p.add_argument("certificate")

    p = add("witness", _cmd_witness, help="compute a witnessing subsystem")
    p.add_argument("model")
    p.add_argument("--prop", required=True)
    p.add_argument("--method", choices=("qs", "exact"), default="qs")
    p.add_argument("--iters", type=int, default=2,
                   help="iterations of the quotient-sum heuristic")
    p.add_argument("--budget", type=float, default=None, metavar="SECONDS",
                   help="time budget for the exact method")
    p.add_argument("--flavor", choices=("min", "max"), default=None,
                   help="polytope to use (DTMCs may use either)")
    p.add_argument("-o", "--output", default=None)

    p = add("tree-witness", _cmd_tree_witness,
            help="state-minimal witness on a tree-shaped DTMC")
    p.add_argument("model")
    p.add_argument("--lambda", dest="lam", required=True, metavar="Q")
    p.add_argument("-o", "--output", default=None)

    p = add("reduce", _cmd_reduce,
            help="reduce size-/transition-minimality to state-minimality")
    p.add_argument("model")
    p.add_argument("--to", choices=("state-from-size",
                                    "state-from-transition"), required=True)
    p.add_argument("-o", "--output", default=None)

    p = add("gen-clique", _cmd_gen_clique,
            help="emit the witness instance of a clique problem")
    p.add_argument("graph")
    p.add_argument("k", type=int)
    p.add_argument("-o", "--output", default=None)

    p = add("validate", _cmd_validate, help="report model precondition checks")
    p.add_argument("model")

    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except (ct.PropertyFalseError, wt.InfeasiblePolytopeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ModelError, ct.CertificateError, wt.WitnessError,
            hardness.OracleGuardError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():  # console entry point
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
