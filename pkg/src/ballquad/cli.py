"""Command line interface: ``ballquad <command> [options]``.

Exit status: 0 on success, 1 on usage errors, 2 when a certification fails.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .adversarial import FiniteDifferenceError, fool_rule
from .corpus import build_corpus
from .cubature import CertificationError, build_rule, largest_degree, largest_level, load_rule, save_rule
from .domain import SeededStream
from .experiments import DEFAULT_N_GRID, DEFAULT_REPS, emit_report, render_report, run_approximation, run_convergence
from .hyperinterp import int_of_g_l, make_operator
from .orthopoly import WeightConfig
from .randomized import cv_budget, cv_integrate, mc_integrate
from .spectral import NormAccuracyError, gram_schmidt_kernel, kernel_eval

DEFAULT_SEED = 20240611
EXIT_USAGE = 1
EXIT_CERT = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _real(text: str) -> float:
    return math.inf if text.strip().lower() in ("inf", "infinity") else float(text)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=int, default=2, help="dimension of the ball")
    p.add_argument("--mu", type=float, default=0.5, help="weight exponent, w ~ (1-|x|^2)^(mu-1/2)")
    p.add_argument("--r", type=float, default=2.0, help="smoothness")
    p.add_argument("--p", type=_real, default=math.inf, help="integrability (inf allowed)")
    p.add_argument("--seed", type=int, default=None, help="master seed (default: $BALLQUAD_SEED or %d)" % DEFAULT_SEED)
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ballquad", description="Integration against Jacobi weights on the unit ball.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    rule = sub.add_parser("rule", help="build, check or export cubature rules")
    rule.add_argument("action", choices=("build", "check", "export"))
    rule.add_argument("path", nargs="?", help="rule file for 'check'")
    rule.add_argument("--degree", type=int, default=None, help="exactness degree (default 3L)")
    rule.add_argument("--L", type=int, default=None)
    rule.add_argument("--n", type=int, default=None, help="pick the largest degree 3L with at most n nodes")
    _common(rule)

    kern = sub.add_parser("kernel", help="check the closed-form reproducing kernel")
    kern.add_argument("action", choices=("check",))
    kern.add_argument("--n", type=int, default=5, help="largest degree to check")
    kern.add_argument("--pairs", type=int, default=50)
    _common(kern)

    approx = sub.add_parser("approx", help="sup-norm error of filtered hyperinterpolation")
    approx.add_argument("action", choices=("sweep",))
    approx.add_argument("--L", type=_int_list, default=[4, 8, 16, 32], help="levels, comma separated")
    approx.add_argument("--function", default=None, help="corpus tag (default lacunary(r))")
    _common(approx)

    integ = sub.add_parser("integrate", help="one integration of a corpus function")
    integ.add_argument("method", choices=("det", "mc", "cv"))
    integ.add_argument("--n", type=int, default=1024, help="budget of function values")
    integ.add_argument("--function", default=None, help="corpus tag (default lacunary(r))")
    _common(integ)

    conv = sub.add_parser("converge", help="error-vs-budget experiment")
    conv.add_argument("--method", choices=("det", "mc", "cv"), default="cv")
    conv.add_argument("--n-grid", type=_int_list, default=list(DEFAULT_N_GRID))
    conv.add_argument("--reps", type=int, default=DEFAULT_REPS)
    conv.add_argument("--function", default=None, help="corpus tag (default lacunary(r))")
    _common(conv)

    fool = sub.add_parser("fool", help="bump function hidden from a product rule with at most n nodes")
    fool.add_argument("--n", type=int, default=64)
    _common(fool)
    return parser


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("BALLQUAD_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"BALLQUAD_SEED must be an integer, got {env!r}")


def _cfg(args) -> WeightConfig:
    try:
        return WeightConfig(args.d, args.mu)
    except ValueError as exc:
        raise UsageError(str(exc))


def _write(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _dump(doc: dict, args) -> None:
    if args.format == "json":
        _write(json.dumps(doc, sort_keys=True, indent=2) + "\n", args.out)
    else:
        keys = sorted(doc)
        _write(",".join(keys) + "\n" + ",".join(_fmt(doc[k]) for k in keys) + "\n", args.out)


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def _function(cfg, args):
    tag = args.function or f"lacunary({args.r:g})"
    return build_corpus(cfg, [tag])[0]


def _cmd_rule(args) -> None:
    cfg = _cfg(args)
    if args.action == "check":
        if not args.path:
            raise UsageError("rule check needs a rule file")
        rule = load_rule(args.path)
        _dump({"path": args.path, "nodes": len(rule), "exactness": rule.exactness_degree, **_cert(rule)}, args)
        return
    if args.degree is not None:
        degree = args.degree
    elif args.L is not None:
        degree = 3 * args.L
    elif args.n is not None:
        L = largest_level(cfg.d, args.n)
        if L < 1:
            raise UsageError(f"no rule of degree >= 3 fits in {args.n} nodes")
        degree = 3 * L
    else:
        raise UsageError("give one of --degree, --L or --n")
    if degree < 1:
        raise UsageError("degree must be >= 1")
    rule = build_rule(cfg, degree)
    if args.action == "export":
        if args.out is None:
            raise UsageError("rule export needs --out")
        save_rule(rule, args.out)
        return
    _dump({"d": cfg.d, "mu": cfg.mu, "nodes": len(rule), "exactness": degree, **_cert(rule)}, args)


def _cert(rule) -> dict:
    c = rule.certificate
    return {
        "n_monomials": c.get("n_monomials", 0),
        "max_rel_err_even": c.get("max_rel_err_even", 0.0),
        "max_abs_err_odd": c.get("max_abs_err_odd", 0.0),
        "weight_sum": float(math.fsum(rule.weights)),
        "min_weight": float(rule.weights.min()),
    }


def _cmd_kernel(args) -> None:
    cfg = _cfg(args)
    if args.n < 0 or args.pairs < 1:
        raise UsageError("--n must be >= 0 and --pairs >= 1")
    from .domain import sample_mu

    rng = SeededStream(_seed(args), 0).generator()
    X, Y = sample_mu(cfg, rng, args.pairs), sample_mu(cfg, rng, args.pairs)
    worst = 0.0
    for k in range(args.n + 1):
        a = kernel_eval(cfg, k, X, Y)
        b = gram_schmidt_kernel(cfg, k, X, Y)
        worst = max(worst, float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)))
    _dump({"d": cfg.d, "mu": cfg.mu, "max_degree": args.n, "pairs": args.pairs, "max_rel_err": worst}, args)
    if worst > 1e-8:
        raise CertificationError(f"kernel disagrees with the Gram-Schmidt oracle: {worst:.3e}")


def _emit(report, args) -> None:
    if args.out is None:
        sys.stdout.write(render_report(report, args.format))
    else:
        emit_report(report, args.out, args.format)


def _cmd_approx(args) -> None:
    cfg = _cfg(args)
    if not args.L or min(args.L) < 1:
        raise UsageError("--L needs positive levels")
    f = _function(cfg, args)
    _emit(run_approximation(cfg, f, args.L, seed=_seed(args)), args)


def _cmd_integrate(args) -> None:
    cfg = _cfg(args)
    f = _function(cfg, args)
    stream = SeededStream(_seed(args), 0)
    if args.method == "det":
        L = largest_level(cfg.d, args.n)
        if L < 1:
            raise UsageError(f"budget {args.n} too small")
        op = make_operator(cfg, L)
        value, used = int_of_g_l(op, f), len(op.rule)
    elif args.method == "mc":
        value, used = mc_integrate(cfg, f, args.n, stream).value, args.n
    else:
        try:
            budget = cv_budget(cfg, args.n)
        except ValueError as exc:
            raise UsageError(str(exc))
        value = cv_integrate(cfg, f, budget, make_operator(cfg, budget.L), stream)
        used = budget.node_count + budget.N
    doc = {
        "function": f.name,
        "method": args.method,
        "n": args.n,
        "evaluations": used,
        "estimate": value,
        "reference": f.integral,
        "abs_error": abs(value - f.integral),
        "seed": _seed(args),
    }
    _dump(doc, args)


def _cmd_converge(args) -> None:
    cfg = _cfg(args)
    f = _function(cfg, args)
    try:
        report = run_convergence(cfg, f, args.method, args.n_grid, args.reps if args.method != "det" else 1, _seed(args), args.p)
    except ValueError as exc:
        raise UsageError(str(exc))
    _emit(report, args)


def _cmd_fool(args) -> None:
    cfg = _cfg(args)
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    D = largest_degree(cfg.d, args.n)
    if D < 1:
        raise UsageError(f"no product rule fits in {args.n} nodes")
    rule = build_rule(cfg, D)
    f, witness = fool_rule(cfg, rule.nodes, args.n, args.r, args.p)
    doc = {
        "n": args.n,
        "rule_nodes": len(rule),
        "rule_degree": D,
        "m": f.system.m,
        "bumps": len(f.system),
        "surviving": int(np.sum(f.signs != 0)),
        "normalization": f.normalization,
        "rule_output": rule.integrate(f),
        "witness": witness,
        "witness_scaled": witness * args.n ** (args.r / cfg.d),
    }
    _dump(doc, args)


_COMMANDS = {
    "rule": _cmd_rule,
    "kernel": _cmd_kernel,
    "approx": _cmd_approx,
    "integrate": _cmd_integrate,
    "converge": _cmd_converge,
    "fool": _cmd_fool,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ballquad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CertificationError, NormAccuracyError, FiniteDifferenceError) as exc:
        print(f"ballquad: certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (ValueError, OSError) as exc:
        print(f"ballquad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
