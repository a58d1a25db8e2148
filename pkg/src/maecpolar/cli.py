"""Command-line front end: ``maecpolar {capacity,transform,polarize,asymptotic,verify}``.

Exit status is 0 when every requested check passes, 1 when a verification
check fails and 2 on invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .asymptotic import algorithm1, asymptotic
from .channel import (
    EXACT,
    FLOAT,
    ModeError,
    alpha_capacity,
    bhattacharyya,
    error_prob,
    format_scalar,
    load_spec,
    log_scale,
    spec_from_mapping,
    spec_to_mapping,
)
from .polar import (
    DEFAULT_GUARD,
    enumerate_branches,
    evolve,
    minus_transform,
    parse_branch,
    plus_transform,
    proportions,
    sample,
)

DEFAULT_ALPHAS = ("0", "1/2", "1", "2", "inf")
AUTO = "auto"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers


def _read_spec(args, mode: str):
    if (args.input is None) == (args.spec is None):
        raise UsageError("give exactly one of --input PATH or --spec JSON")
    if mode == AUTO:
        try:
            return _read_spec(args, EXACT)
        except ModeError:
            return _read_spec(args, FLOAT)
    if args.input is not None:
        return load_spec(args.input, mode)
    try:
        doc = json.loads(args.spec)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--spec is not valid JSON: {exc}") from None
    return spec_from_mapping(doc, mode)


def _mode(args, default: str) -> str:
    return default if args.mode is None else args.mode


def _num(x) -> str | float:
    if isinstance(x, Fraction):
        return format_scalar(x)
    return float(x)


def _cell(x) -> str:
    if isinstance(x, Fraction):
        return format_scalar(x)
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _csv_blocks(blocks: list[tuple[list[str], list[list]]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for k, (header, rows) in enumerate(blocks):
        if k:
            buf.write("\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(c) for c in row])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands


def cmd_capacity(args) -> int:
    eps = _read_spec(args, _mode(args, AUTO))
    alphas = args.alpha or list(DEFAULT_ALPHAS)
    z, pe = bhattacharyya(eps), error_prob(eps)
    rows = []
    for a in alphas:
        expr = ""
        if eps.mode == EXACT:
            try:
                exact = alpha_capacity(eps, a, args.log_base)
                value, expr = exact.value(), str(exact)
            except ModeError:
                value = alpha_capacity(eps.to_float(), a, args.log_base)
        else:
            value = alpha_capacity(eps, a, args.log_base)
        rows.append([a, float(value), expr, z, pe])
    if args.format == "json":
        _emit(args, _json({
            "q": eps.q,
            "mode": eps.mode,
            "log_base": args.log_base,
            "rows": [
                {"alpha": a, "capacity": v, "capacity_exact": e or None, "bhattacharyya": _num(zz),
                 "error_prob": _num(pp)}
                for a, v, e, zz, pp in rows
            ],
        }))
    else:
        _emit(args, _csv_blocks([(["alpha", "capacity", "capacity_exact", "bhattacharyya", "error_prob"], rows)]))
    return 0


def cmd_transform(args) -> int:
    mode = _mode(args, AUTO)
    eps = _read_spec(args, mode)
    if args.kind in ("minus", "plus"):
        other = None
        if args.other is not None:
            other = load_spec(args.other, eps.mode)
        fn = minus_transform if args.kind == "minus" else plus_transform
        out = fn(eps, other)
    else:
        if args.other is not None:
            raise UsageError("--other applies to a single minus or plus step only")
        out = evolve(eps, parse_branch(args.kind))
    if args.format == "json":
        _emit(args, _json(spec_to_mapping(out)))
    else:
        _emit(args, _csv_blocks([(["divisor", "mass"], [[str(d), x] for d, x in out.items()])]))
    return 0


def cmd_polarize(args) -> int:
    mode = _mode(args, FLOAT)
    eps = _read_spec(args, FLOAT if mode == AUTO else mode)
    n = args.steps
    deltas = (args.delta,)
    if args.samples:
        ens = sample(eps, n, args.samples, args.seed, deltas, keep_scores=True, backend=args.backend)
        ids = ens.branches if ens.branches is not None else np.arange(ens.size)
    else:
        ens = enumerate_branches(eps, n, deltas=deltas, keep_scores=True, guard=args.guard,
                                 allow_large=args.allow_large, backend=args.backend)
        ids = np.arange(ens.size)
    scale = log_scale(args.log_base, eps.q)
    caps = np.asarray(ens.scores) / scale
    order = np.argsort(caps, kind="stable")
    branch_rows = [[rank, int(ids[k]), float(caps[k])] for rank, k in enumerate(order)]
    summary = []
    for d in eps.lattice.divisors:
        hi, lo, mid = proportions(ens, d, args.delta)
        summary.append([str(d), ens.mu(d), hi, lo, mid])
    if args.format == "json":
        out = {
            "q": eps.q,
            "steps": n,
            "kind": ens.kind,
            "mode": ens.mode,
            "delta": args.delta,
            "log_base": args.log_base,
            "branches": [{"rank": r, "branch_weight": w, "capacity": c} for r, w, c in branch_rows],
            "summary": [
                {"divisor": d, "mu_n": _num(m), "prop_near_one": a, "prop_near_zero": b,
                 "prop_intermediate": c}
                for d, m, a, b, c in summary
            ],
        }
        if ens.kind == "sample":
            out["seed"] = args.seed
            out["std_err"] = {str(d): s for d, s in zip(eps.lattice.divisors, ens.std_err)}
        _emit(args, _json(out))
    else:
        _emit(args, _csv_blocks([
            (["rank", "branch_weight", "capacity"], branch_rows),
            (["divisor", "mu_n", "prop_near_one", "prop_near_zero", "prop_intermediate"], summary),
        ]))
    return 0


def cmd_asymptotic(args) -> int:
    mode = _mode(args, EXACT)
    if mode == FLOAT:
        raise UsageError("asymptotic runs in exact mode only")
    eps = _read_spec(args, EXACT)
    if args.trace:
        mu, trace = algorithm1(eps)
    else:
        mu, trace = asymptotic(eps), None
    if args.format == "json":
        out = {
            "q": eps.q,
            "method": mu.method,
            "masses": {str(d): format_scalar(x) for d, x in mu.items()},
            "support_chain": [list(t) for t in mu.support_chain],
        }
        if trace is not None:
            out["trace"] = trace.to_json_obj()
        _emit(args, _json(out))
        return 0
    blocks = [(["divisor", "mu_inf"], [[str(d), x] for d, x in mu.items()])]
    if trace is not None:
        steps, comps = [], []
        for k, s in enumerate(trace.steps, 1):
            t = " ".join(str(x) for x in s.t)
            steps.append([k, t, s.divisor, s.k, s.l, s.a, s.b, s.beta, s.lam, s.rho, s.mass, s.xi])
            for c in s.comparisons:
                comps.append([k, c.i, c.j, c.a, c.b, c.lam, c.rho])
        blocks.append((["step", "t", "divisor", "k", "l", "a", "b", "beta", "lambda", "rho", "mass", "xi"], steps))
        blocks.append((["step", "i", "j", "a", "b", "lambda", "rho"], comps))
    _emit(args, _csv_blocks(blocks))
    return 0


def cmd_verify(args) -> int:
    from .oracle import verify_suite

    if args.q < 2:
        raise UsageError("--q must be at least 2")
    try:
        results = verify_suite(args.q, args.trials, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ok = all(r.passed for r in results)
    if args.format == "csv":
        rows = [[r.name, r.mode, r.to_json_obj()["max_deviation"], "pass" if r.passed else "FAIL"] for r in results]
        _emit(args, _csv_blocks([(["check", "mode", "max_deviation", "result"], rows)]))
    else:
        _emit(args, _json({
            "q": args.q,
            "trials": args.trials,
            "seed": args.seed,
            "pass": ok,
            "checks": [r.to_json_obj() for r in results],
        }))
    return 0 if ok else 1


# ---------------------------------------------------------------- parser


def _delta(text: str) -> float:
    x = float(text)
    if not 0 < x < 0.5:
        raise argparse.ArgumentTypeError("delta must lie in (0, 1/2)")
    return x


def _base(text: str) -> str | float:
    if text in ("q", "e", "2"):
        return text
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("log base must be q, e, 2 or a number > 1") from None
    if not x > 1 or math.isinf(x):
        raise argparse.ArgumentTypeError("log base must exceed 1")
    return x


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("channel spec")
    src.add_argument("--input", "-i", help="JSON or TOML channel spec file")
    src.add_argument("--spec", help="inline JSON channel spec")
    common.add_argument("--mode", choices=(EXACT, FLOAT, AUTO), default=None,
                        help="number mode (default: auto, float for polarize, exact for asymptotic)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", "-o", help="write to this file instead of stdout")
    common.add_argument("--log-base", type=_base, default="q", help="q (default), e, 2 or a number")

    p = argparse.ArgumentParser(prog="maecpolar", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("capacity", parents=[common], help="alpha-capacities, Z and P_e")
    c.add_argument("--alpha", action="append", help="order alpha (repeatable; default 0,1/2,1,2,inf)")
    c.set_defaults(func=cmd_capacity)

    t = sub.add_parser("transform", parents=[common], help="one polar transform or a sign string")
    t.add_argument("kind", help="minus, plus, or a sign string such as '-+-'")
    t.add_argument("--other", help="second channel spec (defaults to the first)")
    t.set_defaults(func=cmd_transform)

    z = sub.add_parser("polarize", parents=[common], help="branch capacities and proportions after n steps")
    z.add_argument("--steps", "-n", type=int, default=12)
    z.add_argument("--samples", type=int, default=0, help="Monte Carlo sample count (0 = full enumeration)")
    z.add_argument("--seed", type=int, default=0)
    z.add_argument("--delta", type=_delta, default=0.01)
    z.add_argument("--guard", type=int, default=DEFAULT_GUARD, help="largest n enumerated without --allow-large")
    z.add_argument("--allow-large", action="store_true")
    z.add_argument("--backend", choices=("numba", "numpy"), default=None)
    z.set_defaults(func=cmd_polarize)

    a = sub.add_parser("asymptotic", parents=[common], help="limit distribution mu^(inf)")
    a.add_argument("--trace", action="store_true", help="include the step-by-step trace")
    a.set_defaults(func=cmd_asymptotic)

    v = sub.add_parser("verify", help="constructive transform-equivalence checks")
    v.add_argument("--q", type=int, required=True)
    v.add_argument("--trials", type=int, default=10)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--format", choices=("csv", "json"), default="json")
    v.add_argument("--output", "-o")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "steps", 0) is not None and getattr(args, "steps", 0) < 0:
        parser.error("--steps must be nonnegative")
    if getattr(args, "samples", 0) < 0:
        parser.error("--samples must be nonnegative")
    try:
        return args.func(args)
    except (UsageError, ValueError, TypeError, OSError) as exc:
        print(f"maecpolar {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
