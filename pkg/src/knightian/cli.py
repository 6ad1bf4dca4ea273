"""Command-line interface: ``knightian <command> [flags]``.

Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 domain error.
Rationals are accepted as ``p/q``, integers or decimals (converted exactly).
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

from .core import CandidateSet, KnightianError, format_rational, parse_rational
from .dominance import FiniteMechanism, dnt, intersection_probe, tabulate, uded
from .mechanisms import (ExpectedOutcome, check_allocation_function, check_d_dm, check_delta_good,
                         check_monotone, make_mechanism, price_opt, random_assignment, second_price)
from .pricing import PriceExpression
from . import welfare

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3


# ------------------------------------------------------------ flag parsing

def rational_arg(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"invalid rational {text!r}: {exc}") from None


def rational_list(text: str) -> list[Fraction]:
    out = []
    for pos, part in enumerate(text.split(","), start=1):
        try:
            out.append(parse_rational(part))
        except (ValueError, ZeroDivisionError):
            raise argparse.ArgumentTypeError(f"entry {pos} ({part!r}) is not a rational") from None
    return out


def int_list(text: str) -> list[int]:
    out = []
    for pos, part in enumerate(text.split(","), start=1):
        try:
            out.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"entry {pos} ({part!r}) is not an integer") from None
    return out


def candidate_set(text: str) -> CandidateSet:
    """``lo..hi`` or a comma list of integers."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return CandidateSet.interval(int(lo), int(hi))
        return CandidateSet(tuple(int_list(text)))
    except (ValueError, KnightianError) as exc:
        raise argparse.ArgumentTypeError(f"invalid candidate set {text!r}: {exc}") from None


def delta_grid(text: str) -> list[Fraction]:
    """``start:stop:step`` (inclusive) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("grid must be start:stop:step")
        start, stop, step = (rational_arg(p) for p in parts)
        if step <= 0:
            raise argparse.ArgumentTypeError("grid step must be positive")
        out, x = [], start
        while x <= stop:
            out.append(x)
            x += step
        return out
    return rational_list(text) if text else []


def emit(doc) -> None:
    print(json.dumps(doc, separators=(",", ":")))


def price_json(p):
    if isinstance(p, PriceExpression):
        return format_rational(p.rational_part) if p.is_rational else p.to_json()
    return format_rational(p)


# ------------------------------------------------------------- commands

def cmd_alloc(args) -> int:
    if args.mech == "random":
        n = args.n if args.n is not None else len(args.bids or [])
        if n < 1:
            raise argparse.ArgumentTypeError("random needs --n or --bids")
        emit({"probs": [format_rational(p) for p in random_assignment(n)]})
        return EXIT_PASS
    if not args.bids:
        raise argparse.ArgumentTypeError("--bids is required")
    if args.mech == "opt":
        mech = make_mechanism("opt", len(args.bids), args.delta)
        emit({"probs": [format_rational(p) for p in mech.alloc(args.bids)]})
        return EXIT_PASS
    out = second_price(args.bids, args.tie)
    if isinstance(out, ExpectedOutcome):
        emit({"probs": [format_rational(p) for p in out.probs],
              "prices": [format_rational(p) for p in out.prices]})
    else:
        probs = [format_rational(Fraction(int(j == out.winner))) for j in range(len(args.bids))]
        emit({"probs": probs, "winner": None if out.winner is None else out.winner + 1,
              "prices": [format_rational(p) for p in out.prices]})
    return EXIT_PASS


def cmd_price(args) -> int:
    i = args.player - 1
    if args.mech == "opt":
        p = price_opt(i, args.bids, args.delta, conditional=args.conditional)
    else:
        p = make_mechanism(args.mech, len(args.bids), args.delta, args.tie).prices(args.bids)[i]
    emit({"player": args.player, "price": price_json(p), "approx": float(p)})
    return EXIT_PASS


def _table(args) -> FiniteMechanism:
    if args.mech_json:
        with open(args.mech_json) as fh:
            return FiniteMechanism.from_json(json.load(fh))
    return tabulate(args.mech, args.n, args.B, args.delta, args.tie)


def cmd_uded(args) -> int:
    M = _table(args)
    res = uded(M, args.player - 1, args.K)
    emit({"player": args.player, "K": list(args.K.values), "uded": list(res.strategies),
          "undecided": list(res.undecided)})
    return EXIT_PASS


def cmd_dnt(args) -> int:
    M = _table(args)
    emit({"player": args.player, "K": list(args.K.values), "dnt": dnt(M, args.player - 1, args.K)})
    return EXIT_PASS


def _mixed_json(sigma):
    return {str(s): format_rational(w) for s, w in sigma.weights}


def cmd_probe(args) -> int:
    M = _table(args)
    res = intersection_probe(M, args.player - 1, args.K, args.K2)
    emit({"epsilon": format_rational(res.epsilon), "sigma": _mixed_json(res.sigma),
          "sigma_other": _mixed_json(res.sigma_other),
          "uded": list(res.uded.strategies), "uded_other": list(res.uded_other.strategies)})
    return EXIT_PASS


def cmd_construct(args) -> int:
    if args.theorem == "1":
        K_hat, K, theta = welfare.theorem1_construction(args.n, args.B, args.delta)
        emit({"K_hat": [list(k.values) for k in K_hat], "K": [list(k.values) for k in K],
              "theta": list(theta),
              "bound": format_rational(welfare.theorem1_bound(args.n, args.B, args.delta))})
    else:
        ctx = welfare.theorem35_construction(args.n, args.B, args.delta, args.y_rounding)
        emit(ctx.to_json())
    return EXIT_PASS


def cmd_sweep(args) -> int:
    rows = welfare.sweep_rows(args.n, args.deltas)
    try:
        welfare.write_sweep_csv(args.out, rows)
        if args.svg:
            welfare.write_sweep_svg(args.svg, rows)
    except OSError as exc:
        print(f"error: cannot write {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_DOMAIN
    emit({"rows": len(rows), "csv": args.out, "svg": args.svg})
    return EXIT_PASS


def cmd_audit(args) -> int:
    build = {"uniform": welfare.uniform_direct, "midpoint": welfare.midpoint_second_price_direct}
    M = build[args.direct](args.n, args.B, args.delta)
    try:
        rep = welfare.theorem1_audit(M, args.n, args.B, args.delta)
    except welfare.NotTruthful as exc:
        i, K, report, theta, others = exc.witness
        emit({"passed": False, "truthful": False,
              "witness": {"player": i + 1, "K": list(K.values), "better_report": list(report.values),
                          "theta": theta, "others": [list(o.values) for o in others]}})
        return EXIT_FAIL
    emit(rep.to_json())
    return EXIT_PASS if rep.passed else EXIT_FAIL


# ---------------------------------------------------------- verify suites

def _fn_suite(args, checker, *extra):
    mech = make_mechanism(args.mech, args.n, args.delta, args.tie)
    wit = checker(mech, *extra)
    return wit is None, {"witness": None if wit is None else json.loads(json.dumps(wit, default=str))}


def suite_allocation(args):
    return _fn_suite(args, lambda m: check_allocation_function(m, args.n, args.B))


def suite_monotone(args):
    return _fn_suite(args, lambda m: check_monotone(m, args.n, args.B, args.grid_step))


def suite_dm(args):
    return _fn_suite(args, lambda m: check_d_dm(m, args.d, args.n, args.B))


def suite_good(args):
    ok, doc = _fn_suite(args, lambda m: check_delta_good(m, args.delta, args.n, args.B))
    if not ok:
        i, v = doc["witness"]
        doc["witness"] = {"player": i + 1, "v": v}
    return ok, doc


def suite_dominance(args):
    """DM-box inclusion of UDed for every admissible interval."""
    mech = make_mechanism(args.mech, args.n, args.delta, args.tie)
    widen = welfare.dm_widening(mech)
    if widen is None:
        raise KnightianError(f"no distinguishable-monotonicity box for {args.mech}")
    M = tabulate(mech, args.n, args.B)
    checked = 0
    for i in range(args.n):
        for K in welfare.interval_sets(args.B, args.delta):
            res = uded(M, i, K)
            checked += 1
            allowed = set(welfare.box(K, widen, args.B))
            if not res.strategies or not set(res.strategies) <= allowed:
                return False, {"checked": checked, "witness": {
                    "player": i + 1, "K": list(K.values), "uded": list(res.strategies)}}
    return True, {"checked": checked}


def suite_theorem2(args):
    docs = {}
    ok = True
    for tie in ("lex", "random"):
        rep = welfare.verify_positive_theorem("2p", args.n, args.B, args.delta, tie=tie)
        docs[tie] = rep.to_json()
        ok &= rep.passed
    return ok, docs


def suite_theorem4(args):
    rep = welfare.verify_positive_theorem("opt", args.n, args.B, args.delta)
    return rep.passed, rep.to_json()


def suite_bracket(args):
    d = args.delta
    cap_2p = welfare.bound_curves(args.n, d).second_price + Fraction(4, args.B)
    cap_opt = welfare.bound_curves(args.n, d).opt + Fraction(4, args.B)
    doc, ok = {}, True
    for mech, cap in (("2p", cap_2p), ("opt", cap_opt)):
        whole = welfare.worst_case_ratio(mech, args.n, args.B, d, args.tie)
        built = welfare.construction_ratio(mech, args.n, args.B, d, args.tie)
        good = whole.ratio <= cap and built.ratio <= cap
        ok &= good
        doc[mech] = {"cap": format_rational(cap), "worst": whole.to_json(),
                     "construction": built.to_json(), "passed": good}
    return ok, doc


def suite_probe(args):
    M = tabulate(args.mech, args.n, args.B, args.delta, args.tie)
    rng = random.Random(args.seed)
    pairs = [(args.K, args.K2)] if args.K and args.K2 else []
    while len(pairs) < args.trials:
        lo = rng.randint(1, args.B - 2)
        hi = rng.randint(lo + 1, args.B)
        lo2 = rng.randint(max(0, lo - 2), hi - 1)
        hi2 = rng.randint(max(lo2, lo) + 1, args.B)
        pairs.append((CandidateSet.interval(lo, hi), CandidateSet.interval(lo2, hi2)))
    results = []
    ok = True
    for K, K2 in pairs:
        res = intersection_probe(M, args.player - 1, K, K2)
        ok &= res.epsilon == 0
        results.append({"K": list(K.values), "K2": list(K2.values),
                        "epsilon": format_rational(res.epsilon)})
    return ok, {"instances": results}


SUITES = {
    "allocation": suite_allocation, "monotone": suite_monotone, "dm": suite_dm,
    "good": suite_good, "dominance": suite_dominance, "theorem2": suite_theorem2,
    "theorem4": suite_theorem4, "bracket": suite_bracket, "probe": suite_probe,
}


def cmd_verify(args) -> int:
    needs_delta = args.mech == "opt" or args.suite in (
        "good", "dominance", "theorem2", "theorem4", "bracket")
    if needs_delta and args.delta is None:
        raise argparse.ArgumentTypeError(f"suite {args.suite} needs --delta")
    ok, doc = SUITES[args.suite](args)
    emit({"suite": args.suite, "passed": bool(ok), **doc})
    return EXIT_PASS if ok else EXIT_FAIL


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="knightian", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mech_default="2p", bids=False, table=False):
        sp.add_argument("--mech", choices=("2p", "random", "opt"), default=mech_default)
        sp.add_argument("--delta", type=rational_arg)
        sp.add_argument("--tie", choices=("lex", "random"), default="lex")
        sp.add_argument("--n", type=int)
        if bids:
            sp.add_argument("--bids", type=int_list)
        if table:
            sp.add_argument("--B", type=int, default=10)
            sp.add_argument("--player", type=int, default=1, help="1-based player index")
            sp.add_argument("--mech-json", help="tabulated mechanism in JSON instead of --mech")

    sp = sub.add_parser("alloc", help="allocation vector of a bid profile")
    common(sp, bids=True)
    sp.set_defaults(func=cmd_alloc)

    sp = sub.add_parser("price", help="expected price of one player")
    common(sp, mech_default="opt", bids=True)
    sp.add_argument("--player", type=int, default=1)
    sp.add_argument("--conditional", action="store_true", help="price conditional on winning")
    sp.set_defaults(func=cmd_price)

    for name, func in (("uded", cmd_uded), ("dnt", cmd_dnt)):
        sp = sub.add_parser(name, help=f"{name} strategies for a candidate set")
        common(sp, table=True)
        sp.add_argument("--K", type=candidate_set, required=True)
        sp.set_defaults(func=func)

    sp = sub.add_parser("probe", help="undominated intersection LP")
    common(sp, table=True)
    sp.add_argument("--K", type=candidate_set, required=True)
    sp.add_argument("--K2", type=candidate_set, required=True)
    sp.set_defaults(func=cmd_probe)

    sp = sub.add_parser("construct", help="adversarial contexts")
    sp.add_argument("--theorem", choices=("1", "35"), default="35")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--B", type=int, required=True)
    sp.add_argument("--delta", type=rational_arg, required=True)
    sp.add_argument("--y-rounding", choices=("ceil", "floor"), default="ceil")
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("verify", help="run a verification suite")
    sp.add_argument("suite", choices=sorted(SUITES))
    common(sp, table=True)
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--grid-step", type=rational_arg, default=Fraction(1, 2))
    sp.add_argument("--K", type=candidate_set)
    sp.add_argument("--K2", type=candidate_set)
    sp.add_argument("--trials", type=int, default=6)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sweep", help="bound curves to CSV (and SVG)")
    sp.add_argument("--n", type=int_list, default=[2, 4])
    sp.add_argument("--deltas", type=delta_grid, default=delta_grid("1/20:19/20:1/20"))
    sp.add_argument("--out", required=True)
    sp.add_argument("--svg")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("audit", help="dominant-strategy audit of a direct mechanism")
    sp.add_argument("--direct", choices=("uniform", "midpoint"), default="uniform")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--B", type=int, default=10)
    sp.add_argument("--delta", type=rational_arg, default=Fraction(1, 2))
    sp.set_defaults(func=cmd_audit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "n", None) is None and getattr(args, "bids", None):
        args.n = len(args.bids)
    if args.command in ("uded", "dnt", "probe", "verify") and args.n is None:
        args.n = 2
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    except (KnightianError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
