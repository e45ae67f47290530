"""Command-line front end: ``jetcheck verify|normalize|positivity|yamabe``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction

from .normalizer import RewriteConfig, TermCapExceeded, normalize
from .parser import ParseError, parse, to_text

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    pattern: str | None = None
    n_values: tuple = (1, 2)
    points: int = 100
    seed: int = 0
    fmt: str = "text"
    term_cap: int = 100_000
    p_value: Fraction | None = None
    timings: bool = False


def _parse_sets(items) -> Fraction | None:
    p = None
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects name=value, got {item!r}")
        if key.strip() != "p":
            raise UsageError(f"only p can be fixed with --set, got {key!r}")
        try:
            p = Fraction(val.strip())
        except ValueError:
            raise UsageError(f"not a rational number: {val!r}") from None
    return p


def _parse_ns(text: str) -> tuple:
    if text.strip().lower() in ("", "none"):
        return ()
    try:
        ns = tuple(int(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise UsageError(f"--n expects integers, got {text!r}") from None
    if any(n < 1 for n in ns):
        raise UsageError("oracle dimensions must be at least 1")
    return ns


def _complex(text: str) -> complex:
    t = text.strip().replace(" ", "").replace("I", "j").replace("i", "j")
    if t in ("j", "+j"):
        return 1j
    if t == "-j":
        return -1j
    try:
        return complex(t)
    except ValueError:
        raise UsageError(f"not a complex number: {text!r}") from None


# --------------------------------------------------------------------------
# commands


def cmd_verify(cfg: RunConfig, out) -> int:
    from .identity_suite import load_catalog, p_tail, select, verify

    cases = select(load_catalog(), cfg.pattern)
    if not cases:
        raise UsageError(f"no catalog case matches {cfg.pattern!r}")
    if cfg.p_value is not None:
        cases = [c.specialize(p=cfg.p_value) for c in cases]
    failed = 0
    for case in sorted(cases, key=lambda c: c.id):
        try:
            rep = verify(
                case,
                max_terms=cfg.term_cap,
                oracle_ns=cfg.n_values,
                oracle_points=cfg.points,
                seed=cfg.seed,
            )
        except TermCapExceeded as exc:
            failed += 1
            if cfg.fmt == "records":
                print(json.dumps({"id": case.id, "status": "error", "error": str(exc)}, sort_keys=True), file=out)
            else:
                print(f"ERROR {case.id}: {exc}", file=out)
            continue
        tail = None
        if cfg.p_value is not None:
            # monomials with a p-divisible coefficient left after substituting p
            rhs = normalize(case.rhs(), RewriteConfig(case.requires_pde, cfg.term_cap, p_value=cfg.p_value))
            tail = len(p_tail(rhs))
        failed += not rep.ok
        if cfg.fmt == "records":
            rec = rep.record(cfg.timings)
            if tail is not None:
                rec["p_tail_terms"] = tail
            print(json.dumps(rec, sort_keys=True), file=out)
            continue
        status = "PASS" if rep.ok else "FAIL"
        line = f"{status} {rep.case_id}: residual {rep.residual_terms} terms (lhs {rep.lhs_terms}, rhs {rep.rhs_terms})"
        if rep.oracle:
            line += ", oracle " + " ".join(f"n={k}:{v}/{cfg.points} bad" for k, v in sorted(rep.oracle.items()))
        if tail is not None:
            line += f", p-tail {tail} terms"
        if cfg.timings:
            line += f", {rep.seconds:.2f}s"
        print(line, file=out)
        if not rep.symbolic_ok:
            text = to_text(rep.residual)
            print("    residual: " + (text if len(text) < 2000 else text[:2000] + " ..."), file=out)
    if cfg.fmt == "text":
        print(f"{len(cases) - failed}/{len(cases)} cases pass", file=out)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_normalize(src: str, use_pde: bool, term_cap: int, out) -> int:
    try:
        e = parse(src)
    except ParseError as exc:
        lines = src.split("\n")
        if 1 <= exc.line <= len(lines):
            print("  " + lines[exc.line - 1], file=sys.stderr)
            print("  " + " " * (exc.col - 1) + "^", file=sys.stderr)
        raise
    print(to_text(normalize(e, RewriteConfig(use_pde=use_pde, max_terms=term_cap))), file=out)
    return EXIT_OK


def cmd_positivity(n_max: int, samples: int, out) -> int:
    from .identity_suite import check_positivity

    if n_max < 1:
        raise UsageError("--n-max must be at least 1")
    if samples < 2:
        raise UsageError("--samples must be at least 2")
    rep = check_positivity(n_max, samples)
    for line in rep.lines():
        print(line, file=out)
    print("PASS" if rep.ok else "FAIL", file=out)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_yamabe(n: int, lam: str, mu: str, points: int, seed: int, out) -> int:
    from .yamabe import YamabeParams, check_yamabe_solves

    if n not in (1, 2):
        raise UsageError("--n must be 1 or 2")
    if points < 10:
        raise UsageError("--points must be at least 10")
    mus = [_complex(x) for x in mu.split(",")]
    if len(mus) == 1 and n > 1:
        mus = mus * n
    try:
        params = YamabeParams(n, _complex(lam), tuple(mus))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep = check_yamabe_solves(params, points, seed)
    print(f"n={n} lambda={params.lam} mu={params.mu}", file=out)
    print(f"ratio -Lap(u)/u^q* over {points} points: mean {rep.constant:.15g}, max relative spread {rep.spread:.3e}", file=out)
    print(f"C making the constant 2n^2 = {2 * n * n}: {rep.solved_C:.15g} (check: {rep.check_at_solved:.15g})", file=out)
    if not rep.ok:
        a, b = rep.worst
        print(f"most discrepant points: {a} and {b}", file=out)
    print("PASS" if rep.ok else "FAIL", file=out)
    return EXIT_OK if rep.ok else EXIT_FAIL


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jetcheck", description="Exact checks of CR jet identities on the Heisenberg group.")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="verify catalog identities")
    v.add_argument("pattern", nargs="?", default=None, help="glob on case ids, e.g. 'eq2.*'")
    v.add_argument("--set", action="append", metavar="p=VALUE", help="fix p before verifying")
    v.add_argument("--n", default="1,2", help="oracle dimensions (comma separated, or 'none')")
    v.add_argument("--points", type=int, default=100, help="oracle jet points per dimension")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--format", choices=("text", "records"), default="text")
    v.add_argument("--term-cap", type=int, default=100_000)
    v.add_argument("--timings", action="store_true", help="include wall time in the output")

    nm = sub.add_parser("normalize", help="print the canonical form of an expression")
    nm.add_argument("expr")
    g = nm.add_mutually_exclusive_group()
    g.add_argument("--pde", dest="pde", action="store_true")
    g.add_argument("--no-pde", dest="pde", action="store_false")
    nm.set_defaults(pde=False)
    nm.add_argument("--term-cap", type=int, default=100_000)

    ps = sub.add_parser("positivity", help="sign check of the completed-square coefficients")
    ps.add_argument("--n-max", type=int, default=100)
    ps.add_argument("--samples", type=int, default=199)

    y = sub.add_parser("yamabe", help="check the explicit Yamabe solution")
    y.add_argument("--n", type=int, default=1)
    y.add_argument("--lambda", dest="lam", default="i")
    y.add_argument("--mu", default="0", help="comma separated complex entries")
    y.add_argument("--points", type=int, default=50)
    y.add_argument("--seed", type=int, default=0)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "verify":
            if args.points < 1:
                raise UsageError("--points must be positive")
            if args.term_cap < 1:
                raise UsageError("--term-cap must be positive")
            cfg = RunConfig(
                command="verify",
                pattern=args.pattern,
                n_values=_parse_ns(args.n),
                points=args.points,
                seed=args.seed,
                fmt=args.format,
                term_cap=args.term_cap,
                p_value=_parse_sets(args.set),
                timings=args.timings,
            )
            return cmd_verify(cfg, out)
        if args.command == "normalize":
            if args.term_cap < 1:
                raise UsageError("--term-cap must be positive")
            return cmd_normalize(args.expr, args.pde, args.term_cap, out)
        if args.command == "positivity":
            return cmd_positivity(args.n_max, args.samples, out)
        return cmd_yamabe(args.n, args.lam, args.mu, args.points, args.seed, out)
    except UsageError as exc:
        print(f"jetcheck: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"jetcheck: parse error at {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TermCapExceeded as exc:
        print(f"jetcheck: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except FileNotFoundError as exc:
        print(f"jetcheck: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
