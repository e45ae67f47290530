"""One check per acceptance criterion; each prints a PASS/FAIL line."""

import random
import time
from fractions import Fraction

import jetgen
import mutants
from heisenjet import ParseError, normalize, parse, to_text
from heisenjet.identity_suite import (
    check_positivity,
    load_catalog,
    verify,
    verify_p_zero,
    verify_sos_chain,
)
from heisenjet.yamabe import YamabeParams, check_commutators, check_yamabe_solves

LINES = []

SECTION2 = ["eq2.5", "eq2.6"] + [f"eq2.{k}" for k in range(8, 19)]
POINTWISE = ["eq3--17", "eq3-21-pointwise"]

YAMABE_PARAMS = {
    1: [(1j, (0,)), (2j, (1,)), (1 + 3j, (1 + 1j,))],
    2: [(1j, (0, 0)), (2j, (1, 1j)), (-1 + 1.5j, (0.5, -0.5j))],
}


def report(k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}"
    LINES.append((k, line))
    print(line)
    assert ok, line


def test_criterion_1_flagship():
    case = {c.id: c for c in load_catalog(include_sos=False)}["eq2.7"]
    t0 = time.perf_counter()
    rep = verify(case)
    secs = time.perf_counter() - t0
    report(
        1,
        rep.symbolic_ok and secs < 60,
        f"eq2.7 residual {rep.residual_terms} terms (lhs {rep.lhs_terms}, rhs {rep.rhs_terms}) in {secs:.2f}s",
    )


def test_criterion_2_chain_and_mutations():
    cases = {c.id: c for c in load_catalog(include_sos=False)}
    wanted = [cid for cid in cases if any(cid == b or cid.startswith(b + ".step") for b in SECTION2 + POINTWISE)]
    missing = [cid for cid in SECTION2 + POINTWISE if cid not in cases]
    bad = [cid for cid in wanted if not verify(cases[cid]).symbolic_ok]
    # every builder, flipping its first and its last monomial
    mutant_problems = []
    for name in mutants.BUILDERS:
        for which in (0, -1):
            changed, failing, flagged = mutants.run_mutant(name, which, baseline=cases)
            if not failing or failing != flagged or not failing <= changed:
                mutant_problems.append(f"{name}[{which}]")
    report(
        2,
        not missing and not bad and not mutant_problems,
        f"{len(wanted)} cases zero, missing {missing}, failing {bad}; "
        f"{2 * len(mutants.BUILDERS)} mutants, mismatched {mutant_problems}",
    )


def test_criterion_3_p_zero():
    case = {c.id: c for c in load_catalog(include_sos=False)}["eq2.7"]
    rep = verify_p_zero(case)
    report(
        3,
        rep.ok,
        f"{rep.case_id} residual {rep.report.residual_terms} terms; "
        f"p-divisible rhs monomials {rep.tail_terms_symbolic} symbolic, {rep.tail_terms_at_zero} at p=0",
    )


def test_criterion_4_sos_chain():
    rep = verify_sos_chain()
    report(4, rep.ok, rep.note)


def test_criterion_5_positivity():
    rep = check_positivity(100, 199)
    c3 = rep.boundary["c3"]
    to_zero = all(v > 0 for v in c3) and c3 == sorted(c3, reverse=True) and c3[-1] < Fraction(1, 10**5)
    report(
        5,
        rep.ok and rep.checked == 100 * 199 * 6 and to_zero,
        f"{rep.checked} exact values, {len(rep.failures)} nonpositive; c3 at n=1, p->-2+: {[float(v) for v in c3]}",
    )


def test_criterion_6_oracle():
    cases = load_catalog()
    disagree = []
    points = 0
    for case in cases:
        rep = verify(case, oracle_ns=(1, 2), oracle_points=100, seed=0)
        points += 200
        oracle_zero = all(v == 0 for v in rep.oracle.values())
        if not (rep.symbolic_ok and oracle_zero):
            disagree.append((case.id, rep.symbolic_ok, dict(rep.oracle)))
    report(6, not disagree, f"{len(cases)} cases, {points} point evaluations, problems {disagree}")


def test_criterion_7_commutators():
    reps = [check_commutators(n, functions=20, seed=0) for n in (1, 2)]
    report(
        7,
        all(r.ok for r in reps),
        ", ".join(f"n={r.n}: {r.checks} exact checks, {len(r.nonzero)} nonzero" for r in reps),
    )


def test_criterion_8_yamabe():
    parts = []
    ok = True
    for n, choices in YAMABE_PARAMS.items():
        for k, (lam, mu) in enumerate(choices):
            rep = check_yamabe_solves(YamabeParams(n, lam, mu), sample_count=50, seed=k)
            good = rep.ok and rep.spread <= 1e-10 and rep.solved_C > 0
            ok = ok and good
            parts.append(f"n={n} lambda={lam}: spread {rep.spread:.1e}, C {rep.solved_C:.6g}")
    report(8, ok and len(parts) == 6, "; ".join(parts))


def test_criterion_9_parser():
    rng = random.Random(9)
    bad = 0
    for i in range(1000):
        src = jetgen.random_text(rng, free=("u", "v'") if i % 2 else ())
        e = parse(src)
        if not normalize(parse(to_text(e)) - e).is_zero():
            bad += 1
    crashes = 0
    alphabet = list("fgnpsIDEGZ[](),+-*/^'0123 ab") + ["exp(", "delta(", "conj(", "Re(", "f["]
    for _ in range(3000):
        src = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 30)))
        try:
            parse(src)
        except ParseError:
            pass
        except Exception:
            crashes += 1
    report(9, bad == 0 and crashes == 0, f"1000 round trips, {bad} nonzero residuals; 3000 fuzz inputs, {crashes} crashes")
