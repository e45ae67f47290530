"""Catalog of jet identities and the checks built on it.

Cases come from the ``*.jet`` files shipped in ``heisenjet/catalog`` (or the
directories listed in ``JETCHECK_CATALOG``) plus the completed-square chain
for M, which is assembled here because its coefficients are rational
functions of ``n, p, s``.
"""

from __future__ import annotations

import fnmatch
import os
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable

import sympy

from .coeff import CoeffPoly
from .core import Expression
from .normalizer import RewriteConfig, TermCapExceeded, normalize
from .parser import load_records, parse
from .report import VerificationReport, timed

CATALOG_ENV = "JETCHECK_CATALOG"

N, P, S = sympy.symbols("n p s")


@dataclass(frozen=True)
class IdentityCase:
    id: str
    lhs: Callable[[], Expression]
    rhs: Callable[[], Expression]
    requires_pde: bool
    quote: str = ""
    compare: str = "exact"  # "re": only the real parts must agree
    source: str = ""
    p_value: Fraction | None = None  # set once p has been specialized

    def difference(self) -> Expression:
        d = self.lhs() - self.rhs()
        return d.re_part() if self.compare == "re" else d

    def specialize(self, p=None, n=None) -> "IdentityCase":
        """The same case with numeric values substituted for ``p`` / ``n``."""
        lhs, rhs = self.lhs, self.rhs
        tag = ",".join(f"{k}={v}" for k, v in (("n", n), ("p", p)) if v is not None)
        return replace(
            self,
            id=f"{self.id}[{tag}]" if tag else self.id,
            lhs=lambda: lhs().at(n=n, p=p),
            rhs=lambda: rhs().at(n=n, p=p),
            p_value=Fraction(p) if p is not None else self.p_value,
        )


def _const(e: Expression) -> Callable[[], Expression]:
    return lambda: e


# --------------------------------------------------------------------------
# catalog files


def catalog_sources() -> list[tuple[str, str]]:
    """(name, text) of every catalog file, honouring ``JETCHECK_CATALOG``."""
    env = os.environ.get(CATALOG_ENV)
    out = []
    if env:
        for entry in env.split(os.pathsep):
            path = Path(entry)
            files = sorted(path.glob("*.jet")) if path.is_dir() else [path]
            if not files or not all(f.is_file() for f in files):
                raise FileNotFoundError(f"{CATALOG_ENV} entry {entry!r} has no catalog files")
            out += [(str(f), f.read_text()) for f in files]
        return out
    pkg = resources.files("heisenjet") / "catalog"
    for f in sorted(pkg.iterdir(), key=lambda x: x.name):
        if f.name.endswith(".jet"):
            out.append((f.name, f.read_text()))
    return out


def cases_from_text(text: str, name: str = "<text>", ops=None) -> list[IdentityCase]:
    """Each ``==`` of a chain becomes ``id.stepK``; the whole chain keeps ``id``."""
    out = []
    for rec in load_records(text, ops=ops):
        if "id" not in rec.meta:
            raise ValueError(f"{name}:{rec.line}: record without @id")
        cid = rec.meta["id"]
        pde = rec.meta.get("pde", "yes").lower() in ("yes", "true", "1")
        common = dict(
            requires_pde=pde,
            quote=rec.meta.get("quote", ""),
            compare=rec.meta.get("compare", "exact"),
            source=f"{name}:{rec.line}",
            p_value=Fraction(rec.meta["p"]) if "p" in rec.meta else None,
        )
        sides = rec.sides
        if common["p_value"] is not None:
            sides = [e.at(p=common["p_value"]) for e in sides]
        if len(sides) > 2:
            for k in range(len(sides) - 1):
                out.append(IdentityCase(f"{cid}.step{k + 1}", _const(sides[k]), _const(sides[k + 1]), **common))
        out.append(IdentityCase(cid, _const(sides[0]), _const(sides[-1]), **common))
    return out


def load_catalog(ops=None, include_sos: bool = True) -> list[IdentityCase]:
    cases = []
    for name, text in catalog_sources():
        cases += cases_from_text(text, name, ops=ops)
    if include_sos:
        cases += sos_cases()
    seen = set()
    for c in cases:
        if c.id in seen:
            raise ValueError(f"duplicate case id {c.id!r}")
        seen.add(c.id)
    return sorted(cases, key=lambda c: c.id)


def select(cases: list[IdentityCase], pattern: str | None) -> list[IdentityCase]:
    if not pattern:
        return list(cases)
    return [c for c in cases if fnmatch.fnmatchcase(c.id, pattern)]


def get_case(case_id: str, cases: list[IdentityCase] | None = None) -> IdentityCase:
    for c in cases if cases is not None else load_catalog():
        if c.id == case_id:
            return c
    raise KeyError(f"no case {case_id!r}")


# --------------------------------------------------------------------------
# verification


def _shuffled(e: Expression, rng: random.Random) -> Expression:
    items = list(e.terms.items())
    rng.shuffle(items)
    return Expression(dict(items), e.signature)


def verify(
    case: IdentityCase,
    *,
    max_terms: int = 100_000,
    shuffle_seed: int | None = None,
    oracle_ns: tuple = (),
    oracle_points: int = 100,
    seed: int = 0,
) -> VerificationReport:
    """Normalize ``lhs - rhs``; optionally cross-check with the concrete oracle."""
    from .oracle import oracle_failures

    cfg = RewriteConfig(use_pde=case.requires_pde, max_terms=max_terms, p_value=case.p_value)
    with timed() as clock:
        lhs, rhs = case.lhs(), case.rhs()
        diff = lhs - rhs
        if case.compare == "re":
            diff = diff.re_part()
        if shuffle_seed is not None:
            diff = _shuffled(diff, random.Random(shuffle_seed))
        try:
            residual = normalize(diff, cfg, case_id=case.id)
        except TermCapExceeded as exc:
            if exc.case_id is None:
                exc.case_id = case.id
            raise
        oracle = {}
        for n_val in oracle_ns:
            oracle[n_val] = oracle_failures(
                diff, n_val, oracle_points, seed, solve_pde=case.requires_pde, p_value=case.p_value
            )
    return VerificationReport(
        case_id=case.id,
        residual=residual,
        lhs_terms=len(lhs),
        rhs_terms=len(rhs),
        seconds=clock.elapsed,
        oracle=oracle,
    )


def verify_all(cases, **kw) -> list[VerificationReport]:
    return [verify(c, **kw) for c in sorted(cases, key=lambda c: c.id)]


def p_divisible(coeff: CoeffPoly) -> bool:
    return bool(coeff.terms) and all(e[1] > 0 for e in coeff.terms)


def p_tail(e: Expression) -> Expression:
    """Monomials of ``e`` whose coefficient is divisible by p (exp weights ignored)."""
    return Expression({k: c for k, c in e.terms.items() if p_divisible(c)}, e.signature)


@dataclass
class SpecializationReport:
    case_id: str
    report: VerificationReport
    tail_terms_symbolic: int  # p-divisible monomials of the normalized RHS
    tail_terms_at_zero: int  # the same count after p := 0

    @property
    def ok(self) -> bool:
        return self.report.ok and self.tail_terms_symbolic > 0 and self.tail_terms_at_zero == 0


def verify_p_zero(case: IdentityCase) -> SpecializationReport:
    """Verify ``case`` at p = 0 and check that its p-tail has disappeared."""
    rhs_sym = normalize(case.rhs(), RewriteConfig(use_pde=case.requires_pde))
    spec = case.specialize(p=0)
    rhs0 = normalize(spec.rhs(), RewriteConfig(use_pde=case.requires_pde, p_value=Fraction(0)))
    return SpecializationReport(
        case_id=spec.id,
        report=verify(spec),
        tail_terms_symbolic=len(p_tail(rhs_sym)),
        tail_terms_at_zero=len(p_tail(rhs0)),
    )


def verify_lemma_3_1_pointwise() -> VerificationReport:
    return verify(get_case("eq3--17", load_catalog(include_sos=False)))


# --------------------------------------------------------------------------
# completed squares for M


@dataclass(frozen=True)
class SOSCoefficient:
    name: str
    expr: object  # sympy rational function of n, p

    def at(self, n, p) -> Fraction:
        v = sympy.Rational(self.expr.subs({N: sympy.Rational(n), P: sympy.Rational(p)}))
        return Fraction(int(v.p), int(v.q))

    def cleared(self, factor) -> CoeffPoly:
        """``factor * self`` as a polynomial (the factor must clear the denominator)."""
        num = sympy.cancel(sympy.together(factor * self.expr))
        if sympy.fraction(num)[1] != 1:
            raise ValueError(f"{factor} does not clear the denominator of {self.name}")
        return CoeffPoly.from_sympy(num)


S0 = SOSCoefficient("s0", sympy.Rational(1, 2) + P / (4 * N))
SOS_COEFFICIENTS = {
    "c1": SOSCoefficient("c1", -P * N * (2 * N + P) / (4 * (2 * N - P))),
    "c2": SOSCoefficient("c2", -(P / 4) * (7 * N - 6 - 8 * N * P / (2 * N - P))),
    "c3": SOSCoefficient("c3", -P * (4 * N**2 - 2 * N + P) / (2 * N - P)),
    "c4": SOSCoefficient("c4", -3 * N * P),
}

W = "(exp((2+p)*f) - 1/2*f[b]*f[b'])"


class _Blocks:
    """Pieces of M shared by all of its rearrangements."""

    def __init__(self):
        self.squares = parse(
            "exp((2*n+p)*f)*(E[a,b']*E[a',b] + D[a,b]*D[a',b'])"
            " + exp((2*n-2)*f)*(G[a]*G[a'] + (D[a,b]*f[c'] + E[a,c']*f[b])*(D[a',b']*f[c] + E[a',c]*f[b']))"
        )
        self.pair = parse("exp((2*n-2)*f)*((G[a] + D[a])*(G[a'] + D[a']) + (G[a] - E[a])*(G[a'] - E[a']))")
        self.x1 = parse("G[a] + D[a]")
        self.x2 = parse("E[a] - G[a]")
        self.y = parse(f"f[a]*{W}")
        self.e2n2 = parse("exp((2*n-2)*f)")
        self.cross = parse(
            f"p*exp((2*n-2)*f)*Re(f[a']*(G[a] + D[a]))*{W} + p*exp((2*n-2)*f)*Re(f[a']*(E[a] - G[a]))*{W}"
        )
        self.df6 = parse("(f[a]*f[a'])^3*exp((2*n-2)*f)")
        self.df4 = parse("(f[a]*f[a'])^2*exp((2*n+p)*f)")
        self.df2 = parse("f[a]*f[a']*exp((2*n+2+2*p)*f)")
        self.f00 = parse("f[0]*f[0]*exp((2*n+p)*f)")
        self.w2 = parse("f[a]*f[a']*exp((2*n-2)*f)*(exp((4+2*p)*f) + 1/4*(f[b]*f[b'])^2 - exp((2+p)*f)*f[b]*f[b'])")

    def tail(self, c6, c4, c2, c0) -> Expression:
        poly = CoeffPoly.from_sympy
        return (
            self.df6.scale(poly(c6)) + self.df4.scale(poly(c4)) + self.df2.scale(poly(c2)) + self.f00.scale(poly(c0))
        )

    def completed(self, alpha: CoeffPoly, beta: CoeffPoly) -> Expression:
        """e^{2(n-1)f} (|alpha X1 + beta Y|^2 + |alpha X2 + beta Y|^2)."""
        out = Expression.zero()
        for x in (self.x1, self.x2):
            z = x.scale(alpha) + self.y.scale(beta)
            out = out + z * z.conj()
        return self.e2n2 * out


_BLOCKS: _Blocks | None = None


def _blocks() -> _Blocks:
    global _BLOCKS
    if _BLOCKS is None:
        _BLOCKS = _Blocks()
    return _BLOCKS


M_TAIL = (-P * N / 4, -P / 4 * (7 * N - 6), -P * (2 * N - 1), -3 * N * P)


def rhs_main() -> Expression:
    return get_case("eq2.7", load_catalog(include_sos=False)).rhs()


def m_split() -> Expression:
    """M with the pair of squares split as s (...) + (1-s) (...)."""
    b = _blocks()
    s = CoeffPoly.var("s")
    return b.squares + b.pair.scale(s) + b.pair.scale(1 - s) + b.cross + b.tail(*M_TAIL)


def m_split_times_1ms() -> Expression:
    return m_split().scale(1 - CoeffPoly.var("s"))


def m_completed_times_1ms() -> Expression:
    """(1-s) times M with the (1-s) part written as completed squares."""
    b = _blocks()
    s = CoeffPoly.var("s")
    one_minus_s = 1 - s
    half_p = CoeffPoly.from_sympy(P / 2)
    return (
        (b.squares + b.pair.scale(s)).scale(one_minus_s)
        + b.completed(one_minus_s, half_p)
        - b.w2.scale(CoeffPoly.from_sympy(P**2 / 2))
        + b.tail(*M_TAIL).scale(one_minus_s)
    )


def _collected_tail():
    return (
        -P * (N / 4 + P / (8 * (1 - S))),
        -P / 4 * (7 * N - 6 - 2 * P / (1 - S)),
        -P * (2 * N - 1 + P / (2 * (1 - S))),
        -3 * N * P,
    )


def m_collected_times_1ms() -> Expression:
    """(1-s) times M with the p^2 terms folded into the tail coefficients."""
    b = _blocks()
    s = CoeffPoly.var("s")
    one_minus_s = 1 - s
    tail = [sympy.cancel((1 - S) * c) for c in _collected_tail()]
    return (
        (b.squares + b.pair.scale(s)).scale(one_minus_s)
        + b.completed(one_minus_s, CoeffPoly.from_sympy(P / 2))
        + b.tail(*tail)
    )


# weight that clears every denominator once s = s0: 4n(2n - p) = 16 n^2 (1 - s0)
K0 = 4 * N * (2 * N - P)


def m_at_s0_times_k0() -> Expression:
    """K0 * M in the s0 form, from the (1-s) form by substituting s = s0."""
    if sympy.cancel(K0 - 16 * N**2 * (1 - S0.expr)) != 0:
        raise AssertionError("K0 is not 16 n^2 (1 - s0)")

    def sub(c: CoeffPoly) -> CoeffPoly:
        v = sympy.cancel(16 * N**2 * c.to_sympy().subs(S, S0.expr))
        return CoeffPoly.from_sympy(v)

    return m_collected_times_1ms().map_coeffs(sub)


def m_final_times_k0() -> Expression:
    """K0 * M written with s0 and the coefficients c1..c4."""
    b = _blocks()
    poly = CoeffPoly.from_sympy
    # K0 / (1 - s0) = (4n)^2, so each square picks up alpha = 4n (1 - s0), beta = 4n * p/2
    alpha = poly(sympy.cancel(4 * N * (1 - S0.expr)))
    beta = poly(2 * N * P)
    c = SOS_COEFFICIENTS
    return (
        b.squares.scale(poly(K0))
        + b.pair.scale(S0.cleared(K0))
        + b.completed(alpha, beta)
        + b.df6.scale(c["c1"].cleared(K0))
        + b.df4.scale(c["c2"].cleared(K0))
        + b.df2.scale(c["c3"].cleared(K0))
        + b.f00.scale(c["c4"].cleared(K0))
    )


def m_divergence() -> Expression:
    return get_case("eq3-2", load_catalog(include_sos=False)).lhs()


def sos_cases() -> list[IdentityCase]:
    q = {
        "eq3-3": "M = (|E|^2 + |D|^2) e^{(2n+p)f} + ... + s(|G+D|^2 + |G-E|^2) + (1-s)(|G+D|^2 + |G-E|^2) + ...",
        "eq3-3a": "|sqrt(1-s)(G_a + D_a) + p/(2 sqrt(1-s)) f_a (e^{(2+p)f} - |df|^2/2)|^2",
        "eq3-3b": "-p[n/4 + p/(8(1-s))]|df|^6 e^{2(n-1)f} - (p/4)[7n - 6 - 2p/(1-s)]|df|^4 e^{(2n+p)f} ...",
        "eq3-3c": "s = s0 = 1/2 + p/(4n); -p n(2n+p)/(4(2n-p)) |df|^6 e^{2(n-1)f} ...",
    }
    return [
        IdentityCase("eq3-3", rhs_main, m_split, True, q["eq3-3"], source="identity_suite"),
        IdentityCase("eq3-3-real", m_split, lambda: m_split().conj(), False, "M is real", source="identity_suite"),
        IdentityCase("eq3-3a", m_split_times_1ms, m_completed_times_1ms, False, q["eq3-3a"], source="identity_suite"),
        IdentityCase("eq3-3b", m_completed_times_1ms, m_collected_times_1ms, False, q["eq3-3b"], source="identity_suite"),
        IdentityCase("eq3-3c-equals-M", m_at_s0_times_k0, m_final_times_k0, False, q["eq3-3c"], source="identity_suite"),
    ]


SOS_CHAIN = ("eq3-3", "eq3-3a", "eq3-3b", "eq3-3c-equals-M")


def s_one_probe() -> Expression:
    """Residual of -d/ds (completed squares) at s = 1 against the p-linear cross terms.

    At s = 1 only the cross terms of the completed squares survive a first
    derivative, so they must reproduce the two ``p Re[...]`` lines of M.
    """
    b = _blocks()
    one_minus_s = 1 - CoeffPoly.var("s")
    sq = b.completed(one_minus_s, CoeffPoly.from_sympy(P / 2))

    def d_at_1(c: CoeffPoly) -> CoeffPoly:
        return CoeffPoly.from_sympy(-sympy.diff(c.to_sympy(), S).subs(S, 1))

    return normalize(sq.map_coeffs(d_at_1) - b.cross)


def verify_sos_chain(**kw) -> VerificationReport:
    """Run every link of the M chain plus the reality and s = 1 probes."""
    cases = {c.id: c for c in sos_cases()}
    reports = [verify(cases[cid], **kw) for cid in SOS_CHAIN + ("eq3-3-real",)]
    with timed() as clock:
        probe = s_one_probe()
    bad = [r for r in reports if not r.ok]
    notes = [f"{r.case_id}: {r.residual_terms} residual terms" for r in reports]
    notes.append(f"s=1 probe: {len(probe)} residual terms")
    residual = bad[0].residual if bad else probe
    return VerificationReport(
        case_id="sos-chain",
        residual=residual,
        lhs_terms=sum(r.lhs_terms for r in reports),
        rhs_terms=sum(r.rhs_terms for r in reports),
        seconds=sum(r.seconds for r in reports) + clock.elapsed,
        oracle={k: sum(r.oracle.get(k, 0) for r in reports) for r in reports for k in r.oracle},
        note="; ".join(notes),
    )


# --------------------------------------------------------------------------
# positivity of the final coefficients

U, TT = sympy.symbols("u t", nonnegative=True)


@dataclass
class SignCertificate:
    """``value(n = 1 + u, p = -2/(1 + t)) = num / den`` with both sides positive for u >= 0, t > 0."""

    name: str
    num: object
    den: object
    ok: bool

    def text(self) -> str:
        verdict = "positive" if self.ok else "NOT certified"
        return f"{self.name} = ({sympy.factor(self.num)}) / ({sympy.factor(self.den)})  [{verdict}]"


def _positive_on_domain(poly_expr) -> bool:
    # nonnegative coefficients in u, t and a nonzero u-free part: > 0 for u >= 0, t > 0
    poly = sympy.Poly(sympy.expand(poly_expr), U, TT)
    if any(c < 0 for c in poly.coeffs()):
        return False
    return sympy.expand(poly_expr.subs(U, 0)) != 0


def sign_certificate(name: str, expr) -> SignCertificate:
    e = sympy.together(expr.subs({N: 1 + U, P: -2 / (1 + TT)}))
    num, den = sympy.fraction(sympy.factor(e))
    num, den = sympy.expand(num), sympy.expand(den)
    if sympy.Poly(den, U, TT).LC() < 0:
        num, den = -num, -den
    return SignCertificate(name, num, den, _positive_on_domain(num) and _positive_on_domain(den))


@dataclass
class PositivityReport:
    n_max: int
    p_samples: int
    checked: int = 0
    failures: list = field(default_factory=list)  # (n, p, name, value)
    certificates: list = field(default_factory=list)
    boundary: dict = field(default_factory=dict)  # name -> values approaching (n, p) = (1, -2)

    @property
    def ok(self) -> bool:
        return not self.failures and all(c.ok for c in self.certificates)

    def lines(self) -> list[str]:
        out = [f"grid: n = 1..{self.n_max}, {self.p_samples} samples of p in (-2, 0), {self.checked} values checked"]
        for n, p, name, v in self.failures[:20]:
            out.append(f"FAIL {name}(n={n}, p={p}) = {v}")
        out += [c.text() for c in self.certificates]
        for name, vals in self.boundary.items():
            out.append(f"n=1, p -> -2+: {name} = " + ", ".join(str(v) for v in vals))
        return out


def p_grid(samples: int) -> list[Fraction]:
    return [Fraction(-2 * k, samples + 1) for k in range(1, samples + 1)]


def check_positivity(n_max: int, p_samples: int) -> PositivityReport:
    """Exact grid evaluation of s0, 1 - s0, c1..c4 plus symbolic sign certificates."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if p_samples < 2:
        raise ValueError("p_samples must be at least 2")
    rep = PositivityReport(n_max, p_samples)
    # plain-Fraction copies of the formulas keep the grid loop fast
    funcs = {
        "s0": lambda n, p: Fraction(1, 2) + p / (4 * n),
        "1-s0": lambda n, p: Fraction(1, 2) - p / (4 * n),
        "c1": lambda n, p: -p * n * (2 * n + p) / (4 * (2 * n - p)),
        "c2": lambda n, p: -(p / 4) * (7 * n - 6 - 8 * n * p / (2 * n - p)),
        "c3": lambda n, p: -p * (4 * n * n - 2 * n + p) / (2 * n - p),
        "c4": lambda n, p: -3 * n * p,
    }
    exprs = {"s0": S0.expr, "1-s0": 1 - S0.expr, **{k: v.expr for k, v in SOS_COEFFICIENTS.items()}}
    # the fast copies must agree with the symbolic definitions
    for name, fn in funcs.items():
        for n, p in ((1, Fraction(-1)), (3, Fraction(-7, 5))):
            v = sympy.Rational(exprs[name].subs({N: n, P: sympy.Rational(p.numerator, p.denominator)}))
            if Fraction(int(v.p), int(v.q)) != fn(Fraction(n), p):
                raise AssertionError(f"grid formula for {name} disagrees with its definition")
    grid = p_grid(p_samples)
    for n in range(1, n_max + 1):
        nf = Fraction(n)
        for p in grid:
            for name, fn in funcs.items():
                v = fn(nf, p)
                rep.checked += 1
                if v <= 0:
                    rep.failures.append((n, p, name, v))
    rep.certificates = [sign_certificate(name, e) for name, e in exprs.items()]
    approach = [Fraction(-2) + Fraction(1, 10**k) for k in (1, 3, 6)]
    rep.boundary = {name: [funcs[name](Fraction(1), p) for p in approach] for name in ("s0", "c1", "c3")}
    return rep
