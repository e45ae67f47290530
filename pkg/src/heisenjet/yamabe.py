"""Explicit functions on the Heisenberg group and the Yamabe solution.

Functions are sympy expressions in ``z1..zn``, ``zb1..zbn`` and ``t`` with
``zb`` treated as an independent variable, so

    Z_a  = d/dz_a  + i zb_a d/dt
    Z_a' = d/dzb_a - i z_a  d/dt

act by plain differentiation; a point substitutes ``zb = conj(z)``.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from .core import ANTI, DUMMY, HOL, T, Expression

TCODE = (T, 0)


def symbols(n: int):
    z = sympy.symbols(f"z1:{n + 1}")
    zb = sympy.symbols(f"zb1:{n + 1}")
    return z, zb, sympy.Symbol("t", real=True)


@dataclass(frozen=True)
class HPoint:
    z: tuple
    t: object

    @property
    def n(self) -> int:
        return len(self.z)

    def subs(self) -> dict:
        z, zb, t = symbols(self.n)
        out = {t: self.t}
        for k, zk in enumerate(self.z):
            out[z[k]] = zk
            out[zb[k]] = sympy.conjugate(zk) if isinstance(zk, sympy.Basic) else zk.conjugate()
        return out


def apply_field(expr, n: int, x):
    """One vector field; ``x`` is (HOL, k), (ANTI, k) or (T, 0) with k in 1..n."""
    z, zb, t = symbols(n)
    kind, k = x
    if kind == T:
        return sympy.diff(expr, t)
    if not 1 <= k <= n:
        raise ValueError(f"index {k} out of range 1..{n}")
    if kind == HOL:
        return sympy.diff(expr, z[k - 1]) + sympy.I * zb[k - 1] * sympy.diff(expr, t)
    return sympy.diff(expr, zb[k - 1]) - sympy.I * z[k - 1] * sympy.diff(expr, t)


def z_word(expr, n: int, word):
    """Apply the fields of ``word`` left to right (``f_{ab'}`` = Z_b'(Z_a f))."""
    for x in word:
        expr = apply_field(expr, n, x)
    return expr


def z_apply(fn, word, pt: HPoint):
    """Exact derivative of the closed form ``fn`` along ``word`` at ``pt``."""
    if not isinstance(fn, sympy.Basic):
        raise TypeError("fn must be a sympy expression in z, zb, t")
    if len(word) > 4:
        raise ValueError("words longer than 4 are not supported")
    z, zb, t = symbols(pt.n)
    extra = fn.free_symbols - set(z) - set(zb) - {t}
    if extra:
        raise ValueError(f"unsupported symbols in closed form: {sorted(map(str, extra))}")
    val = z_word(fn, pt.n, word).subs(pt.subs())
    return sympy.expand(val) if _exact(pt) else complex(val.evalf(30))


def _exact(pt: HPoint) -> bool:
    return all(isinstance(v, sympy.Basic) for v in (*pt.z, pt.t))


def random_polynomial(n: int, rng: random.Random, terms: int = 6, degree: int = 4):
    """Random polynomial in z, zb, t with Gaussian-rational coefficients."""
    z, zb, t = symbols(n)
    gens = list(z) + list(zb) + [t]
    out = sympy.Integer(0)
    for _ in range(terms):
        mon = sympy.Integer(1)
        for _ in range(rng.randint(1, degree)):
            mon *= rng.choice(gens)
        c = sympy.Rational(rng.randint(-9, 9), rng.randint(1, 5)) + sympy.I * sympy.Rational(rng.randint(-9, 9), rng.randint(1, 5))
        out += c * mon
    return out


def random_exact_point(n: int, rng: random.Random) -> HPoint:
    q = lambda: sympy.Rational(rng.randint(-9, 9), rng.randint(1, 4))
    return HPoint(tuple(q() + sympy.I * q() for _ in range(n)), q())


@dataclass
class CommutatorReport:
    n: int
    checks: int = 0
    nonzero: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.checks > 0 and not self.nonzero


def check_commutators(n: int, functions: int = 20, seed: int = 0) -> CommutatorReport:
    """[Z_a, Z_b'] = -2i delta_ab T, [Z_a, Z_b] = 0, [T, Z_a] = 0 on random polynomials.

    Residuals are computed symbolically and evaluated at exact Gaussian-rational
    points, so success means an exact zero.
    """
    rng = random.Random(f"commutators|{seed}|{n}")
    rep = CommutatorReport(n)
    idx = range(1, n + 1)
    for k in range(functions):
        fn = random_polynomial(n, rng)
        pt = random_exact_point(n, rng)
        for a, b in itertools.product(idx, idx):
            tests = [
                (((HOL, a), (ANTI, b)), ((ANTI, b), (HOL, a)), 2 * sympy.I * (1 if a == b else 0)),
                (((HOL, a), (HOL, b)), ((HOL, b), (HOL, a)), 0),
                (((ANTI, a), (ANTI, b)), ((ANTI, b), (ANTI, a)), 0),
            ]
            for w1, w2, c in tests:
                # f_{w1} - f_{w2} = c * f_0
                res = sympy.expand(z_word(fn, n, w1) - z_word(fn, n, w2) - c * z_word(fn, n, (TCODE,)))
                val = sympy.expand(res.subs(pt.subs()))
                rep.checks += 1
                if val != 0:
                    rep.nonzero.append((k, w1, w2, val))
        for a in idx:
            for kind in (HOL, ANTI):
                res = sympy.expand(z_word(fn, n, ((kind, a), TCODE)) - z_word(fn, n, (TCODE, (kind, a))))
                rep.checks += 1
                if res.subs(pt.subs()) != 0:
                    rep.nonzero.append((k, (kind, a), TCODE, res))
    return rep


# --------------------------------------------------------------------------
# the Yamabe solution


@dataclass(frozen=True)
class YamabeParams:
    n: int
    lam: complex
    mu: tuple
    C: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if len(self.mu) != self.n:
            raise ValueError(f"mu needs {self.n} entries, got {len(self.mu)}")
        if not self.C > 0:
            raise ValueError("C must be positive")
        bound = sum(abs(complex(m)) ** 2 for m in self.mu) / 4
        if not complex(self.lam).imag > bound:
            raise ValueError(f"inadmissible parameters: Im(lambda) = {complex(self.lam).imag} must exceed |mu|^2/4 = {bound}")

    def with_C(self, C: float) -> "YamabeParams":
        return YamabeParams(self.n, self.lam, self.mu, C)


def q_star(n: int) -> Fraction:
    """(Q+2)/(Q-2) with homogeneous dimension Q = 2n+2."""
    Q = 2 * n + 2
    return Fraction(Q + 2, Q - 2)


def q_lower(n: int) -> Fraction:
    Q = 2 * n + 2
    return Fraction(Q, Q - 2)


def _w(params: YamabeParams):
    n = params.n
    z, zb, t = symbols(n)
    lam = sympy.nsimplify(complex(params.lam).real) + sympy.I * sympy.nsimplify(complex(params.lam).imag)
    mu = [sympy.nsimplify(complex(m).real) + sympy.I * sympy.nsimplify(complex(m).imag) for m in params.mu]
    zz = sum(z[k] * zb[k] for k in range(n))
    w = t + sympy.I * zz + sum(z[k] * mu[k] for k in range(n)) + lam
    wb = t - sympy.I * zz + sum(zb[k] * sympy.conjugate(mu[k]) for k in range(n)) + sympy.conjugate(lam)
    return w, wb


def yamabe_kernel(params: YamabeParams):
    """C |t + i z.zb + z.mu + lambda|^{-n} as a closed form."""
    w, wb = _w(params)
    # Im w > 0 on the whole group, so the principal powers split
    half = sympy.Rational(-params.n, 2)
    return sympy.nsimplify(params.C) * w**half * wb**half


def yamabe_u(params: YamabeParams, pt: HPoint) -> float:
    if pt.n != params.n:
        raise ValueError("point and parameters disagree on n")
    z = [complex(v) for v in pt.z]
    t = float(pt.t)
    w = t + 1j * sum(abs(v) ** 2 for v in z) + sum(zk * complex(m) for zk, m in zip(z, params.mu)) + complex(params.lam)
    return params.C * abs(w) ** (-params.n)


def random_float_point(n: int, rng: random.Random, scale: float = 2.0) -> HPoint:
    return HPoint(tuple(complex(rng.uniform(-scale, scale), rng.uniform(-scale, scale)) for _ in range(n)), rng.uniform(-scale, scale))


def _numeric(expr, n: int):
    z, zb, t = symbols(n)
    fn = sympy.lambdify([*z, *zb, t], expr, modules="mpmath")

    def at(pt: HPoint):
        args = [*pt.z, *(complex(v).conjugate() for v in pt.z), pt.t]
        return complex(fn(*args))

    return at


def sublaplacian(expr, n: int):
    """u_{aa'} + u_{a'a} summed over a."""
    out = sympy.Integer(0)
    for a in range(1, n + 1):
        out += z_word(expr, n, ((HOL, a), (ANTI, a))) + z_word(expr, n, ((ANTI, a), (HOL, a)))
    return out


@dataclass
class YamabeReport:
    params: YamabeParams
    ratios: list
    spread: float  # max relative deviation from the mean ratio
    worst: tuple  # the two most discrepant points
    constant: float  # ratio for C = params.C
    solved_C: float  # C making the ratio 2n^2
    check_at_solved: float  # ratio recomputed with solved_C
    tolerance: float = 1e-10

    @property
    def ok(self) -> bool:
        target = 2 * self.params.n**2
        return (
            self.spread <= self.tolerance
            and self.solved_C > 0
            and abs(self.check_at_solved - target) <= self.tolerance * target
        )


def _ratio_fn(params: YamabeParams):
    n = params.n
    u = yamabe_kernel(params)
    lap = _numeric(sublaplacian(u, n), n)
    qs = q_star(n)

    def ratio(pt: HPoint) -> float:
        uval = yamabe_u(params, pt)
        r = -lap(pt) / uval ** float(qs)
        return r

    return ratio


def check_yamabe_solves(params: YamabeParams, sample_count: int = 50, seed: int = 0, tolerance: float = 1e-10) -> YamabeReport:
    """Ratio -Lap u / u^{q*} at random points; it must be a positive constant."""
    if params.n not in (1, 2):
        raise ValueError("the Yamabe check supports n = 1, 2")
    if sample_count < 10:
        raise ValueError("sample_count must be at least 10")
    rng = random.Random(f"yamabe|{seed}|{params.n}")
    pts = [random_float_point(params.n, rng) for _ in range(sample_count)]
    ratio = _ratio_fn(params)
    vals = [ratio(pt) for pt in pts]
    if any(abs(v.imag) > tolerance * abs(v) for v in vals):
        raise ArithmeticError("the sub-Laplacian ratio has an imaginary part")
    reals = [v.real for v in vals]
    mean = sum(reals) / len(reals)
    devs = [abs(r - mean) / abs(mean) for r in reals]
    i_max = max(range(len(reals)), key=reals.__getitem__)
    i_min = min(range(len(reals)), key=reals.__getitem__)
    # u = C u_1 gives ratio C^{1-q*} K; solve C^{1-q*} K = 2n^2
    qs = float(q_star(params.n))
    K = mean / params.C ** (1 - qs)
    target = 2 * params.n**2
    solved = (target / K) ** (1 / (1 - qs)) if K > 0 else float("nan")
    check = _ratio_fn(params.with_C(solved))(pts[0]).real if K > 0 else float("nan")
    return YamabeReport(
        params=params,
        ratios=reals,
        spread=max(devs),
        worst=(pts[i_max], pts[i_min]),
        constant=mean,
        solved_C=solved,
        check_at_solved=check,
        tolerance=tolerance,
    )


def evaluate_numeric(e: Expression, n: int, p, jet, fval: float, free: dict | None = None) -> complex:
    """Float value of ``e`` with jets supplied by ``jet(word) -> complex``."""
    free = dict(free or {})
    total = 0j
    for coeff, exp, factors, deltas in e.raw_terms():
        c = complex(coeff.evaluate(n=n, p=Fraction(p), s=0))
        k = float(exp.const + exp.n_coef * n + exp.p_coef * Fraction(p))
        dummies = sorted({ix.label for w in factors for ix in w if ix.status == DUMMY})
        for combo in itertools.product(range(1, n + 1), repeat=len(dummies)):
            env = dict(zip(dummies, combo))
            if any(free[h.label] != free[a.label] for h, a in deltas):
                continue
            val = c * math.exp(k * fval)
            for w in factors:
                seq = tuple(
                    TCODE if ix.kind == T else (ix.kind, env[ix.label] if ix.status == DUMMY else free[ix.label])
                    for ix in w
                )
                val *= jet(seq)
            total += val
    return total


def transformed_equation_residuals(params: YamabeParams, points: int = 20, seed: int = 0) -> list[float]:
    """Relative residual of ``Re f_{aa'} + n|df|^2 + n e^{2f}`` for f = log(u)/n.

    ``u`` is rescaled so that it solves the critical equation; the residual
    expression comes from the text language, independently of sympy.
    """
    from .parser import parse

    rep = check_yamabe_solves(params, 10, seed)
    sol = params.with_C(rep.solved_C)
    n = sol.n
    w, wb = _w(sol)
    f = (sympy.log(sympy.Float(sol.C, 30)) - sympy.Rational(n, 2) * sympy.log(w * wb)) / n
    expr = parse("Re(f[a,a']) + n*f[b]*f[b'] + n*exp((2+p)*f)")
    scale_expr = parse("n*f[b]*f[b'] + n*exp((2+p)*f)")
    cache: dict = {}

    def jet_for(pt):
        def jet(seq):
            if seq not in cache:
                cache[seq] = _numeric(z_word(f, n, seq), n)
            return cache[seq](pt)

        return jet

    rng = random.Random(f"transform|{seed}|{n}")
    out = []
    for _ in range(points):
        pt = random_float_point(n, rng)
        fval = math.log(yamabe_u(sol, pt)) / n
        r = evaluate_numeric(expr, n, 0, jet_for(pt), fval)
        s = evaluate_numeric(scale_expr, n, 0, jet_for(pt), fval)
        out.append(abs(r) / abs(s))
    return out
