"""CR vector fields on jets and the named tensors built from f.

``z_derivative`` appends an index to the end of a jet word, so ``f_{ab'}``
means ``Z_{b'}`` applied after ``Z_a``.  Reordering words is the normalizer's
job; nothing here commutes derivatives.
"""

from __future__ import annotations

from fractions import Fraction

from .coeff import CoeffPoly, GaussQ
from .core import (
    ANTI,
    EXP0,
    HOL,
    T,
    T0,
    Expression,
    Index,
    SignatureError,
    anti,
    finish,
    hol,
    make_summed,
    max_dummy,
    _accumulate,
)

I = GaussQ(0, 1)


def derive_raw(raw_terms, idx: Index):
    """Leibniz rule on raw terms; yields raw terms."""
    for coeff, exp, factors, deltas in raw_terms:
        factors = list(factors)
        if not exp.is_identity():
            yield coeff * exp.as_poly(), exp, factors + [(idx,)], list(deltas)
        for i, w in enumerate(factors):
            yield coeff, exp, factors[:i] + [tuple(w) + (idx,)] + factors[i + 1 :], list(deltas)


def z_derivative(e: Expression, idx: Index) -> Expression:
    """Apply ``Z_idx`` (or ``T`` for the transverse index).

    A free label of ``e`` with the opposite kind is contracted with ``idx``.
    """
    sig = set(e.signature)
    contracted = set()
    if idx.kind != T:
        for ix in e.signature:
            if ix.label == idx.label:
                if ix.kind == idx.kind:
                    raise SignatureError(f"index {idx!r} already free in the operand")
                contracted.add(ix.label)
                sig.discard(ix)
        if not contracted:
            sig.add(idx)
    acc: dict = {}
    for coeff, exp, factors, deltas in derive_raw(e.raw_terms(), idx):
        if contracted:
            factors, deltas = make_summed(factors, deltas, contracted, max_dummy(factors) + 1)
        res = finish(coeff, exp, factors, deltas)
        if res is not None:
            _accumulate(acc, *res)
    return Expression(acc, sig)


def z_word(e: Expression, word) -> Expression:
    for ix in word:
        e = z_derivative(e, ix)
    return e


def divergence(v: Expression) -> Expression:
    """``Re Z_{a'} v_a`` for a vector with exactly one free holomorphic index."""
    free = list(v.signature)
    if len(free) != 1 or free[0].kind != HOL:
        raise SignatureError(f"divergence needs exactly one free holomorphic index, got {sorted(map(repr, free))}")
    return z_derivative(v, anti(free[0].label)).re_part()


# --------------------------------------------------------------------------
# named tensors

def f(*word: Index) -> Expression:
    return Expression.jet(*word)


def exp_weight(const=0, n=0, p=0) -> Expression:
    return Expression.exp(const, n, p)


def _fresh(avoid, base="z"):
    k = 0
    while f"{base}{k}" in avoid:
        k += 1
    return f"{base}{k}"


def dfnorm2(avoid=()) -> Expression:
    """|df|^2 = f_b f_b'."""
    b = _fresh(avoid, "q")
    return f(hol(b)) * f(anti(b))


def g_expr() -> Expression:
    """g = |df|^2 + e^{(2+p)f} - i f_0."""
    return dfnorm2() + exp_weight(2, 0, 1) - f(T0).scale(I)


def D2(a: str, b: str) -> Expression:
    return f(hol(a), hol(b)) - f(hol(a)) * f(hol(b)) * 2


def E2(a: str, b: str) -> Expression:
    """E_{ab'} = f_{ab'} + g delta_{ab'}."""
    return f(hol(a), anti(b)) + g_expr() * Expression.delta(hol(a), anti(b))


def E2_trace_form_times_n(a: str, b: str) -> Expression:
    """n * E_{ab'} written as n f_{ab'} - f_{cc'} delta_{ab'} (trace-free form)."""
    c = _fresh({a, b}, "c")
    n = CoeffPoly.var("n")
    return f(hol(a), anti(b)).scale(n) - f(hol(c), anti(c)) * Expression.delta(hol(a), anti(b))


def D1(a: str) -> Expression:
    b = _fresh({a}, "b")
    return D2(a, b) * f(anti(b))


def D1_expanded(a: str) -> Expression:
    b = _fresh({a}, "b")
    return f(hol(a), hol(b)) * f(anti(b)) - dfnorm2({a}) * f(hol(a)) * 2


def E1(a: str) -> Expression:
    b = _fresh({a}, "b")
    return E2(a, b) * f(hol(b))


def E1_expanded(a: str) -> Expression:
    b = _fresh({a}, "b")
    return f(hol(a), anti(b)) * f(hol(b)) + g_expr() * f(hol(a))


def G1(a: str) -> Expression:
    """G_a = i f_{0a} + g f_a."""
    return f(T0, hol(a)).scale(I) + g_expr() * f(hol(a))


def G1_long(a: str) -> Expression:
    """G_a = i f_{0a} - i f_0 f_a + e^{(2+p)f} f_a + |df|^2 f_a."""
    fa = f(hol(a))
    return (
        f(T0, hol(a)).scale(I)
        - (f(T0) * fa).scale(I)
        + exp_weight(2, 0, 1) * fa
        + dfnorm2({a}) * fa
    )


NAMED = {
    "D2": D2,
    "E2": E2,
    "D1": D1,
    "E1": E1,
    "G1": G1,
    "g": g_expr,
    "dfnorm2": dfnorm2,
}


def build_named(name: str, *labels: str) -> Expression:
    try:
        builder = NAMED[name]
    except KeyError:
        raise ValueError(f"unknown named tensor {name!r}") from None
    return builder(*labels)


def sq_norm(x: Expression) -> Expression:
    """|X|^2 = X * conj(X), summing every free index of X."""
    return x * x.conj()


def third_order_identity_check(use_pde: bool = True):
    """f_{ab a'} = 2(n+1) G_b - n conj(g)_b - 2(n+1) f_b g."""
    from .normalizer import RewriteConfig, normalize
    from .report import VerificationReport, timed

    n = CoeffPoly.var("n")
    with timed() as clock:
        lhs = f(hol("a"), hol("b"), anti("a"))
        rhs = (
            G1("b").scale(2 * n + 2)
            - z_derivative(g_expr().conj(), hol("b")).scale(n)
            - (f(hol("b")) * g_expr()).scale(2 * n + 2)
        )
        residual = normalize(lhs - rhs, RewriteConfig(use_pde=use_pde))
    return VerificationReport(
        case_id="eq2.12" if use_pde else "eq2.12-no-pde",
        residual=residual,
        lhs_terms=len(lhs),
        rhs_terms=len(rhs),
        seconds=clock.elapsed,
    )
