"""Exact coefficient arithmetic: Gaussian rationals and sparse polynomials over them.

Coefficients of jet monomials live in Q(i)[n, p, s].  ``n`` is the CR dimension,
``p`` the exponent offset and ``s`` the free weight of the square-completion
step; all three are kept as indeterminates.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

VARS = ("n", "p", "s")
NVARS = len(VARS)

Exps = tuple  # (deg_n, deg_p, deg_s)

_ZERO_EXPS = (0, 0, 0)


class GaussQ:
    """A Gaussian rational ``re + im*i`` with exact components."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if isinstance(re, Fraction) else Fraction(re)
        self.im = im if isinstance(im, Fraction) else Fraction(im)

    @classmethod
    def coerce(cls, x) -> "GaussQ":
        if isinstance(x, GaussQ):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        return cls(x, 0)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if not isinstance(other, GaussQ):
            try:
                other = GaussQ.coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __add__(self, other):
        other = GaussQ.coerce(other)
        return GaussQ(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = GaussQ.coerce(other)
        return GaussQ(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return GaussQ.coerce(other) - self

    def __neg__(self):
        return GaussQ(-self.re, -self.im)

    def __mul__(self, other):
        other = GaussQ.coerce(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        return GaussQ(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = GaussQ.coerce(other)
        den = other.re * other.re + other.im * other.im
        if not den:
            raise ZeroDivisionError("division by zero Gaussian rational")
        num = self * other.conj()
        return GaussQ(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        return GaussQ.coerce(other) / self

    def __pow__(self, k: int):
        out = GaussQ(1)
        base = self
        if k < 0:
            base, k = GaussQ(1) / base, -k
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conj(self) -> "GaussQ":
        return GaussQ(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def is_real(self) -> bool:
        return not self.im

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if not self.im:
            return f"GaussQ({self.re})"
        return f"GaussQ({self.re}, {self.im})"


I = GaussQ(0, 1)
ONE = GaussQ(1)


class CoeffPoly:
    """Sparse polynomial in (n, p, s) with Gaussian-rational coefficients.

    Zero entries are never stored, so the zero polynomial has an empty map.
    Instances are treated as immutable.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[Exps, GaussQ] | None = None):
        clean = {}
        if terms:
            for e, c in terms.items():
                c = GaussQ.coerce(c)
                if c:
                    clean[tuple(e)] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "CoeffPoly":
        obj = cls.__new__(cls)
        obj.terms = terms
        obj._hash = None
        return obj

    @classmethod
    def const(cls, c) -> "CoeffPoly":
        c = GaussQ.coerce(c)
        return cls._raw({_ZERO_EXPS: c} if c else {})

    @classmethod
    def var(cls, name: str) -> "CoeffPoly":
        e = [0] * NVARS
        e[VARS.index(name)] = 1
        return cls._raw({tuple(e): GaussQ(1)})

    @classmethod
    def linear(cls, const=0, n=0, p=0, s=0) -> "CoeffPoly":
        return cls({_ZERO_EXPS: const, (1, 0, 0): n, (0, 1, 0): p, (0, 0, 1): s})

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self) -> bool:
        return not self.terms or set(self.terms) == {_ZERO_EXPS}

    def constant_value(self) -> GaussQ:
        return self.terms.get(_ZERO_EXPS, GaussQ(0))

    def __eq__(self, other):
        if not isinstance(other, CoeffPoly):
            if isinstance(other, (int, Fraction, GaussQ)):
                other = CoeffPoly.const(other)
            else:
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __add__(self, other):
        if not isinstance(other, CoeffPoly):
            other = CoeffPoly.const(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            if e in out:
                v = out[e] + c
                if v:
                    out[e] = v
                else:
                    del out[e]
            else:
                out[e] = c
        return CoeffPoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return CoeffPoly._raw({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, CoeffPoly):
            other = CoeffPoly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return CoeffPoly.const(other) - self

    def __mul__(self, other):
        if not isinstance(other, CoeffPoly):
            c = GaussQ.coerce(other)
            if not c:
                return CoeffPoly._raw({})
            return CoeffPoly._raw({e: v * c for e, v in self.terms.items()})
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
                v = c1 * c2
                if e in out:
                    v = out[e] + v
                    if v:
                        out[e] = v
                    else:
                        del out[e]
                elif v:
                    out[e] = v
        return CoeffPoly._raw(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a polynomial")
        out = CoeffPoly.const(1)
        for _ in range(k):
            out = out * self
        return out

    def conj(self) -> "CoeffPoly":
        return CoeffPoly._raw({e: c.conj() for e, c in self.terms.items()})

    def real_part(self) -> "CoeffPoly":
        return CoeffPoly({e: GaussQ(c.re) for e, c in self.terms.items()})

    def degree(self, var: str) -> int:
        k = VARS.index(var)
        return max((e[k] for e in self.terms), default=0)

    def evaluate(self, n=None, p=None, s=None) -> "CoeffPoly | GaussQ":
        """Substitute numeric values for any subset of the indeterminates.

        Returns a GaussQ when every variable that occurs was given a value,
        otherwise a CoeffPoly in the remaining variables.
        """
        vals = (n, p, s)
        out: dict = {}
        for e, c in self.terms.items():
            key = list(e)
            v = c
            for k in range(NVARS):
                if vals[k] is not None and e[k]:
                    v = v * GaussQ.coerce(vals[k]) ** e[k]
                    key[k] = 0
            key = tuple(key)
            out[key] = out.get(key, GaussQ(0)) + v
        res = CoeffPoly(out)
        if res.is_constant():
            return res.constant_value()
        return res

    def substitute(self, var: str, poly: "CoeffPoly") -> "CoeffPoly":
        """Replace ``var`` by the polynomial ``poly``."""
        k = VARS.index(var)
        out = CoeffPoly()
        powers = [CoeffPoly.const(1)]
        for e, c in self.terms.items():
            d = e[k]
            while len(powers) <= d:
                powers.append(powers[-1] * poly)
            rest = list(e)
            rest[k] = 0
            out = out + CoeffPoly._raw({tuple(rest): c}) * powers[d]
        return out

    def content_monomial(self) -> Exps:
        """Componentwise minimum exponent over all terms."""
        if not self.terms:
            return _ZERO_EXPS
        es = list(self.terms)
        return tuple(min(e[k] for e in es) for k in range(NVARS))

    def shift_down(self, exps: Exps) -> "CoeffPoly":
        return CoeffPoly._raw(
            {tuple(e[k] - exps[k] for k in range(NVARS)): c for e, c in self.terms.items()}
        )

    def sorted_terms(self) -> list:
        # descending total degree, then lexicographic in (n, p, s)
        return sorted(self.terms.items(), key=lambda kv: (-sum(kv[0]), tuple(-x for x in kv[0])))

    def to_sympy(self):
        import sympy

        n, p, s = sympy.symbols("n p s")
        out = sympy.Integer(0)
        for (a, b, c), v in self.terms.items():
            coef = sympy.Rational(v.re.numerator, v.re.denominator) + sympy.I * sympy.Rational(
                v.im.numerator, v.im.denominator
            )
            out += coef * n**a * p**b * s**c
        return out

    @classmethod
    def from_sympy(cls, expr) -> "CoeffPoly":
        """Convert a sympy polynomial in n, p, s (Gaussian-rational coefficients)."""
        import sympy

        n, p, s = sympy.symbols("n p s")
        expr = sympy.expand(expr)
        extra = expr.free_symbols - {n, p, s}
        if extra:
            raise ValueError(f"unexpected symbols {sorted(map(str, extra))}")
        if expr == 0:
            return cls()
        terms = {}
        for mon, c in sympy.Poly(expr, n, p, s).terms():
            re, im = sympy.sympify(c).as_real_imag()
            re, im = sympy.Rational(re), sympy.Rational(im)
            terms[tuple(mon)] = GaussQ(Fraction(int(re.p), int(re.q)), Fraction(int(im.p), int(im.q)))
        return cls(terms)

    def __repr__(self):
        return f"CoeffPoly({format_poly(self)})"


def format_gauss(c: GaussQ) -> str:
    """Text form used by the printer: ``3``, ``-1/2``, ``2*I``, ``(1+2*I)``."""
    if not c.im:
        return str(c.re)
    if not c.re:
        if c.im == 1:
            return "I"
        if c.im == -1:
            return "-I"
        return f"{c.im}*I"
    sign = "+" if c.im > 0 else "-"
    im = "I" if abs(c.im) == 1 else f"{abs(c.im)}*I"
    return f"({c.re}{sign}{im})"


def format_monomial_vars(e: Exps) -> list[str]:
    parts = []
    for name, d in zip(VARS, e):
        if d == 1:
            parts.append(name)
        elif d > 1:
            parts.append(f"{name}^{d}")
    return parts


def format_poly_term(e: Exps, c: GaussQ) -> str:
    """One term, sign included, e.g. ``-2*n*I`` or ``1/4*p``."""
    vars_ = format_monomial_vars(e)
    if not vars_:
        return format_gauss(c)
    if c == GaussQ(1):
        return "*".join(vars_)
    if c == GaussQ(-1):
        return "-" + "*".join(vars_)
    if not c.re:
        # keep I last: -2*n*I
        mag = c.im
        lead = "" if abs(mag) == 1 else f"{abs(mag)}*"
        sign = "-" if mag < 0 else ""
        return f"{sign}{lead}{'*'.join(vars_)}*I"
    return f"{format_gauss(c)}*{'*'.join(vars_)}"


def format_poly(poly: CoeffPoly) -> str:
    if not poly.terms:
        return "0"
    out = ""
    for i, (e, c) in enumerate(poly.sorted_terms()):
        t = format_poly_term(e, c)
        if i == 0:
            out = t
        elif t.startswith("-"):
            out += " - " + t[1:]
        else:
            out += " + " + t
    return out


def poly_from_iter(items: Iterable[tuple[Exps, GaussQ]]) -> CoeffPoly:
    acc: dict = {}
    for e, c in items:
        acc[e] = acc.get(e, GaussQ(0)) + c
    return CoeffPoly(acc)
