"""Concrete-dimension evaluation of jet expressions.

Dummy sums are expanded over ``1..n`` and every concrete derivative word is
reduced to free coordinates at a jet point.  This path never calls the
abstract normalizer: reordering uses the commutator ``[Z_a, Z_b'] = -2i
delta_ab T`` on concrete indices, and the equation is imposed by solving
``f_{nn'} = -n g - sum_{a<n} f_{aa'}`` for the coordinate with the largest
index.

``e^{kf}`` is kept as a formal power ``E^k``; values are finite sums
``sum_k c_k E^k`` with Gaussian-rational ``c_k``, so a residual is zero only
if it vanishes for every value of ``f``.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from functools import lru_cache

from .coeff import GaussQ
from .core import ANTI, DUMMY, HOL, T, Expression

TCODE = (T, 0)
ZERO = GaussQ(0)
MINUS_2I = GaussQ(0, -2)


class MissingCoordinate(KeyError):
    def __init__(self, coord):
        self.coord = coord
        super().__init__(f"jet point has no value for {format_coord(coord)}")


class ExpPoly:
    """Finite sum of ``c * E^k`` with Gaussian-rational c and rational k."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {k: v for k, v in (terms or {}).items() if v}

    @classmethod
    def const(cls, c) -> "ExpPoly":
        return cls({Fraction(0): GaussQ.coerce(c)})

    @classmethod
    def power(cls, k, c=1) -> "ExpPoly":
        return cls({Fraction(k): GaussQ.coerce(c)})

    def __add__(self, other):
        other = _lift(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, ZERO) + v
        return ExpPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return ExpPoly({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        other = _lift(other)
        out: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = k1 + k2
                out[k] = out.get(k, ZERO) + v1 * v2
        return ExpPoly(out)

    __rmul__ = __mul__

    def conj(self) -> "ExpPoly":
        return ExpPoly({k: v.conj() for k, v in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        try:
            other = _lift(other)
        except TypeError:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def at(self, fval: float) -> complex:
        """Numeric value for a concrete ``f``."""
        import math

        return sum(complex(v) * math.exp(float(k) * fval) for k, v in self.terms.items())

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms):
            v = self.terms[k]
            parts.append(repr(v) if k == 0 else f"{v!r}*E^{k}")
        return " + ".join(parts)


def _lift(x) -> ExpPoly:
    if isinstance(x, ExpPoly):
        return x
    return ExpPoly.const(x)


# --------------------------------------------------------------------------
# concrete words: tuples of (kind, k); T carries k = 0
# a canonical coordinate is (H, A, t): sorted hol indices, sorted anti indices, number of T


def format_coord(coord) -> str:
    hs, as_, t = coord
    parts = [str(h) for h in hs] + [f"{a}'" for a in as_] + ["0"] * t
    return "f[" + ",".join(parts) + "]"


@lru_cache(maxsize=None)
def sort_concrete(seq: tuple) -> tuple:
    """Reorder a concrete word; returns ((coef, coord), ...)."""
    body = [x for x in seq if x[0] != T]
    nt = len(seq) - len(body)
    for i in range(len(body) - 1):
        (k1, a), (k2, b) = body[i], body[i + 1]
        if k1 == ANTI and k2 == HOL:
            swapped = tuple(body[:i] + [body[i + 1], body[i]] + body[i + 2 :]) + (TCODE,) * nt
            out = list(sort_concrete(swapped))
            if a == b:
                corr = tuple(body[:i] + body[i + 2 :]) + (TCODE,) * (nt + 1)
                out += [(c * MINUS_2I, w) for c, w in sort_concrete(corr)]
            return tuple(out)
    hs = tuple(sorted(k for kind, k in body if kind == HOL))
    as_ = tuple(sorted(k for kind, k in body if kind == ANTI))
    return ((GaussQ(1), (hs, as_, nt)),)


def coord_word(coord) -> tuple:
    hs, as_, t = coord
    return tuple((HOL, h) for h in hs) + tuple((ANTI, a) for a in as_) + (TCODE,) * t


def conj_word(seq) -> tuple:
    return tuple((ANTI if k == HOL else HOL if k == ANTI else T, x) for k, x in seq)


class JetPoint:
    """Values of the free jet coordinates of a solution at one point.

    With ``seed`` set, free coordinates are drawn on demand from a generator
    keyed by the coordinate, so the point is fully determined by
    ``(n, p, seed)``.  With ``values`` only, a missing coordinate raises
    :class:`MissingCoordinate`.  ``solve_pde=False`` drops the equation and
    treats every coordinate as free (any real function).
    """

    def __init__(self, n: int, p, *, seed=None, values: dict | None = None, solve_pde: bool = True, s=None):
        if n < 1:
            raise ValueError("n must be at least 1")
        self.n = n
        self.p = Fraction(p)
        self.s = Fraction(s) if s is not None else None
        self.seed = seed
        self.solve_pde = solve_pde
        self.values: dict = {}
        for coord, v in (values or {}).items():
            self.values[coord] = _lift(v)
        self._cache: dict = {}

    def is_eliminated(self, coord) -> bool:
        hs, as_, _ = coord
        return self.solve_pde and self.n in hs and self.n in as_

    # -- free coordinates

    def _draw(self, coord, real: bool) -> GaussQ:
        rng = random.Random(f"{self.seed}|{self.n}|{coord}")
        re = Fraction(rng.randint(-9, 9), rng.randint(1, 4))
        im = Fraction(0) if real else Fraction(rng.randint(-9, 9), rng.randint(1, 4))
        return GaussQ(re, im)

    def _free(self, coord) -> ExpPoly:
        if coord in self.values:
            return self.values[coord]
        if self.seed is None:
            raise MissingCoordinate(coord)
        hs, as_, t = coord
        if hs < as_:
            v = ExpPoly.const(self._draw(coord, real=False))
        else:
            # conj(f_{A,H}) is the reversed-kind word; reorder it back to (H, A)
            partner = (as_, hs, t)
            rest = ExpPoly()
            own = ZERO
            for c, w in sort_concrete(conj_word(coord_word(partner))):
                if w == coord:
                    own = own + c
                else:
                    rest = rest + self.coord_value(w) * c
            assert own == GaussQ(1)
            if hs == as_:
                # v - conj(v) = -rest fixes the imaginary part
                v = ExpPoly.const(self._draw(coord, real=True)) - rest * GaussQ(Fraction(1, 2))
            else:
                v = self.coord_value(partner).conj() - rest
        self.values[coord] = v
        return v

    # -- equation

    def _eliminate(self, coord) -> ExpPoly:
        n = self.n
        hs, as_, t = coord
        hs = list(hs)
        as_ = list(as_)
        hs.remove(n)
        as_.remove(n)
        rest = tuple((HOL, h) for h in hs) + tuple((ANTI, a) for a in as_) + (TCODE,) * t
        lead = ((HOL, n), (ANTI, n)) + rest
        # value of the lead sequence = Z_rest(-n g) - sum_{a<n} f_{a a' rest}
        lead_val = g_derivative(self, rest) * GaussQ(-n)
        for a in range(1, n):
            lead_val = lead_val - self.seq_value(((HOL, a), (ANTI, a)) + rest)
        out = lead_val
        own = ZERO
        for c, w in sort_concrete(lead):
            if w == coord:
                own = own + c
            else:
                out = out - self.coord_value(w) * c
        assert own == GaussQ(1)
        return out

    def coord_value(self, coord) -> ExpPoly:
        got = self._cache.get(coord)
        if got is None:
            got = self._eliminate(coord) if self.is_eliminated(coord) else self._free(coord)
            self._cache[coord] = got
        return got

    def seq_value(self, seq) -> ExpPoly:
        out = ExpPoly()
        for c, w in sort_concrete(tuple(seq)):
            out = out + self.coord_value(w) * c
        return out


def _g_terms(n: int, p: Fraction):
    """g = sum_b f_b f_b' + e^{(2+p)f} - i f_0 as (coef, E-power, [words])."""
    out = [(GaussQ(1), Fraction(0), [((HOL, b),), ((ANTI, b),)]) for b in range(1, n + 1)]
    out.append((GaussQ(1), 2 + p, []))
    out.append((GaussQ(0, -1), Fraction(0), [(TCODE,)]))
    return out


def _derive(terms, x):
    out = []
    for c, k, words in terms:
        if k:
            out.append((c * GaussQ(k), k, words + [(x,)]))
        for i, w in enumerate(words):
            out.append((c, k, words[:i] + [w + (x,)] + words[i + 1 :]))
    return out


def g_derivative(pt: JetPoint, word) -> ExpPoly:
    terms = _g_terms(pt.n, pt.p)
    for x in word:
        terms = _derive(terms, x)
    total = ExpPoly()
    for c, k, words in terms:
        val = ExpPoly.power(k, c)
        for w in words:
            val = val * pt.seq_value(w)
        total = total + val
    return total


# --------------------------------------------------------------------------
# expressions


def _free_labels(e: Expression):
    return sorted({ix.label for ix in e.signature})


def evaluate(e: Expression, n_val: int, p_val, pt: JetPoint, s_val=None, free: dict | None = None) -> ExpPoly:
    """Value of ``e`` at ``pt`` with dummies summed over ``1..n_val``.

    ``free`` maps each free label to a concrete index.
    """
    if pt.n != n_val:
        raise ValueError(f"jet point is for n={pt.n}, asked for n={n_val}")
    free = dict(free or {})
    missing = [lab for lab in _free_labels(e) if lab not in free]
    if missing:
        raise ValueError(f"no concrete value for free index {missing[0]!r}")
    p_val = Fraction(p_val)
    if pt.solve_pde and pt.p != p_val:
        raise ValueError(f"jet point solves the equation for p={pt.p}, asked for p={p_val}")
    total = ExpPoly()
    for coeff, exp, factors, deltas in e.raw_terms():
        c = coeff.evaluate(n=n_val, p=p_val, s=s_val if s_val is not None else 0)
        if not isinstance(c, GaussQ):
            raise ValueError("coefficient did not evaluate to a number")
        if not c:
            continue
        k = exp.const + exp.n_coef * n_val + exp.p_coef * p_val
        dummies = sorted({ix.label for w in factors for ix in w if ix.status == DUMMY})
        for combo in itertools.product(range(1, n_val + 1), repeat=len(dummies)):
            env = dict(zip(dummies, combo))
            if any(free[h.label] != free[a.label] for h, a in deltas):
                continue
            val = ExpPoly.power(k, c)
            for w in factors:
                seq = tuple(
                    TCODE if ix.kind == T else (ix.kind, env[ix.label] if ix.status == DUMMY else free[ix.label])
                    for ix in w
                )
                val = val * pt.seq_value(seq)
            total = total + val
    return total


def evaluate_all(e: Expression, n_val: int, p_val, pt: JetPoint, s_val=None):
    """Evaluate at every assignment of the free indices; yields (assignment, value)."""
    labels = _free_labels(e)
    for combo in itertools.product(range(1, n_val + 1), repeat=len(labels)):
        free = dict(zip(labels, combo))
        yield free, evaluate(e, n_val, p_val, pt, s_val, free)


def random_p(rng: random.Random) -> Fraction:
    """A rational sample of the subcritical range (-2, 0)."""
    return Fraction(-rng.randint(1, 199), 100)


def oracle_failures(
    diff: Expression, n_val: int, points: int = 100, seed: int = 0, solve_pde: bool = True, p_value=None
) -> int:
    """Number of seeded jet points where ``diff`` does not vanish exactly.

    ``p`` is drawn per point from (-2, 0) unless ``p_value`` pins it.
    """
    rng = random.Random(f"points|{seed}|{n_val}")
    bad = 0
    for k in range(points):
        p_val = random_p(rng)
        if p_value is not None:
            p_val = Fraction(p_value)
        s_val = Fraction(rng.randint(1, 99), 100)
        pt = JetPoint(n_val, p_val, seed=f"{seed}:{k}", solve_pde=solve_pde)
        if any(not v.is_zero() for _, v in evaluate_all(diff, n_val, p_val, pt, s_val)):
            bad += 1
    return bad
