"""Abstract-index jet expressions.

An expression is a finite sum of monomials

    coeff(n, p, s) * exp((a + b*n + c*p) * f) * f_{w1} * f_{w2} * ... * delta(...)

where each ``f_w`` is a derivative of the real function ``f`` along a word of
indices.  Indices are holomorphic, antiholomorphic or the transverse direction
``0``.  A label occurring once in a monomial is free; a label occurring twice
(once holomorphic, once antiholomorphic) is summed over.  Free labels are
strings chosen by the caller; summed labels are small non-negative integers
assigned by canonicalization.

Kronecker deltas are eliminated as soon as one of their ends is summed, so the
only deltas ever stored join two free labels.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from .coeff import CoeffPoly, GaussQ

HOL, ANTI, T = 0, 1, 2
DUMMY, FREE = 0, 1

KIND_NAMES = {HOL: "Hol", ANTI: "AntiHol", T: "T0"}


class SignatureError(ValueError):
    """Free-index signatures of two operands are incompatible."""


class InvariantError(RuntimeError):
    """Internal index bookkeeping is inconsistent."""


class Index(NamedTuple):
    kind: int
    status: int
    label: object

    def swapped(self) -> "Index":
        if self.kind == T:
            return self
        return Index(ANTI if self.kind == HOL else HOL, self.status, self.label)

    def __repr__(self):
        if self.kind == T:
            return "0"
        mark = "'" if self.kind == ANTI else ""
        lab = self.label if self.status == FREE else f"~{self.label}"
        return f"{lab}{mark}"


T0 = Index(T, FREE, "")


def hol(label: str) -> Index:
    return Index(HOL, FREE, label)


def anti(label: str) -> Index:
    return Index(ANTI, FREE, label)


class ExpFactor(NamedTuple):
    """Weight of ``exp((const + n_coef*n + p_coef*p) * f)``."""

    const: Fraction = Fraction(0)
    n_coef: Fraction = Fraction(0)
    p_coef: Fraction = Fraction(0)

    @classmethod
    def of(cls, const=0, n=0, p=0) -> "ExpFactor":
        return cls(Fraction(const), Fraction(n), Fraction(p))

    def times(self, other: "ExpFactor") -> "ExpFactor":
        return ExpFactor(self.const + other.const, self.n_coef + other.n_coef, self.p_coef + other.p_coef)

    def is_identity(self) -> bool:
        return not (self.const or self.n_coef or self.p_coef)

    def as_poly(self) -> CoeffPoly:
        return CoeffPoly.linear(self.const, self.n_coef, self.p_coef)

    def at(self, n=None, p=None) -> "ExpFactor":
        c, bn, cp = self.const, self.n_coef, self.p_coef
        if n is not None:
            c, bn = c + bn * Fraction(n), Fraction(0)
        if p is not None:
            c, cp = c + cp * Fraction(p), Fraction(0)
        return ExpFactor(c, bn, cp)


EXP0 = ExpFactor()

Word = tuple  # tuple[Index, ...]


# --------------------------------------------------------------------------
# raw monomials
#
# A raw term is (coeff, exp, factors, deltas) with arbitrary labels.  ``finish``
# eliminates deltas and canonicalizes; everything that builds expressions goes
# through it.


def _label_key(ix: Index):
    return (ix.status, ix.label)


def eliminate_deltas(coeff: CoeffPoly, factors: list, deltas: list):
    """Contract deltas into the rest of the monomial.

    Returns ``(coeff, factors, deltas)`` where the remaining deltas join two
    free labels.  Mutates nothing passed in.
    """
    if not deltas:
        return coeff, factors, deltas
    factors = [list(w) for w in factors]
    deltas = [list(d) for d in deltas]
    changed = True
    while changed:
        changed = False
        for i, (h, a) in enumerate(deltas):
            if _label_key(h) == _label_key(a):
                coeff = coeff * CoeffPoly.var("n")
                del deltas[i]
                changed = True
                break
            # the other end of a's label must be holomorphic; of h's, antiholomorphic
            if _replace_occurrence(factors, deltas, i, a, HOL, Index(HOL, h.status, h.label)):
                del deltas[i]
                changed = True
                break
            if _replace_occurrence(factors, deltas, i, h, ANTI, Index(ANTI, a.status, a.label)):
                del deltas[i]
                changed = True
                break
    for h, a in deltas:
        if h.status == DUMMY or a.status == DUMMY:
            raise InvariantError(f"dangling summed index in delta({h!r}, {a!r})")
    return coeff, [tuple(w) for w in factors], [tuple(d) for d in deltas]


def _replace_occurrence(factors, deltas, skip, ix: Index, want_kind: int, new: Index) -> bool:
    key = _label_key(ix)
    for w in factors:
        for j, other in enumerate(w):
            if other.kind != T and _label_key(other) == key:
                if other.kind != want_kind:
                    raise InvariantError(f"label {ix.label!r} contracted with itself as {KIND_NAMES[other.kind]}")
                w[j] = new
                return True
    for k, d in enumerate(deltas):
        if k == skip:
            continue
        for j, other in enumerate(d):
            if _label_key(other) == key:
                if other.kind != want_kind:
                    raise InvariantError(f"label {ix.label!r} contracted with itself as {KIND_NAMES[other.kind]}")
                d[j] = new
                return True
    return False


def free_canonical_word(word: Sequence[Index]) -> Word:
    """Reorder a word using only the free commutations.

    Transverse indices move to the end and maximal runs of same-kind indices
    are sorted; holomorphic/antiholomorphic order is left alone.
    """
    body = [ix for ix in word if ix.kind != T]
    nt = len(word) - len(body)
    out = []
    run: list = []
    for ix in body:
        if run and run[-1].kind != ix.kind:
            out.extend(sorted(run))
            run = []
        run.append(ix)
    out.extend(sorted(run))
    return tuple(out) + (T0,) * nt


def is_sorted_word(word: Word) -> bool:
    prev = HOL
    for ix in word:
        if ix.kind < prev:
            return False
        prev = ix.kind
    return True


_PLACE = object()


def _shape(word: Word) -> Word:
    return free_canonical_word(
        [Index(ix.kind, DUMMY, -1) if ix.status == DUMMY else ix for ix in word]
    )


def _relabel_word(word: Word, mapping: dict) -> Word:
    return tuple(Index(ix.kind, DUMMY, mapping[ix.label]) if ix.status == DUMMY else ix for ix in word)


def canonical_key(exp: ExpFactor, factors: Sequence[Word], deltas: Sequence[tuple]):
    """Canonical (exp, factors, deltas) key, minimal over summed-label renamings.

    Summed labels are first split into classes by a relabeling-invariant
    colour (refined once through shared factors); only permutations inside a
    class are enumerated.
    """
    dummies = sorted({ix.label for w in factors for ix in w if ix.status == DUMMY})
    dkey = tuple(sorted(deltas))
    if not dummies:
        return (exp, tuple(sorted(free_canonical_word(w) for w in factors)), dkey)

    shapes = [_shape(w) for w in factors]
    occ: dict = {d: [] for d in dummies}
    for fi, w in enumerate(factors):
        for ix in w:
            if ix.status == DUMMY:
                occ[ix.label].append((fi, ix.kind))
    colour = {d: tuple(sorted((k, shapes[fi]) for fi, k in occ[d])) for d in dummies}
    # one refinement round: colours of summed labels sharing a factor
    ranks = {c: r for r, c in enumerate(sorted(set(colour.values())))}
    members = [sorted(ranks[colour[ix.label]] for ix in w if ix.status == DUMMY) for w in factors]
    refined = {
        d: (ranks[colour[d]], tuple(sorted((k, tuple(members[fi])) for fi, k in occ[d]))) for d in dummies
    }
    order = sorted(dummies, key=lambda d: refined[d])
    groups = [list(g) for _, g in itertools.groupby(order, key=lambda d: refined[d])]

    best = None
    for perm in itertools.product(*(itertools.permutations(g) for g in groups)):
        mapping = {}
        nxt = 0
        for g in perm:
            for d in g:
                mapping[d] = nxt
                nxt += 1
        cand = tuple(sorted(free_canonical_word(_relabel_word(w, mapping)) for w in factors))
        if best is None or cand < best:
            best = cand
    return (exp, best, dkey)


def finish(coeff: CoeffPoly, exp: ExpFactor, factors: Iterable[Word], deltas: Iterable[tuple] = ()):
    """Delta elimination plus canonicalization; returns ``(key, coeff)`` or None."""
    if not coeff:
        return None
    coeff, factors, deltas = eliminate_deltas(coeff, list(factors), list(deltas))
    if not coeff:
        return None
    return canonical_key(exp, factors, deltas), coeff


def key_dummies(key) -> set:
    return {ix.label for w in key[1] for ix in w if ix.status == DUMMY}


def key_free(key) -> set:
    out = set()
    for w in key[1]:
        for ix in w:
            if ix.status == FREE and ix.kind != T:
                out.add(ix)
    for d in key[2]:
        out.update(d)
    return out


def order_key(key):
    """Total order used for display: weight, factor count, words."""
    exp, factors, deltas = key
    return (exp, len(factors), factors, deltas)


def _rename_free(word: Word, mapping: dict) -> Word:
    return tuple(mapping.get((ix.status, ix.label), ix) if ix.kind != T else ix for ix in word)


def _map_indices(items, fn):
    return tuple(tuple(fn(ix) for ix in w) for w in items)


# --------------------------------------------------------------------------


class Expression:
    """Immutable sum of canonical monomials sharing one free-index signature."""

    __slots__ = ("terms", "signature")

    def __init__(self, terms: dict | None = None, signature: Iterable[Index] = ()):
        self.terms: dict = terms or {}
        self.signature: frozenset = frozenset(signature)

    # construction ---------------------------------------------------------

    @classmethod
    def zero(cls, signature: Iterable[Index] = ()) -> "Expression":
        return cls({}, signature)

    @classmethod
    def constant(cls, c) -> "Expression":
        if not isinstance(c, CoeffPoly):
            c = CoeffPoly.const(c)
        if not c:
            return cls()
        return cls({(EXP0, (), ()): c})

    @classmethod
    def jet(cls, *word: Index) -> "Expression":
        """``f`` differentiated along ``word``; repeated labels contract."""
        if not word:
            raise ValueError("f itself only appears inside exp(...)")
        counts: dict = {}
        for ix in word:
            if ix.kind != T:
                counts.setdefault(ix.label, []).append(ix)
        mapping = {}
        fresh = 0
        sig = []
        for lab, ixs in counts.items():
            if len(ixs) == 1:
                sig.append(ixs[0])
            elif len(ixs) == 2 and {ixs[0].kind, ixs[1].kind} == {HOL, ANTI}:
                mapping[lab] = fresh
                fresh += 1
            else:
                raise SignatureError(f"index {lab!r} used {len(ixs)} times with kinds {[KIND_NAMES[i.kind] for i in ixs]}")
        w = tuple(Index(ix.kind, DUMMY, mapping[ix.label]) if ix.label in mapping and ix.kind != T else ix for ix in word)
        return cls.from_raw([(CoeffPoly.const(1), EXP0, [w], [])], sig)

    @classmethod
    def exp(cls, const=0, n=0, p=0) -> "Expression":
        return cls({(ExpFactor.of(const, n, p), (), ()): CoeffPoly.const(1)})

    @classmethod
    def delta(cls, h: Index, a: Index) -> "Expression":
        if h.kind != HOL or a.kind != ANTI:
            raise SignatureError("delta takes one holomorphic and one antiholomorphic index")
        if h.label == a.label:
            return cls.constant(CoeffPoly.var("n"))
        return cls.from_raw([(CoeffPoly.const(1), EXP0, [], [(h, a)])], [h, a])

    @classmethod
    def from_raw(cls, raw: Iterable, signature: Iterable[Index]) -> "Expression":
        acc: dict = {}
        for coeff, exp, factors, deltas in raw:
            res = finish(coeff, exp, factors, deltas)
            if res is None:
                continue
            _accumulate(acc, *res)
        return cls(acc, signature)

    def raw_terms(self):
        for (exp, factors, deltas), c in self.terms.items():
            yield c, exp, list(factors), list(deltas)

    # inspection -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if not isinstance(other, Expression):
            return NotImplemented
        if not self.terms and not other.terms:
            return True
        return self.signature == other.signature and self.terms == other.terms

    def __hash__(self):
        return hash((self.signature, frozenset(self.terms.items())))

    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda kv: order_key(kv[0]))

    def free_labels(self) -> dict:
        return {ix.label: ix.kind for ix in self.signature}

    def __repr__(self):
        from .parser import to_text

        return f"Expression({to_text(self)!r})"

    # arithmetic -----------------------------------------------------------

    def _check_sig(self, other: "Expression"):
        if self.terms and other.terms and self.signature != other.signature:
            mine = sorted(map(repr, self.signature - other.signature))
            theirs = sorted(map(repr, other.signature - self.signature))
            raise SignatureError(f"free indices differ: left-only {mine}, right-only {theirs}")

    def _sig_with(self, other):
        return self.signature if self.terms else other.signature

    def __add__(self, other):
        if not isinstance(other, Expression):
            other = Expression.constant(other)
        self._check_sig(other)
        acc = dict(self.terms)
        for k, c in other.terms.items():
            _accumulate(acc, k, c)
        return Expression(acc, self._sig_with(other))

    __radd__ = __add__

    def __neg__(self):
        return Expression({k: -c for k, c in self.terms.items()}, self.signature)

    def __sub__(self, other):
        if not isinstance(other, Expression):
            other = Expression.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return Expression.constant(other) - self

    def scale(self, c) -> "Expression":
        if not isinstance(c, CoeffPoly):
            c = CoeffPoly.const(c)
        if not c:
            return Expression.zero(self.signature)
        return Expression({k: v * c for k, v in self.terms.items() if v * c}, self.signature)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, GaussQ, CoeffPoly)):
            return self.scale(other)
        if not isinstance(other, Expression):
            return NotImplemented
        return mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, GaussQ, CoeffPoly)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        if self.signature and k > 1:
            raise SignatureError("only scalar expressions can be raised to a power")
        out = Expression.constant(1)
        for _ in range(k):
            out = out * self
        return out

    def conj(self) -> "Expression":
        return conj(self)

    def re_part(self) -> "Expression":
        return re_part(self)

    def at(self, n=None, p=None, s=None) -> "Expression":
        """Substitute numeric values for indeterminates in coefficients and weights."""
        acc: dict = {}
        for (exp, factors, deltas), c in self.terms.items():
            c2 = c.evaluate(n=n, p=p, s=s)
            if not isinstance(c2, CoeffPoly):
                c2 = CoeffPoly.const(c2)
            _accumulate(acc, (exp.at(n=n, p=p), factors, deltas), c2)
        return Expression(acc, self.signature)

    def map_coeffs(self, fn) -> "Expression":
        acc: dict = {}
        for k, c in self.terms.items():
            _accumulate(acc, k, fn(c))
        return Expression(acc, self.signature)

    def rename_free(self, mapping: dict) -> "Expression":
        """Rename free labels; ``mapping`` is label -> new label."""
        def fn(ix):
            if ix.kind != T and ix.status == FREE and ix.label in mapping:
                return Index(ix.kind, FREE, mapping[ix.label])
            return ix

        raw = [
            (c, exp, list(_map_indices(factors, fn)), list(_map_indices(deltas, fn)))
            for c, exp, factors, deltas in self.raw_terms()
        ]
        return Expression.from_raw(raw, [fn(ix) for ix in self.signature])


def _accumulate(acc: dict, key, coeff: CoeffPoly):
    if key in acc:
        v = acc[key] + coeff
        if v:
            acc[key] = v
        else:
            del acc[key]
    elif coeff:
        acc[key] = coeff


def contract_plan(sig_a: frozenset, sig_b: frozenset):
    """Labels shared by two signatures; opposite kinds contract, equal kinds clash."""
    by_label_a = {ix.label: ix for ix in sig_a}
    contracted = set()
    for ix in sig_b:
        other = by_label_a.get(ix.label)
        if other is None:
            continue
        if other.kind == ix.kind:
            raise SignatureError(f"free index {ix!r} appears on both factors with the same kind")
        contracted.add(ix.label)
    new_sig = {ix for ix in sig_a | sig_b if ix.label not in contracted}
    return contracted, new_sig


def make_summed(factors, deltas, labels: set, start: int):
    """Turn free labels in ``labels`` into fresh summed labels from ``start``."""
    if not labels:
        return factors, deltas
    mapping = {lab: start + i for i, lab in enumerate(sorted(labels))}

    def fn(ix):
        if ix.kind != T and ix.status == FREE and ix.label in mapping:
            return Index(ix.kind, DUMMY, mapping[ix.label])
        return ix

    return [tuple(fn(ix) for ix in w) for w in factors], [tuple(fn(ix) for ix in d) for d in deltas]


def shift_dummies(factors, offset: int):
    if not offset:
        return list(factors)
    return [
        tuple(Index(ix.kind, DUMMY, ix.label + offset) if ix.status == DUMMY else ix for ix in w) for w in factors
    ]


def max_dummy(factors) -> int:
    m = -1
    for w in factors:
        for ix in w:
            if ix.status == DUMMY and ix.label > m:
                m = ix.label
    return m


def add(a: Expression, b: Expression) -> Expression:
    return a + b


def mul(a: Expression, b: Expression) -> Expression:
    """Product; shared free labels of opposite kind are summed over."""
    contracted, sig = contract_plan(a.signature, b.signature)
    acc: dict = {}
    for ka, ca in a.terms.items():
        ea, fa, da = ka
        off = max_dummy(fa) + 1
        for kb, cb in b.terms.items():
            eb, fb, db = kb
            fb2 = shift_dummies(fb, off)
            factors = list(fa) + fb2
            deltas = list(da) + list(db)
            start = max(off, max_dummy(fb2) + 1)
            factors, deltas = make_summed(factors, deltas, contracted, start)
            res = finish(ca * cb, ea.times(eb), factors, deltas)
            if res is not None:
                _accumulate(acc, *res)
    return Expression(acc, sig)


def conj(a: Expression) -> Expression:
    """Complex conjugate: swap index kinds, conjugate coefficients, fix weights."""
    raw = []
    for c, exp, factors, deltas in a.raw_terms():
        nf = [tuple(ix.swapped() for ix in w) for w in factors]
        nd = [(d[1].swapped(), d[0].swapped()) for d in deltas]
        raw.append((c.conj(), exp, nf, nd))
    return Expression.from_raw(raw, [ix.swapped() for ix in a.signature])


def re_part(a: Expression) -> Expression:
    if a.signature and a.terms:
        raise SignatureError(f"real part needs a scalar, got free indices {sorted(map(repr, a.signature))}")
    return (a + conj(a)).scale(Fraction(1, 2))


def canonicalize_monomial(coeff: CoeffPoly, exp: ExpFactor, factors, deltas=()):
    """Public wrapper returning ``(key, coeff)`` for one monomial."""
    return finish(coeff, exp, factors, deltas)
