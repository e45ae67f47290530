"""Rewriting jet words to canonical order.

Canonical words list holomorphic indices first, then antiholomorphic, then
transverse ones.  Moving a holomorphic index left past an antiholomorphic one
costs a correction:

    f_{u b' a v} = f_{u a b' v} - 2i delta_{ab'} f_{u 0 v}

With ``use_pde`` every word carrying a summed pair ``a, a'`` is further
rewritten through ``f_{aa'} = -n g`` and its derivatives.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .coeff import CoeffPoly, GaussQ
from .core import (
    ANTI,
    DUMMY,
    EXP0,
    HOL,
    T,
    T0,
    Expression,
    Index,
    _accumulate,
    finish,
    free_canonical_word,
    is_sorted_word,
)
from .cr_ops import derive_raw, g_expr, z_word

MINUS_2I = GaussQ(0, -2)
ONE = GaussQ(1)


class TermCapExceeded(RuntimeError):
    def __init__(self, count: int, cap: int, case_id: str | None = None):
        self.count, self.cap, self.case_id = count, cap, case_id
        where = f" in case {case_id}" if case_id else ""
        super().__init__(f"normalizer produced {count} pending terms{where}, cap is {cap}")


@dataclass(frozen=True)
class RewriteConfig:
    use_pde: bool = False
    max_terms: int = 100_000
    p_value: Fraction | None = None  # numeric p inside g when the PDE is applied

    def __post_init__(self):
        if self.max_terms <= 0:
            raise ValueError("max_terms must be positive")


PDE = RewriteConfig(use_pde=True)
NO_PDE = RewriteConfig(use_pde=False)


@dataclass
class RewriteStats:
    rounds: int = 0
    steps: int = 0
    peak_terms: int = 0


# --------------------------------------------------------------------------
# word level


def _split(word):
    body = [ix for ix in word if ix.kind != T]
    return body, len(word) - len(body)


def _first_inversion(body, rng=None):
    spots = [i for i in range(len(body) - 1) if body[i].kind == ANTI and body[i + 1].kind == HOL]
    if not spots:
        return None
    return rng.choice(spots) if rng is not None else spots[0]


def _swap_step(body, nt, i):
    swapped = body[:i] + [body[i + 1], body[i]] + body[i + 2 :] + [T0] * nt
    corr = body[:i] + body[i + 2 :] + [T0] * (nt + 1)
    return tuple(swapped), tuple(corr), (body[i + 1], body[i])


@lru_cache(maxsize=None)
def sort_word(word: tuple) -> tuple:
    """Sort one word by commutation; returns ((coef, word, deltas), ...)."""
    body, nt = _split(word)
    i = _first_inversion(body)
    if i is None:
        return ((ONE, free_canonical_word(word), ()),)
    swapped, corr, delta = _swap_step(body, nt, i)
    out = list(sort_word(swapped))
    for c, w, d in sort_word(corr):
        out.append((c * MINUS_2I, w, d + (delta,)))
    return tuple(out)


def _sort_word_random(word: tuple, rng: random.Random) -> tuple:
    body, nt = _split(word)
    i = _first_inversion(body, rng)
    if i is None:
        return ((ONE, free_canonical_word(word), ()),)
    swapped, corr, delta = _swap_step(body, nt, i)
    out = list(_sort_word_random(swapped, rng))
    for c, w, d in _sort_word_random(corr, rng):
        out.append((c * MINUS_2I, w, d + (delta,)))
    return tuple(out)


def trace_labels(word) -> list:
    hols = {ix.label for ix in word if ix.kind == HOL and ix.status == DUMMY}
    return sorted(ix.label for ix in word if ix.kind == ANTI and ix.status == DUMMY and ix.label in hols)


@lru_cache(maxsize=None)
def _g_template(p_value=None):
    # summed labels of g are negative so they never collide with a host monomial
    g = g_expr() if p_value is None else g_expr().at(p=p_value)
    out = []
    for c, exp, factors, deltas in g.raw_terms():
        factors = [tuple(Index(ix.kind, DUMMY, -1 - ix.label) if ix.status == DUMMY else ix for ix in w) for w in factors]
        out.append((c, exp, factors, deltas))
    return tuple(out)


def _pde_rewrite(word: tuple, label, sorter, p_value=None) -> list:
    """Raw terms equal to the sorted word ``word`` under ``f_{xx'} = -n g``."""
    hx, ax = Index(HOL, DUMMY, label), Index(ANTI, DUMMY, label)
    body, nt = _split(word)
    rest = list(body)
    rest.remove(hx)
    rest.remove(ax)
    rest = rest + [T0] * nt
    lead = (hx, ax) + tuple(rest)
    target = free_canonical_word(word)
    out = []
    own = GaussQ(0)
    for c, w, d in sorter(lead):
        if w == target and not d:
            own = own + c
        else:
            out.append((CoeffPoly.const(-c), EXP0, [w], list(d)))
    if own != ONE:
        raise AssertionError(f"reordering {lead} did not reproduce {target}")
    minus_n = CoeffPoly.var("n") * -1
    terms = list(_g_template(p_value))
    for ix in rest:
        terms = list(derive_raw(terms, ix))
    for c, exp, factors, deltas in terms:
        out.append((c * minus_n, exp, factors, deltas))
    return out


@lru_cache(maxsize=None)
def pde_rewrite(word: tuple, p_value=None) -> tuple:
    return tuple(_pde_rewrite(word, trace_labels(word)[0], sort_word, p_value))


# --------------------------------------------------------------------------
# expression level


def _first_bad(factors, use_pde: bool, rng=None):
    bad = []
    for i, w in enumerate(factors):
        if not is_sorted_word(w):
            bad.append((i, "sort"))
        elif use_pde and trace_labels(w):
            bad.append((i, "pde"))
        if bad and rng is None:
            break
    if not bad:
        return None, None
    return rng.choice(bad) if rng is not None else bad[0]


def normalize(
    e: Expression,
    cfg: RewriteConfig = NO_PDE,
    *,
    rng: random.Random | None = None,
    stats: RewriteStats | None = None,
    case_id: str | None = None,
) -> Expression:
    """Rewrite every word of ``e`` to canonical order (and apply the PDE).

    ``rng`` randomizes which rule fires where; the result must not depend on it.
    """
    pending = dict(e.terms)
    done: dict = {}
    while pending:
        if stats is not None:
            stats.rounds += 1
            stats.peak_terms = max(stats.peak_terms, len(pending) + len(done))
        nxt: dict = {}
        for key, coef in pending.items():
            exp, factors, deltas = key
            i, kind = _first_bad(factors, cfg.use_pde, rng)
            if i is None:
                _accumulate(done, key, coef)
                continue
            if stats is not None:
                stats.steps += 1
            w = factors[i]
            rest = list(factors[:i]) + list(factors[i + 1 :])
            if kind == "sort":
                expansion = sort_word(w) if rng is None else _sort_word_random(w, rng)
                for c, w2, d2 in expansion:
                    res = finish(coef * c, exp, rest + [w2], list(deltas) + list(d2))
                    if res is not None:
                        _accumulate(nxt, *res)
            else:
                if rng is None:
                    repl = pde_rewrite(w, cfg.p_value)
                else:
                    lab = rng.choice(trace_labels(w))
                    repl = _pde_rewrite(w, lab, lambda x: _sort_word_random(x, rng), cfg.p_value)
                for c, e2, ws, ds in repl:
                    res = finish(coef * c, exp.times(e2), rest + list(ws), list(deltas) + list(ds))
                    if res is not None:
                        _accumulate(nxt, *res)
            if len(nxt) + len(done) > cfg.max_terms:
                raise TermCapExceeded(len(nxt) + len(done), cfg.max_terms, case_id)
        pending = nxt
    return Expression(done, e.signature)


def is_normal(e: Expression, cfg: RewriteConfig = NO_PDE) -> bool:
    return all(_first_bad(k[1], cfg.use_pde)[0] is None for k in e.terms)


def equal(a: Expression, b: Expression, cfg: RewriteConfig = NO_PDE) -> bool:
    return normalize(a - b, cfg).is_zero()


# --------------------------------------------------------------------------
# g and its derivatives


@dataclass(frozen=True)
class GDefinition:
    """g = |df|^2 + e^{(2+p)f} - i f_0."""

    expr: Expression

    def real_part_times_minus_n(self) -> Expression:
        return self.expr.re_part().scale(CoeffPoly.var("n") * -1)


G_DEFINITION = GDefinition(g_expr())


def jet_derivative_of_g(word, cfg: RewriteConfig = NO_PDE) -> Expression:
    """Normalized derivative of g along ``word`` (applied left to right)."""
    return normalize(z_word(G_DEFINITION.expr, word), cfg)
