"""Seeded random jet expressions for property tests.

A monomial is generated as plain data (coefficient text, exp weight, words of
index letters) so tests can both parse it and reason about it directly.
"""

import itertools
import random

from heisenjet import parse

LETTERS = "abcdeh"
COEFFS = ["1", "-1", "2", "-3", "I", "-2*I", "n", "p", "(1+n)", "(n-p)", "1/2", "3/4*I", "(2*I+n)", "s"]
WEIGHTS = [None, None, None, (1, 0, 0), (0, 1, 0), (2, 0, 1), (-2, 2, 0), (0, -1, 1)]


def random_monomial(rng, max_factors=3, max_dummies=3, free=()):
    """(coeff, weight, words) with every dummy letter used once plain, once primed.

    ``free`` lists index tokens (e.g. ``"u"`` or ``"v'"``) to place exactly once.
    """
    nd = rng.randint(0, max_dummies)
    letters = rng.sample(LETTERS, nd)
    slots = [ltr for x in letters for ltr in (x, x + "'")] + list(free)
    slots += ["0"] * rng.randint(0, 2)
    nf = rng.randint(1, max_factors)
    words = [[] for _ in range(nf)]
    rng.shuffle(slots)
    for tok in slots:
        words[rng.randrange(nf)].append(tok)
    for w in words:
        if not w:
            w.append("0")
    return rng.choice(COEFFS), rng.choice(WEIGHTS), words


def weight_text(w):
    if w is None:
        return None
    c, n, p = w
    return f"exp(({c}+{n}*n+{p}*p)*f)"


def monomial_text(mono):
    coeff, weight, words = mono
    parts = [coeff] + [f"f[{','.join(w)}]" for w in words]
    if weight is not None:
        parts.append(weight_text(weight))
    return "*".join(parts)


def random_text(rng, terms=None, free=(), **kw):
    k = terms if terms is not None else rng.randint(1, 4)
    return " + ".join(monomial_text(random_monomial(rng, free=free, **kw)) for _ in range(k))


def random_expr(rng, terms=None, free=(), **kw):
    return parse(random_text(rng, terms, free=free, **kw))


def relabel(mono, rng):
    """Same monomial with dummy letters renamed and factors shuffled."""
    coeff, weight, words = mono
    used = sorted({tok.rstrip("'") for w in words for tok in w if tok != "0"})
    fresh = rng.sample("klmqrx", len(used))
    ren = dict(zip(used, fresh))

    def tr(tok):
        if tok == "0":
            return tok
        return ren[tok.rstrip("'")] + ("'" if tok.endswith("'") else "")

    new = [[tr(t) for t in w] for w in words]
    rng.shuffle(new)
    return coeff, weight, new


def free_form(word):
    """Apply the commutations that hold exactly: 0 commutes with everything,
    letters of the same kind commute with each other."""
    body = [t for t in word if t != "0"]
    out, run = [], []
    for t in body:
        if run and run[-1].endswith("'") != t.endswith("'"):
            out += sorted(run)
            run = []
        run.append(t)
    out += sorted(run)
    return tuple(out) + ("0",) * (len(word) - len(body))


def brute_force_same(m1, m2):
    """Equal as monomials modulo renaming of summed letters (tries every bijection)."""
    if m1[1] != m2[1]:
        return False

    def letters(words):
        return sorted({t.rstrip("'") for w in words for t in w if t != "0"})

    l1, l2 = letters(m1[2]), letters(m2[2])
    if len(l1) != len(l2) or len(m1[2]) != len(m2[2]):
        return False
    target = sorted(free_form(w) for w in m2[2])
    for perm in itertools.permutations(l2):
        ren = dict(zip(l1, perm))
        mapped = sorted(
            free_form(["0" if t == "0" else ren[t.rstrip("'")] + ("'" if t.endswith("'") else "") for t in w])
            for w in m1[2]
        )
        if mapped == target:
            return True
    return False


def rng_for(seed):
    return random.Random(seed)
