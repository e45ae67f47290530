"""Sign-flip mutants of the tensor builders, for mutation tests.

A mutant negates one monomial of one builder's output.  The catalog is then
recompiled with the mutated builders; the cases whose compiled sides changed
are the candidates, and the oracle decides independently which of them are
actually broken.
"""

import types

from heisenjet import Expression, cr_ops
from heisenjet.identity_suite import load_catalog, verify
from heisenjet.oracle import oracle_failures

BUILDERS = ("D1", "D2", "E1", "E2", "G1", "g_expr")


def flip_one(e: Expression, which: int) -> Expression:
    items = e.sorted_items()
    key, c = items[which % len(items)]
    return e - Expression({key: c}, e.signature).scale(2)


def mutant_ops(name: str, which: int):
    ops = types.SimpleNamespace(**{k: getattr(cr_ops, k) for k in dir(cr_ops) if not k.startswith("__")})
    orig = getattr(cr_ops, name)
    setattr(ops, name, lambda *args: flip_one(orig(*args), which))
    return ops


def _sides(case):
    return case.lhs(), case.rhs()


def run_mutant(name: str, which: int, baseline=None, oracle_points: int = 2, seed: int = 11):
    """(changed ids, symbolically failing ids, oracle-failing ids)."""
    baseline = baseline or {c.id: c for c in load_catalog(include_sos=False)}
    mutated = {c.id: c for c in load_catalog(ops=mutant_ops(name, which), include_sos=False)}
    changed = {cid for cid, c in mutated.items() if _sides(c) != _sides(baseline[cid])}
    failing = {cid for cid in changed if not verify(mutated[cid]).ok}
    flagged = set()
    for cid in changed:
        case = mutated[cid]
        diff = case.lhs() - case.rhs()
        if case.compare == "re":
            diff = diff.re_part()
        for n_val in (1, 2):
            bad = oracle_failures(
                diff, n_val, oracle_points, seed, solve_pde=case.requires_pde, p_value=case.p_value
            )
            if bad:
                flagged.add(cid)
                break
    return changed, failing, flagged
