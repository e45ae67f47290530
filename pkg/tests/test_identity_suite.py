from fractions import Fraction

import pytest
import sympy

import mutants
from heisenjet import PDE, Expression, normalize, parse
from heisenjet.identity_suite import (
    CATALOG_ENV,
    S0,
    SOS_COEFFICIENTS,
    IdentityCase,
    cases_from_text,
    catalog_sources,
    check_positivity,
    get_case,
    load_catalog,
    p_tail,
    s_one_probe,
    select,
    sign_certificate,
    sos_cases,
    verify,
    verify_lemma_3_1_pointwise,
    verify_p_zero,
    verify_sos_chain,
)

CATALOG = load_catalog()
BY_ID = {c.id: c for c in CATALOG}

REQUIRED = [
    "eq2.5", "eq2.6", "eq2.7", "eq2.8", "eq2.9", "eq2.10", "eq2.11", "eq2.12", "eq2.13",
    "eq2.14", "eq2.15", "eq2.16", "eq2.17", "eq2.18", "eq3--17", "eq3-21-pointwise",
    "eq3-3", "eq3-3a", "eq3-3b", "eq3-3c-equals-M",
]


def _record(cid):
    text = [t for name, t in catalog_sources() if "section2" in name][0]
    i = text.index(f"@id {cid}\n")
    j = text.find("\n\n@id", i)
    return text[i : j if j > 0 else None]


def test_required_cases_present():
    assert set(REQUIRED) <= set(BY_ID)
    # every displayed step of a chain is its own case
    for cid in ("eq2.9", "eq2.11", "eq2.14"):
        assert f"{cid}.step1" in BY_ID


@pytest.mark.parametrize("cid", sorted(BY_ID))
def test_case_verifies(cid):
    rep = verify(BY_ID[cid])
    assert rep.ok, rep.note
    assert rep.residual_terms == 0


def test_flagship_counts():
    rep = verify(BY_ID["eq2.7"])
    assert rep.ok and rep.lhs_terms > 0 and rep.rhs_terms > 0


@pytest.mark.parametrize("cid", ["eq2.7", "eq2.16", "eq2.11", "eq3-3"])
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_shuffle_stability(cid, seed):
    assert verify(BY_ID[cid], shuffle_seed=seed).ok


def test_p_zero_specialization():
    rep = verify_p_zero(BY_ID["eq2.7"])
    assert rep.ok
    assert rep.tail_terms_symbolic > 0
    assert rep.tail_terms_at_zero == 0


def test_p_zero_catalog_form():
    # the p = 0 identity written without any p-terms at all
    assert verify(BY_ID["eq2.7-p0"]).ok


def test_p_tail_counts_p_divisible_terms():
    e = parse("p*f[0] + n*f[0,0] + (p+n)*f[a]*f[a'] + p*n*f[0]*f[0]")
    assert p_tail(e) == parse("p*f[0] + p*n*f[0]*f[0]")


def test_specialize_renames():
    c = BY_ID["eq2.7"].specialize(p=0)
    assert c.id == "eq2.7[p=0]"
    assert c.p_value == 0


def test_pointwise_identities():
    assert verify_lemma_3_1_pointwise().ok
    assert verify(BY_ID["eq2.1-scalar"]).ok
    assert verify(BY_ID["eq3-21-pointwise"]).ok


def test_flagship_fails_without_pde():
    case = BY_ID["eq2.7"]
    no_pde = IdentityCase(case.id, case.lhs, case.rhs, False)
    assert not verify(no_pde).ok


# -- negative controls: the printed forms that do not hold ------------------


def test_literal_step_with_extra_i_fails():
    text = _record("eq2.9").replace("+ 3*(G[a'] - conj(g)*f[a'])*G[a]", "+ 3*I*(G[a'] - conj(g)*f[a'])*G[a]")
    verdicts = {c.id: verify(c).ok for c in cases_from_text(text)}
    assert verdicts == {"eq2.9.step1": True, "eq2.9.step2": False, "eq2.9.step3": False, "eq2.9": True}


def test_twelve_line_display_holds_only_in_real_part():
    case = cases_from_text(_record("eq2.16").replace("@compare re\n", ""))[0]
    rep = verify(case)
    assert not rep.ok
    assert normalize(rep.residual.re_part(), PDE).is_zero()
    swapped = parse("-p/2*f[b]*f[b']*(f[a]*D[a'] - f[a']*D[a])")
    assert normalize(rep.residual - swapped, PDE).is_zero()


def test_weight_missing_from_cross_term_fails():
    right = "p*(f[a']*exp((2+p)*f) - 1/2*f[a']*f[b]*f[b'])"
    text = _record("eq2.18").replace(right, "p*(f[a'] - 1/2*f[a']*f[b]*f[b'])")
    assert not verify(cases_from_text(text)[0]).ok


# -- mutation tests ---------------------------------------------------------


@pytest.mark.parametrize("cid", sorted(c for c in BY_ID if c.startswith("eq2.1")))
def test_single_monomial_flip_is_localized(cid):
    case = BY_ID[cid]
    rhs = case.rhs()
    bad = IdentityCase(cid, case.lhs, lambda: mutants.flip_one(rhs, 0), case.requires_pde, compare=case.compare)
    others = [c for c in CATALOG if c.id != cid and c.id.startswith("eq2.1")]
    assert not verify(bad).ok
    assert all(verify(c).ok for c in others)


@pytest.mark.parametrize("name", mutants.BUILDERS)
def test_builder_mutation(name):
    changed, failing, flagged = mutants.run_mutant(name, 0, oracle_points=2)
    assert failing, "mutation went unnoticed"
    assert failing == flagged
    assert failing <= changed


# -- SOS chain --------------------------------------------------------------


def test_sos_chain():
    rep = verify_sos_chain()
    assert rep.ok, rep.note
    assert "s=1 probe: 0" in rep.note


def test_s_one_probe():
    assert s_one_probe().is_zero()


def test_sos_cases_are_real():
    assert verify(BY_ID["eq3-3-real"]).ok


@pytest.mark.parametrize("coef", ["c1", "c2", "c3", "c4"])
def test_sos_catches_wrong_coefficient(coef, monkeypatch):
    from heisenjet import identity_suite as ids

    P = sympy.Symbol("p")
    bumped = dict(SOS_COEFFICIENTS)
    bumped[coef] = ids.SOSCoefficient(coef, SOS_COEFFICIENTS[coef].expr - P / 8)
    monkeypatch.setattr(ids, "SOS_COEFFICIENTS", bumped)
    case = {c.id: c for c in sos_cases()}["eq3-3c-equals-M"]
    assert not verify(case).ok


def test_sos_catches_wrong_s0(monkeypatch):
    from heisenjet import identity_suite as ids

    P, N = sympy.symbols("p n")
    monkeypatch.setattr(ids, "S0", ids.SOSCoefficient("s0", sympy.Rational(1, 2) + P / (2 * N)))
    with pytest.raises(AssertionError):
        ids.m_at_s0_times_k0()


# -- positivity -------------------------------------------------------------


def test_coefficient_values():
    assert S0.at(1, -1) == Fraction(1, 4)
    assert SOS_COEFFICIENTS["c4"].at(1, -1) == 3
    assert S0.at(1, -2) == 0


def test_small_negative_p():
    p = Fraction(-1, 1000)
    vals = {k: c.at(2, p) for k, c in SOS_COEFFICIENTS.items()}
    assert all(v > 0 for v in vals.values())
    # linear in p near 0: halving p roughly halves every coefficient
    for k, c in SOS_COEFFICIENTS.items():
        ratio = c.at(2, p / 2) / vals[k]
        assert abs(ratio - Fraction(1, 2)) < Fraction(1, 100)


def test_positivity_grid():
    rep = check_positivity(100, 199)
    assert rep.ok
    assert rep.checked == 100 * 199 * 6


def test_positivity_boundary():
    rep = check_positivity(1, 5)
    for name in ("s0", "c1", "c3"):
        vals = rep.boundary[name]
        assert all(v > 0 for v in vals)
        assert vals == sorted(vals, reverse=True)
        assert vals[-1] < Fraction(1, 10**5)


@pytest.mark.parametrize("name", ["c1", "c2", "c3", "c4"])
def test_sign_certificates(name):
    cert = sign_certificate(name, SOS_COEFFICIENTS[name].expr)
    assert cert.ok, cert.text()


def test_certificate_rejects_sign_changing_expression():
    N, P = sympy.symbols("n p")
    assert not sign_certificate("bad", P + 1).ok


def test_positivity_argument_checks():
    with pytest.raises(ValueError):
        check_positivity(0, 10)
    with pytest.raises(ValueError):
        check_positivity(3, 1)


# -- catalog handling -------------------------------------------------------


def test_select_glob():
    ids = [c.id for c in select(CATALOG, "eq2.1?")]
    assert "eq2.10" in ids and "eq2.1" not in ids and "eq2.10.step1" not in ids
    assert select(CATALOG, None) == CATALOG
    with pytest.raises(KeyError):
        get_case("nope", CATALOG)


def test_catalog_env_override(tmp_path, monkeypatch):
    (tmp_path / "mine.jet").write_text("@id mine\n@pde no\nf[a]*f[a'] == f[b']*f[b]\n")
    monkeypatch.setenv(CATALOG_ENV, str(tmp_path))
    cases = load_catalog(include_sos=False)
    assert [c.id for c in cases] == ["mine"]
    assert verify(cases[0]).ok


def test_catalog_env_missing(tmp_path, monkeypatch):
    monkeypatch.setenv(CATALOG_ENV, str(tmp_path / "missing"))
    with pytest.raises(FileNotFoundError):
        load_catalog()


def test_duplicate_ids_rejected(tmp_path, monkeypatch):
    (tmp_path / "a.jet").write_text("@id x\nf[0] == f[0]\n\n@id x\nf[0,0] == f[0,0]\n")
    monkeypatch.setenv(CATALOG_ENV, str(tmp_path))
    with pytest.raises(ValueError, match="duplicate"):
        load_catalog(include_sos=False)


def test_record_without_id():
    with pytest.raises(ValueError):
        cases_from_text("@pde no\nf[0] == f[0]\n")


def test_constant_expression_case():
    c = IdentityCase("z", lambda: Expression.zero(), lambda: parse("f[a,a'] - f[a',a] - 2*n*I*f[0]"), False)
    assert verify(c).ok
