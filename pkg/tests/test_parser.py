import random

import pytest

import jetgen
from heisenjet import PDE, Expression, ParseError, anti, hol, normalize, parse, to_text
from heisenjet.cr_ops import D1, E2, G1, divergence
from heisenjet.identity_suite import get_case


def test_gradient_norm():
    assert parse("f[a]*f[a']") == Expression.jet(hol("a")) * Expression.jet(anti("a"))


def test_commutator_text():
    e = normalize(parse("f[a,b']-f[b',a]"))
    assert e == parse("2*I*delta(a,b')*f[0]")
    assert to_text(e) == "2*I*f[0]*delta(a,b')"


def test_divergence_text():
    assert parse("Re(Z[a'](G[a]))") == divergence(G1("a"))


def test_named_tensors():
    assert parse("E[a,b']") == E2("a", "b")
    assert parse("D[a]") == D1("a")


def test_zero_prints_as_zero():
    assert to_text(Expression.zero()) == "0"
    assert parse("0").is_zero()


def test_print_is_deterministic():
    assert to_text(parse("g")) == to_text(parse("g"))
    assert to_text(parse("g")) == "-I*f[0] + f[a]*f[a'] + exp((2+p)*f)"


@pytest.mark.parametrize(
    "src, text",
    [
        ("exp((2*n-2)*f)", "exp((2*n-2)*f)"),
        ("exp((2+p)*f)*exp((2*n-2)*f)", "exp((2*n+p)*f)"),
        ("exp(f)", "exp(f)"),
        ("1/2*n*f[0]", "1/2*n*f[0]"),
        ("-f[0] - f[0,0]", "-f[0] - f[0,0]"),
        ("-n*f[0] - n*f[0,0] + n*p*f[a]*f[a']", "-n*(f[0] + f[0,0] - p*f[a]*f[a'])"),
    ],
)
def test_printing(src, text):
    assert to_text(parse(src)) == text


def test_flagship_lhs_round_trip():
    lhs = normalize(get_case("eq2.7").lhs(), PDE)
    assert (parse(to_text(lhs)) - lhs).is_zero()


def _round_trip_source(rng):
    kind = rng.randrange(4)
    if kind == 0:
        return jetgen.random_text(rng)
    if kind == 1:
        return jetgen.random_text(rng, free=("u", "v'"))
    if kind == 2:
        free = jetgen.random_text(rng, free=("u", "v'"), terms=1)
        return f"{free} + {rng.choice(jetgen.COEFFS)}*delta(u,v')*({jetgen.random_text(rng, terms=2)})"
    return f"conj({jetgen.random_text(rng, terms=2)}) + Re({jetgen.random_text(rng, terms=2)})"


def test_round_trip_1000():
    rng = random.Random(20240611)
    for _ in range(1000):
        src = _round_trip_source(rng)
        e = parse(src)
        if rng.random() < 0.3:
            e = normalize(e)
        back = parse(to_text(e))
        assert normalize(back - e).is_zero(), src
        assert back == e


@pytest.mark.parametrize(
    "src, col",
    [
        ("f[a,]", 5),
        ("f[a]] ", 5),
        ("f", 1),
        ("2 * * f[0]", 5),
        ("delta(a,b)", 1),
        ("D[a,0]", 1),
        ("exp((2*s)*f)", 8),
        ("q[a]", 1),
        ("f[a]*f[a]", 6),
        ("f[0]/0", 6),
    ],
)
def test_error_positions(src, col):
    with pytest.raises(ParseError) as info:
        parse(src)
    assert info.value.line == 1
    assert info.value.col == col


def test_error_line_numbers():
    with pytest.raises(ParseError) as info:
        parse("f[a]*f[a'] +\n  f[b,")
    assert (info.value.line, info.value.col) == (2, 7)


ALPHABET = list("fgnpsIDEGZ[](),+-*/^'0123 abexp") + ["exp(", "delta(", "conj(", "Re(", "Z[a](", "f[", "D[", "E[", "G["]


def _mutate(src, rng):
    chars = list(src)
    for _ in range(rng.randint(1, 3)):
        k = rng.randrange(len(chars) + 1)
        op = rng.randrange(3)
        if op == 0 and chars:
            del chars[min(k, len(chars) - 1)]
        elif op == 1:
            chars.insert(k, rng.choice(ALPHABET))
        elif chars:
            chars[min(k, len(chars) - 1)] = rng.choice(ALPHABET)
    return "".join(chars)


def test_fuzz_never_crashes():
    rng = random.Random(5)
    accepted = 0
    for i in range(5000):
        if i % 2:
            src = _mutate(jetgen.random_text(rng), rng)
        else:
            src = "".join(rng.choice(ALPHABET) for _ in range(rng.randint(0, 25)))
        try:
            e = parse(src)
        except ParseError as exc:
            assert exc.line >= 1 and exc.col >= 1
            continue
        accepted += 1
        assert (parse(to_text(e)) - e).is_zero()
    assert accepted > 0
