"""Plain-text language for jet expressions.

Grammar (informal)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' unary) | ('/' NUMBER))*
    unary   := '-' unary | power
    power   := atom ('^' NUMBER)?
    atom    := NUMBER | 'n' | 'p' | 's' | 'I' | 'g'
             | 'f' '[' idx (',' idx)* ']'
             | ('D' | 'E' | 'G') '[' idx (',' idx)? ']'
             | 'delta' '(' idx ',' idx ')'
             | 'exp' '(' weight '*' 'f' ')' | 'exp' '(' 'f' ')'
             | 'conj' '(' expr ')' | 'Re' '(' expr ')'
             | 'Z' '[' idx ']' '(' expr ')'
             | '(' expr ')'
    idx     := NAME | NAME "'" | '0'

A trailing prime marks an antiholomorphic index.  A letter used twice is
summed over; three uses in one product is an error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .coeff import CoeffPoly, GaussQ, format_gauss, format_poly, format_poly_term
from .core import ANTI, DUMMY, FREE, HOL, T, T0, Expression, Index, SignatureError, order_key


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        self.message, self.line, self.col = message, line, col
        super().__init__(f"{line}:{col}: {message}")


# --------------------------------------------------------------------------
# tokens

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<eqeq>==)
  | (?P<op>[-+*/^()\[\],'])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(src: str, line0: int = 1) -> list[Token]:
    out = []
    pos, line, col = 0, line0, 1
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind not in ("ws", "comment"):
                out.append(Token(kind if kind != "op" else text, text, line, col))
            col += len(text)
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


# --------------------------------------------------------------------------
# syntax tree


@dataclass
class Node:
    line: int = field(default=0, kw_only=True)
    col: int = field(default=0, kw_only=True)


@dataclass
class IdxRef:
    name: str
    kind: int
    line: int
    col: int


@dataclass
class Num(Node):
    value: Fraction


@dataclass
class Var(Node):
    name: str


@dataclass
class Imag(Node):
    pass


@dataclass
class Jet(Node):
    indices: list


@dataclass
class Named(Node):
    name: str
    indices: list


@dataclass
class GSym(Node):
    pass


@dataclass
class Delta(Node):
    a: IdxRef
    b: IdxRef


@dataclass
class ExpW(Node):
    const: Fraction
    n: Fraction
    p: Fraction


@dataclass
class Sum(Node):
    terms: list  # [(sign, node)]


@dataclass
class Prod(Node):
    factors: list


@dataclass
class Div(Node):
    base: Node
    den: Fraction


@dataclass
class Neg(Node):
    x: Node


@dataclass
class Pow(Node):
    base: Node
    k: int


@dataclass
class Conj(Node):
    x: Node


@dataclass
class Re(Node):
    x: Node


@dataclass
class ZOp(Node):
    idx: IdxRef
    x: Node


_RESERVED = {"n", "p", "s", "I", "f", "g", "exp", "conj", "Re", "Z", "D", "E", "G", "delta"}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def eat(self, kind: str, what: str | None = None) -> Token:
        t = self.cur
        if t.kind != kind:
            raise ParseError(f"expected {what or kind!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        self.i += 1
        return t

    def at(self, kind: str) -> bool:
        return self.cur.kind == kind

    def expr(self) -> Node:
        t = self.cur
        terms = [(1, self.term())]
        while self.at("+") or self.at("-"):
            sign = 1 if self.eat(self.cur.kind).kind == "+" else -1
            terms.append((sign, self.term()))
        if len(terms) == 1:
            return terms[0][1]
        return Sum(terms, line=t.line, col=t.col)

    def term(self) -> Node:
        t = self.cur
        node = self.unary()
        factors = [node]
        while self.at("*") or self.at("/"):
            if self.eat(self.cur.kind).kind == "*":
                factors.append(self.unary())
            else:
                nt = self.eat("num", "integer divisor")
                if int(nt.text) == 0:
                    raise ParseError("division by zero", nt.line, nt.col)
                prev = factors.pop()
                factors.append(Div(prev, Fraction(int(nt.text)), line=nt.line, col=nt.col))
        if len(factors) == 1:
            return factors[0]
        return Prod(factors, line=t.line, col=t.col)

    def unary(self) -> Node:
        if self.at("-"):
            t = self.eat("-")
            return Neg(self.unary(), line=t.line, col=t.col)
        if self.at("+"):
            self.eat("+")
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.at("^"):
            t = self.eat("^")
            k = self.eat("num", "integer exponent")
            return Pow(base, int(k.text), line=t.line, col=t.col)
        return base

    def idx(self) -> IdxRef:
        t = self.cur
        if t.kind == "num":
            if t.text != "0":
                raise ParseError(f"only 0 is a numeric index, got {t.text}", t.line, t.col)
            self.i += 1
            return IdxRef("0", T, t.line, t.col)
        name = self.eat("name", "index name")
        if self.at("'"):
            self.eat("'")
            return IdxRef(name.text, ANTI, name.line, name.col)
        return IdxRef(name.text, HOL, name.line, name.col)

    def idx_list(self) -> list:
        self.eat("[", "[")
        out = [self.idx()]
        while self.at(","):
            self.eat(",")
            out.append(self.idx())
        self.eat("]", "]")
        return out

    def atom(self) -> Node:
        t = self.cur
        pos = dict(line=t.line, col=t.col)
        if t.kind == "num":
            self.i += 1
            return Num(Fraction(int(t.text)), **pos)
        if t.kind == "(":
            self.eat("(")
            node = self.expr()
            self.eat(")", ")")
            return node
        if t.kind != "name":
            raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.line, t.col)
        self.i += 1
        name = t.text
        if name in ("n", "p", "s"):
            return Var(name, **pos)
        if name == "I":
            return Imag(**pos)
        if name == "g":
            return GSym(**pos)
        if name == "f":
            if not self.at("["):
                raise ParseError("bare f is only allowed inside exp(...)", t.line, t.col)
            return Jet(self.idx_list(), **pos)
        if name in ("D", "E", "G"):
            idxs = self.idx_list()
            _check_named(name, idxs, t)
            return Named(name, idxs, **pos)
        if name == "delta":
            self.eat("(", "(")
            a = self.idx()
            self.eat(",", ",")
            b = self.idx()
            self.eat(")", ")")
            if T in (a.kind, b.kind) or a.kind == b.kind:
                raise ParseError("delta takes one holomorphic and one antiholomorphic index", t.line, t.col)
            return Delta(a, b, **pos)
        if name == "exp":
            self.eat("(", "(")
            w = self.weight()
            self.eat(")", ")")
            return ExpW(*w, **pos)
        if name in ("conj", "Re"):
            self.eat("(", "(")
            x = self.expr()
            self.eat(")", ")")
            return Conj(x, **pos) if name == "conj" else Re(x, **pos)
        if name == "Z":
            self.eat("[", "[")
            ix = self.idx()
            self.eat("]", "]")
            self.eat("(", "(")
            x = self.expr()
            self.eat(")", ")")
            return ZOp(ix, x, **pos)
        raise ParseError(f"unknown name {name!r}", t.line, t.col)

    # weight of exp(...): a linear form in n, p times f
    def weight(self):
        t = self.cur
        if t.kind == "name" and t.text == "f":
            self.i += 1
            return Fraction(1), Fraction(0), Fraction(0)
        poly = self.w_expr()
        self.eat("*", "'*f'")
        ft = self.eat("name", "f")
        if ft.text != "f":
            raise ParseError("exp weight must be written as (...)*f", ft.line, ft.col)
        allowed = {(0, 0, 0), (1, 0, 0), (0, 1, 0)}
        if set(poly.terms) - allowed or any(not c.is_real() for c in poly.terms.values()):
            raise ParseError("exp weight must be real and linear in n, p", t.line, t.col)
        get = lambda e: poly.terms.get(e, GaussQ(0)).re
        return get((0, 0, 0)), get((1, 0, 0)), get((0, 1, 0))

    def w_expr(self) -> CoeffPoly:
        out = self.w_term()
        while self.at("+") or self.at("-"):
            sign = self.eat(self.cur.kind).kind
            rhs = self.w_term()
            out = out + rhs if sign == "+" else out - rhs
        return out

    def w_term(self) -> CoeffPoly:
        out = self.w_factor()
        while (self.at("*") and not (self.peek().kind == "name" and self.peek().text == "f")) or self.at("/"):
            if self.eat(self.cur.kind).kind == "*":
                out = out * self.w_factor()
            else:
                nt = self.eat("num", "integer divisor")
                if int(nt.text) == 0:
                    raise ParseError("division by zero", nt.line, nt.col)
                out = out * GaussQ(Fraction(1, int(nt.text)))
        return out

    def w_factor(self) -> CoeffPoly:
        t = self.cur
        if t.kind == "-":
            self.eat("-")
            return -self.w_factor()
        if t.kind == "num":
            self.i += 1
            return CoeffPoly.const(int(t.text))
        if t.kind == "name" and t.text in ("n", "p"):
            self.i += 1
            return CoeffPoly.var(t.text)
        if t.kind == "(":
            self.eat("(")
            out = self.w_expr()
            self.eat(")", ")")
            return out
        raise ParseError(f"unexpected {t.text or 'end of input'!r} in exp weight", t.line, t.col)


def _check_named(name: str, idxs: list, t: Token):
    kinds = [ix.kind for ix in idxs]
    if T in kinds:
        raise ParseError(f"{name} takes no transverse index", t.line, t.col)
    if name == "G" and len(idxs) != 1:
        raise ParseError("G takes one index", t.line, t.col)
    if len(idxs) not in (1, 2):
        raise ParseError(f"{name} takes one or two indices", t.line, t.col)
    if len(idxs) == 2:
        if name == "D" and kinds[0] != kinds[1]:
            raise ParseError("D[a,b] needs two indices of the same kind", t.line, t.col)
        if name == "E" and kinds[0] == kinds[1]:
            raise ParseError("E[a,b'] needs one holomorphic and one antiholomorphic index", t.line, t.col)


# --------------------------------------------------------------------------
# index-use check


def _occurrences(node: Node) -> dict:
    """Letter -> use count along one product; sums take the max over branches."""
    if isinstance(node, (Jet, Named)):
        out: dict = {}
        for ix in node.indices:
            if ix.kind != T:
                out.setdefault(ix.name, []).append(ix)
        return out
    if isinstance(node, Delta):
        out = {}
        for ix in (node.a, node.b):
            out.setdefault(ix.name, []).append(ix)
        return out
    if isinstance(node, Sum):
        out = {}
        for _, t in node.terms:
            for k, v in _occurrences(t).items():
                if len(v) > len(out.get(k, [])):
                    out[k] = v
        return out
    if isinstance(node, Prod):
        out = {}
        for fct in node.factors:
            for k, v in _occurrences(fct).items():
                out.setdefault(k, []).extend(v)
        _check_counts(out)
        return out
    if isinstance(node, ZOp):
        out = {k: list(v) for k, v in _occurrences(node.x).items()}
        if node.idx.kind != T:
            out.setdefault(node.idx.name, []).append(node.idx)
        _check_counts(out)
        return out
    if isinstance(node, (Neg, Conj, Re, Pow, Div)):
        inner = node.base if isinstance(node, (Pow, Div)) else node.x
        return _occurrences(inner)
    return {}


def _check_counts(occ: dict):
    for name, uses in occ.items():
        if len(uses) >= 3:
            third = uses[2]
            raise ParseError(f"index {name!r} used {len(uses)} times", third.line, third.col)


# --------------------------------------------------------------------------
# compile to Expression


def _index(ix: IdxRef) -> Index:
    if ix.kind == T:
        return T0
    return Index(ix.kind, FREE, ix.name)


def compile_node(node: Node, ops=None) -> Expression:
    """Build the Expression for a syntax tree.

    ``ops`` supplies the tensor builders (defaults to :mod:`cr_ops`); tests
    swap in mutated builders through it.
    """
    if ops is None:
        from . import cr_ops as ops

    try:
        return _compile(node, ops)
    except SignatureError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), node.line, node.col) from None


def _compile(node: Node, ops) -> Expression:
    if isinstance(node, Num):
        return Expression.constant(node.value)
    if isinstance(node, Var):
        return Expression.constant(CoeffPoly.var(node.name))
    if isinstance(node, Imag):
        return Expression.constant(GaussQ(0, 1))
    if isinstance(node, GSym):
        return ops.g_expr()
    if isinstance(node, Jet):
        try:
            return Expression.jet(*[_index(ix) for ix in node.indices])
        except SignatureError as exc:
            raise ParseError(str(exc), node.line, node.col) from None
    if isinstance(node, Named):
        idxs = node.indices
        conj = idxs[0].kind == ANTI
        names = [ix.name for ix in idxs]
        if len(idxs) == 1:
            builder = {"D": ops.D1, "E": ops.E1, "G": ops.G1}[node.name]
            out = builder(names[0])
        elif node.name == "D":
            out = ops.D2(*names)
        else:
            out = ops.E2(*names)
        return out.conj() if conj else out
    if isinstance(node, Delta):
        a, b = _index(node.a), _index(node.b)
        if a.kind == ANTI:
            a, b = b, a
        return Expression.delta(a, b)
    if isinstance(node, ExpW):
        return Expression.exp(node.const, node.n, node.p)
    if isinstance(node, Sum):
        out = None
        for sign, t in node.terms:
            x = _compile(t, ops)
            x = x if sign > 0 else -x
            try:
                out = x if out is None else out + x
            except SignatureError as exc:
                raise ParseError(str(exc), t.line, t.col) from None
        return out
    if isinstance(node, Prod):
        out = _compile(node.factors[0], ops)
        for fct in node.factors[1:]:
            try:
                out = out * _compile(fct, ops)
            except SignatureError as exc:
                raise ParseError(str(exc), fct.line, fct.col) from None
        return out
    if isinstance(node, Div):
        return _compile(node.base, ops).scale(Fraction(1) / node.den)
    if isinstance(node, Neg):
        return -_compile(node.x, ops)
    if isinstance(node, Pow):
        base = _compile(node.base, ops)
        if base.signature and node.k > 1:
            raise ParseError("only scalars can be raised to a power", node.line, node.col)
        return base ** node.k
    if isinstance(node, Conj):
        return _compile(node.x, ops).conj()
    if isinstance(node, Re):
        x = _compile(node.x, ops)
        if x.signature and x.terms:
            raise ParseError("Re(...) needs a scalar argument", node.line, node.col)
        return x.re_part()
    if isinstance(node, ZOp):
        return ops.z_derivative(_compile(node.x, ops), _index(node.idx))
    raise TypeError(f"unknown node {node!r}")


def parse_ast(src: str, line0: int = 1) -> Node:
    p = _Parser(tokenize(src, line0))
    node = p.expr()
    if not p.at("eof"):
        t = p.cur
        raise ParseError(f"unexpected {t.text!r}", t.line, t.col)
    _occurrences(node)
    return node


def parse(src: str, *, expand: bool = True, line0: int = 1):
    """Parse text into an Expression (or the syntax tree with ``expand=False``)."""
    node = parse_ast(src, line0)
    if not expand:
        return node
    return compile_node(node)


def parse_chain(src: str, line0: int = 1, ops=None) -> list:
    """``A == B == C`` -> [A, B, C]; a bare expression means ``A == 0``."""
    toks = tokenize(src, line0)
    cuts = [k for k, t in enumerate(toks) if t.kind == "eqeq"]
    pieces = []
    prev = 0
    for k in cuts + [len(toks) - 1]:
        end = toks[k]
        pieces.append(toks[prev:k] + [Token("eof", "", end.line, end.col)])
        prev = k + 1
    out = []
    for piece in pieces:
        p = _Parser(piece)
        node = p.expr()
        if not p.at("eof"):
            t = p.cur
            raise ParseError(f"unexpected {t.text!r}", t.line, t.col)
        _occurrences(node)
        out.append(compile_node(node, ops))
    if len(out) == 1:
        out.append(Expression.zero())
    return out


def parse_identity(src: str, line0: int = 1):
    """``LHS == RHS`` -> (lhs, rhs)."""
    sides = parse_chain(src, line0)
    if len(sides) != 2:
        raise ParseError("expected exactly one '=='", line0, 1)
    return sides[0], sides[1]


# --------------------------------------------------------------------------
# printing

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _dummy_names(count: int, taken: set) -> list:
    out = []
    for ch in _LETTERS:
        if len(out) == count:
            return out
        if ch not in taken:
            out.append(ch)
    k = 1
    while len(out) < count:
        name = f"d{k}"
        if name not in taken:
            out.append(name)
        k += 1
    return out


def _fmt_index(ix: Index, names: dict) -> str:
    if ix.kind == T:
        return "0"
    lab = ix.label if ix.status == FREE else names[ix.label]
    return f"{lab}'" if ix.kind == ANTI else str(lab)


def _fmt_weight(exp) -> str:
    # constant first, then n, then p: exp((2+p)*f), exp((2*n-2)*f)
    parts = []
    for c, var in ((exp.n_coef, "n"), (exp.const, ""), (exp.p_coef, "p")):
        if not c:
            continue
        mag = abs(c)
        if var:
            body = var if mag == 1 else f"{mag}*{var}"
        else:
            body = str(mag)
        parts.append(("-" if c < 0 else "+", body))
    if exp.n_coef == 0 and exp.const:
        parts.sort(key=lambda sb: sb[1] != str(abs(exp.const)))
    text = "".join(f"{s}{b}" for s, b in parts).lstrip("+")
    if text == "1":
        return "exp(f)"
    if len(parts) == 1 and parts[0][0] == "+" and "/" not in text:
        return f"exp({text}*f)"
    return f"exp(({text})*f)"


def _fmt_monomial(key, coeff: CoeffPoly, taken: set) -> str:
    exp, factors, deltas = key
    dummies = sorted({ix.label for w in factors for ix in w if ix.status == DUMMY})
    names = dict(zip(dummies, _dummy_names(len(dummies), taken)))
    parts = []
    if not exp.is_identity():
        parts.append(_fmt_weight(exp))
    for w in factors:
        parts.append("f[" + ",".join(_fmt_index(ix, names) for ix in w) + "]")
    for h, a in deltas:
        parts.append(f"delta({_fmt_index(h, names)},{_fmt_index(a, names)})")
    body = "*".join(parts)
    if len(coeff.terms) == 1:
        (e, c), = coeff.terms.items()
        lead = format_poly_term(e, c)
        if not body:
            return lead
        if lead == "1":
            return body
        if lead == "-1":
            return "-" + body
        return f"{lead}*{body}"
    text = f"({format_poly(coeff)})"
    return f"{text}*{body}" if body else text


def _join(chunks: list) -> str:
    out = ""
    for i, t in enumerate(chunks):
        if i == 0:
            out = t
        elif t.startswith("-"):
            out += " - " + t[1:]
        else:
            out += " + " + t
    return out


def to_text(e: Expression, factor: bool = True) -> str:
    """Deterministic text; re-parses to an equal Expression."""
    if e.is_zero():
        return "0"
    taken = {ix.label for ix in e.signature}
    items = e.sorted_items()
    common = None
    if factor and len(items) > 1:
        mins = tuple(min(c.content_monomial()[k] for _, c in items) for k in range(3))
        if any(mins):
            # pull out a minus sign when most leading coefficients are negative
            leads = [c.shift_down(mins).sorted_terms()[0][1] for _, c in items]
            neg = sum(1 for v in leads if v.re < 0 or (not v.re and v.im < 0))
            sign = GaussQ(-1) if 2 * neg > len(leads) else GaussQ(1)
            common = CoeffPoly({mins: sign})
    if common is None:
        return _join([_fmt_monomial(k, c, taken) for k, c in items])
    (mins, sign), = common.terms.items()
    inner = _join([_fmt_monomial(k, c.shift_down(mins) * sign, taken) for k, c in items])
    head = format_poly_term(mins, sign)
    return f"{head}*({inner})"


# --------------------------------------------------------------------------
# catalog files


@dataclass
class Record:
    sides: list
    meta: dict
    line: int
    text: str


def iter_records(text: str) -> Iterator[tuple[dict, str, int]]:
    """Split catalog text into (directives, source, first line) records.

    ``@key value`` lines set directives for the next record; a blank line ends
    a record; ``#`` starts a comment.
    """
    meta: dict = {}
    buf: list = []
    start = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.split("#", 1)[0].strip()
        if raw.strip().startswith("@"):
            if buf:
                yield meta, "\n".join(buf), start
                meta, buf = {}, []
            key, _, value = raw.strip()[1:].partition(" ")
            meta[key] = value.strip()
            continue
        if not stripped:
            if buf:
                yield meta, "\n".join(buf), start
                meta, buf = {}, []
            continue
        if not buf:
            start = lineno
        buf.append(raw)
    if buf:
        yield meta, "\n".join(buf), start


def load_records(text: str, ops=None) -> list[Record]:
    out = []
    for meta, src, line in iter_records(text):
        out.append(Record(parse_chain(src, line0=line, ops=ops), meta, line, src))
    return out
