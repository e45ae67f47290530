"""Exact jet calculus on the Heisenberg group and machine checks of divergence identities."""

from .coeff import CoeffPoly, GaussQ
from .core import ANTI, HOL, T, T0, Expression, ExpFactor, Index, SignatureError, anti, conj, hol, mul, re_part
from .normalizer import NO_PDE, PDE, RewriteConfig, normalize
from .parser import ParseError, parse, to_text

__all__ = [
    "ANTI", "HOL", "T", "T0", "CoeffPoly", "GaussQ", "Expression", "ExpFactor", "Index",
    "SignatureError", "ParseError", "RewriteConfig", "PDE", "NO_PDE",
    "anti", "hol", "conj", "mul", "re_part", "normalize", "parse", "to_text",
]
