"""Verification reports."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

from .core import Expression


@dataclass
class VerificationReport:
    case_id: str
    residual: Expression
    lhs_terms: int = 0
    rhs_terms: int = 0
    seconds: float = 0.0
    oracle: dict = field(default_factory=dict)  # n -> number of nonzero point residuals
    note: str = ""

    @property
    def symbolic_ok(self) -> bool:
        return self.residual.is_zero()

    @property
    def ok(self) -> bool:
        return self.symbolic_ok and all(v == 0 for v in self.oracle.values())

    @property
    def residual_terms(self) -> int:
        return len(self.residual)

    def record(self, timings: bool = False) -> dict:
        rec = {
            "id": self.case_id,
            "status": "pass" if self.ok else "fail",
            "residual_terms": self.residual_terms,
            "lhs_terms": self.lhs_terms,
            "rhs_terms": self.rhs_terms,
        }
        if self.oracle:
            rec["oracle_failures"] = {str(k): v for k, v in sorted(self.oracle.items())}
        if timings:
            rec["seconds"] = round(self.seconds, 3)
        return rec


class _Clock:
    elapsed = 0.0


@contextmanager
def timed():
    clock = _Clock()
    t0 = time.perf_counter()
    try:
        yield clock
    finally:
        clock.elapsed = time.perf_counter() - t0
