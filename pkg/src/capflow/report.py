"""Named pass/fail checks with measured slack, serializable to JSON."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""

    @property
    def slack(self) -> float:
        return self.value


@dataclass
class VerificationReport:
    """Ordered collection of checks.

    ``value`` is the measured slack of a check: positive means the constraint
    holds with room to spare, negative means it is violated by that amount.
    """

    title: str
    checks: list[Check] = field(default_factory=list)

    def add(self, name: str, value: float, tolerance: float = 0.0, passed: bool | None = None,
            detail: str = "") -> Check:
        value = float(value)
        if passed is None:
            passed = math.isfinite(value) and value >= -tolerance
        check = Check(name, value, float(tolerance), bool(passed), detail)
        self.checks.append(check)
        return check

    def extend(self, other: "VerificationReport", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.value, c.tolerance, c.passed, c.detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"title": self.title, "passed": self.passed,
                "checks": [asdict(c) for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            flag = "PASS" if c.passed else "FAIL"
            out.append(f"[{flag}] {c.name}: value={c.value:.6e} tol={c.tolerance:.1e} {c.detail}".rstrip())
        return out
