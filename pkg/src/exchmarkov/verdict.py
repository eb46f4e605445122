"""Uniform result type for checkers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

PASS = "pass"
FAIL = "fail"
UNKNOWN = "unknown"


@dataclass
class Verdict:
    """Outcome of a property check.

    ``witness`` is a JSON-ready description of the counterexample (for
    fail) or the undecided case (for unknown). ``details`` carries
    regime tags, statistics and anything else worth reporting.
    """

    status: str
    witness: dict | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @property
    def failed(self) -> bool:
        return self.status == FAIL

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        out: dict[str, Any] = {"status": self.status}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.details:
            out["details"] = self.details
        return out
