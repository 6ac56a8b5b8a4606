"""Uniform pass/fail records produced by the verification layers.

Every machine check reports a ``CheckResult``: a stable identifier, a
self-contained statement of the identity that was tested (the ``anchor``),
the outcome, and a witness string describing the first discrepancy when one
exists.  Negative controls set ``expected_fail``: they deliberately break
one ingredient and count as healthy exactly when the check really fails.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["CheckResult", "passed", "control"]


@dataclass
class CheckResult:
    check_id: str
    anchor: str
    ok: bool
    witness: str = ""
    expected_fail: bool = False

    @property
    def status(self) -> str:
        if self.expected_fail:
            return "EXPECTED-FAIL" if self.ok else "FAIL"
        return "PASS" if self.ok else "FAIL"


def passed(check_id: str, anchor: str, ok: bool, witness: str = "") -> CheckResult:
    return CheckResult(check_id, anchor, ok, witness)


def control(check_id: str, anchor: str, broke: bool, witness: str = "") -> CheckResult:
    """Negative control: healthy iff the deliberately broken variant fails."""
    return CheckResult(check_id, anchor, broke, witness, expected_fail=True)
