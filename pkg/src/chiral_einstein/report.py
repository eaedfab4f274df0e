"""Machine-readable verification reports (schema ``chiral-einstein/1``)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

SCHEMA = "chiral-einstein/1"
PASS, FAIL, TOO_TIGHT = "pass", "fail", "tolerance-too-tight"


@dataclass
class Check:
    """One verified identity.

    ``residual <= tolerance`` decides the status.  When a user tolerance
    overrides the native one and the check only fails because of it, the
    status is ``tolerance-too-tight``.
    """

    name: str
    anchor: str
    residual: float
    tolerance: float
    native_tolerance: float | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        if _finite(self.residual) and self.residual <= self.tolerance:
            return PASS
        native = self.native_tolerance
        if native is not None and _finite(self.residual) and self.residual <= native:
            return TOO_TIGHT
        return FAIL

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "residual": _num(self.residual),
            "tolerance": _num(self.tolerance),
            "status": self.status,
            "metadata": _clean(self.metadata),
        }


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float):
        return _num(obj)
    if isinstance(obj, (int, str, bool)) or obj is None:
        return obj
    return str(obj)


@dataclass
class Report:
    suite: str
    seed: int
    tol: float | None
    checks: list[Check] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def sorted_checks(self) -> list[Check]:
        return sorted(self.checks, key=lambda c: c.name)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "suite": self.suite,
            "seed": self.seed,
            "tol": self.tol,
            "passed": self.passed,
            "metadata": _clean(self.metadata),
            "checks": [c.to_dict() for c in self.sorted_checks()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"suite {self.suite} (seed {self.seed})"]
        for c in self.sorted_checks():
            lines.append(f"  [{c.status:>19}] {c.name}: residual {c.residual:.3e} "
                         f"(tol {c.tolerance:.1e})  {c.anchor}")
        n_ok = sum(c.passed for c in self.checks)
        lines.append(f"{n_ok}/{len(self.checks)} checks pass")
        return "\n".join(lines)

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_text()
