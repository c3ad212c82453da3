"""Check/Report records shared by the harness, the CLI and validity checks.

JSON schema (stable field names)::

    {"suite": str, "seed": int|null, "passed": bool,
     "checks": [{"name", "kind", "estimate", "std_error", "bound",
                 "lower", "passed", "witness", "note"}],
     "metadata": {...}}

``kind`` is ``"assert"`` for checks that gate ``passed`` and ``"report"`` for
informational rows.  The CSV export has one row per check with the columns of
:data:`CSV_FIELDS`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

CSV_FIELDS = ("suite", "name", "kind", "estimate", "std_error", "lower", "bound",
              "passed", "witness", "note")


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)


@dataclass
class Check:
    name: str
    estimate: float | None = None
    std_error: float | None = None
    bound: float | None = None
    lower: float | None = None
    passed: bool = True
    kind: str = "assert"
    witness: dict[str, Any] | None = None
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.kind == "report":
            status = "INFO"
        parts = [f"[{status}] {self.name}"]
        if self.estimate is not None:
            parts.append(f"estimate={_fmt(self.estimate)}")
        if self.std_error is not None:
            parts.append(f"se={_fmt(self.std_error)}")
        if self.lower is not None:
            parts.append(f"lower={_fmt(self.lower)}")
        if self.bound is not None:
            parts.append(f"bound={_fmt(self.bound)}")
        if self.note:
            parts.append(self.note)
        return " ".join(parts)


def _fmt(x):
    return f"{x:.6g}" if isinstance(x, float) else str(x)


@dataclass
class Report:
    suite: str
    seed: int | None = None
    checks: list[Check] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.kind == "assert")

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "Report", prefix: str = "") -> None:
        for c in other.checks:
            c.name = prefix + c.name
            self.checks.append(c)
        self.metadata.update({prefix + k: v for k, v in other.metadata.items()})

    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.kind == "assert" and not c.passed]

    def summary(self) -> str:
        return "\n".join(c.line() for c in self.checks)

    def to_dict(self) -> dict[str, Any]:
        return {"suite": self.suite, "seed": self.seed, "passed": self.passed,
                "checks": [asdict(c) for c in self.checks],
                "metadata": self.metadata}

    def to_json(self) -> str:
        return json.dumps(_clean(self.to_dict()), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for c in self.checks:
            row = {k: v for k, v in asdict(c).items() if k in CSV_FIELDS}
            row["witness"] = json.dumps(_clean(c.witness), sort_keys=True) if c.witness else ""
            row["suite"] = self.suite
            w.writerow(row)
        return buf.getvalue()


def _clean(obj):
    """Make floats JSON-safe (inf/nan become strings) and numpy scalars native."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


REPORT_SCHEMA = {
    "type": "object",
    "required": ["suite", "seed", "passed", "checks", "metadata"],
    "properties": {
        "suite": {"type": "string"},
        "seed": {"type": ["integer", "null"]},
        "passed": {"type": "boolean"},
        "metadata": {"type": "object"},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "kind", "passed"],
                "properties": {
                    "name": {"type": "string"},
                    "kind": {"enum": ["assert", "report"]},
                    "estimate": {"type": ["number", "string", "null"]},
                    "std_error": {"type": ["number", "null"]},
                    "bound": {"type": ["number", "string", "null"]},
                    "lower": {"type": ["number", "null"]},
                    "passed": {"type": "boolean"},
                    "witness": {"type": ["object", "null"]},
                    "note": {"type": "string"},
                },
            },
        },
    },
}
