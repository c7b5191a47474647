from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class Report:
    """Outcome of a verifier: hard violations, soft flags and measured quantities."""

    kind: str
    violations: list[str] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    stats: dict[str, Any] = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return not self.violations

    def fail(self, msg: str) -> None:
        self.violations.append(msg)

    def flag(self, msg: str) -> None:
        self.flags.append(msg)

    def merge(self, other: "Report", prefix: str = "") -> None:
        self.violations.extend(prefix + v for v in other.violations)
        self.flags.extend(prefix + f for f in other.flags)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "valid": self.valid,
            "violations": list(self.violations),
            "flags": list(self.flags),
            "stats": dict(self.stats),
        }

    def __str__(self):
        head = f"{self.kind}: {'OK' if self.valid else 'INVALID'}"
        lines = [head] + [f"  violation: {v}" for v in self.violations]
        lines += [f"  flag: {f}" for f in self.flags]
        return "\n".join(lines)
