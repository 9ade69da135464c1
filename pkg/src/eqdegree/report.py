"""Deterministic text / JSON reports."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .degree import DegreeVector


def fmt_num(v) -> str:
    """Stable short float formatting; tiny values print as 0."""
    v = float(v)
    if abs(v) < 1e-12:
        v = 0.0
    return f"{v:.10g}"


def fmt_point(x) -> str:
    return "(" + ", ".join(fmt_num(v) for v in np.asarray(x, dtype=float).ravel()) + ")"


@dataclass
class Report:
    command: str
    sections: list = field(default_factory=list)  # (title, [lines])
    data: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    vector: Optional[DegreeVector] = None
    status: str = "ok"

    def section(self, title: str, lines) -> None:
        self.sections.append((title, list(lines)))

    def warn(self, message: str) -> None:
        if message not in self.warnings:
            self.warnings.append(message)

    def to_text(self) -> str:
        out = [f"== eqdegree {self.command} =="]
        for title, lines in self.sections:
            out.append(f"[{title}]")
            out.extend(f"  {line}" for line in lines)
        out.append("[warnings]")
        if self.warnings:
            out.extend(f"  {w}" for w in self.warnings)
        else:
            out.append("  none")
        out.append(f"status: {self.status}")
        if self.vector is not None:
            out.append(self.vector.to_block())
        return "\n".join(out) + "\n"

    def to_json(self) -> str:
        payload = {
            "command": self.command,
            "status": self.status,
            "data": self.data,
            "warnings": self.warnings,
        }
        if self.vector is not None:
            payload["vector"] = [
                {"H": h, "alpha": a, "deg": v} for (h, a), v in sorted(self.vector.entries.items())
            ]
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
