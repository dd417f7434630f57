"""Diagnostics reports: JSON for machines, aligned text for humans, CSV curves.

Reports are deterministic: sorted keys, repr-formatted floats, no timestamps.
Every entry carries the name of the property it checks so a FAIL line states
what was violated, plus the config hash it was computed from.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Optional

from .fieldio import write_csv


@dataclass
class ProbeResult:
    name: str
    kind: str
    verdict: str                      # PASS | FAIL | INCONCLUSIVE
    anchor: str                       # property the verdict refers to
    numbers: dict = dc_field(default_factory=dict)
    curve: Optional[list] = None      # list of (x, y) rows
    note: str = ""


@dataclass
class DiagnosticsReport:
    experiment: str
    config_hash: str
    seed: int
    probes: list

    def verdict(self) -> str:
        if any(p.verdict == "FAIL" for p in self.probes):
            return "FAIL"
        if any(p.verdict == "INCONCLUSIVE" for p in self.probes):
            return "INCONCLUSIVE"
        return "PASS"

    def to_json(self) -> str:
        payload = {
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "verdict": self.verdict(),
            "probes": [
                {
                    "name": p.name,
                    "kind": p.kind,
                    "verdict": p.verdict,
                    "anchor": p.anchor,
                    "numbers": {k: _jsonable(v)
                                for k, v in sorted(p.numbers.items())},
                    "note": p.note,
                }
                for p in self.probes
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_text(self) -> str:
        width = max((len(p.name) for p in self.probes), default=10)
        lines = [f"experiment {self.experiment}  config {self.config_hash}  "
                 f"seed {self.seed:#x}"]
        for p in self.probes:
            detail = "  ".join(f"{k}={_short(v)}"
                               for k, v in sorted(p.numbers.items()))
            line = f"{p.verdict:<12} {p.name:<{width}}  {detail}"
            if p.verdict == "FAIL":
                line += f"  [violated: {p.anchor}]"
            if p.note:
                line += f"  ({p.note})"
            lines.append(line)
        lines.append(f"overall: {self.verdict()}")
        return "\n".join(lines)

    def write(self, out_dir: str | Path) -> list:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        jpath = out_dir / f"{self.experiment}.report.json"
        jpath.write_text(self.to_json() + "\n")
        written.append(jpath)
        tpath = out_dir / f"{self.experiment}.report.txt"
        tpath.write_text(self.to_text() + "\n")
        written.append(tpath)
        for p in self.probes:
            if p.curve:
                cpath = out_dir / f"{self.experiment}.{p.name}.csv"
                write_csv(cpath, p.curve, ["scale", "value"])
                written.append(cpath)
        return written


def _jsonable(v):
    if isinstance(v, float):
        return v
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return v.item()
    return v


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)
