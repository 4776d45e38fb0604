"""Report records and serialized sinks (JSON lines, CSV)."""

from __future__ import annotations

import csv
import io
import json

import numpy as np
from dataclasses import dataclass, field
from typing import List, Optional


@dataclass
class Report:
    check: str
    scenario: str
    size: int
    passed: bool
    vacuous: bool = False
    constants: dict = field(default_factory=dict)
    witness: Optional[object] = None
    wall_time: float = 0.0

    def record(self, with_timing: bool = True) -> dict:
        d = {"check": self.check, "scenario": self.scenario, "size": self.size,
             "passed": self.passed, "vacuous": self.vacuous,
             "constants": self.constants, "witness": self.witness}
        if with_timing:
            d["wall_time"] = self.wall_time
        return d


def _jsonable(v):
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    try:
        json.dumps(v)
        return v
    except TypeError:
        return repr(v)


def to_jsonl(reports: List[Report], with_timing: bool = True) -> str:
    lines = []
    for r in reports:
        d = _jsonable(r.record(with_timing))
        lines.append(json.dumps(d, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def to_csv(reports: List[Report], with_timing: bool = True) -> str:
    buf = io.StringIO()
    cols = ["check", "scenario", "size", "passed", "vacuous",
            "constant", "value"]
    if with_timing:
        cols.append("wall_time")
    w = csv.writer(buf)
    w.writerow(cols)
    for r in reports:
        consts = r.constants or {"": ""}
        for name, val in sorted(consts.items()):
            row = [r.check, r.scenario, r.size, r.passed, r.vacuous, name, val]
            if with_timing:
                row.append(r.wall_time)
            w.writerow(row)
    return buf.getvalue()


def write_reports(reports: List[Report], path: str, fmt: str = "jsonl",
                  with_timing: bool = True) -> None:
    text = (to_jsonl if fmt == "jsonl" else to_csv)(reports, with_timing)
    with open(path, "w") as fh:
        fh.write(text)
