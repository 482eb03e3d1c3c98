"""Plot-ready output files: CSV with a pinned dialect and a JSON variant,
both embedding the fully resolved configuration and seed."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class FigureData:
    """Columnar data underlying one reproduced figure, plus the built-in
    acceptance checks evaluated on it."""

    figure: str
    columns: list
    rows: list
    config: dict
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _cell(value) -> str:
    """Scientific notation with 9 significant digits; text passes through."""
    if isinstance(value, str):
        return value
    if value is None:
        return "nan"
    v = float(value)
    if math.isnan(v):
        return "nan"
    return f"{v:.8e}"


def to_csv(data: FigureData) -> str:
    """Comma separator, dot decimal, header row, LF endings; the resolved
    config rides along in a leading comment line."""
    lines = ["# config=" + json.dumps(data.config, sort_keys=True,
                                      separators=(",", ":"))]
    lines.append(",".join(data.columns))
    for row in data.rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def to_json(data: FigureData) -> str:
    payload = {
        "figure": data.figure,
        "config": data.config,
        "columns": list(data.columns),
        "rows": [[None if (isinstance(v, float) and math.isnan(v)) else v
                  for v in row] for row in data.rows],
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail}
                   for c in data.checks],
        "passed": data.passed,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_outputs(data: FigureData, out_dir: Path, out_format: str) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if out_format in ("csv", "both"):
        path = out_dir / f"{data.figure}.csv"
        path.write_text(to_csv(data), encoding="utf-8", newline="\n")
        written.append(path)
    if out_format in ("json", "both"):
        path = out_dir / f"{data.figure}.json"
        path.write_text(to_json(data), encoding="utf-8", newline="\n")
        written.append(path)
    return written
