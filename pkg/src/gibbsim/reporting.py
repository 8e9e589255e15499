"""Deterministic CSV emission and human-readable run reports.

CSV files start with ``# key = value`` provenance lines (config echo, seed,
version) followed by a header row; floats are printed with 17 significant
digits so reruns are byte-identical.  Timestamps appear only in report.md,
which carries no machine contract.
"""

from __future__ import annotations

import os
import time


def fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path: str, provenance: dict, columns: list[str],
              rows: list[tuple]) -> None:
    lines = [f"# {k} = {v}" for k, v in provenance.items()]
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("row width does not match the column header")
        lines.append(",".join(fmt(v) for v in row))
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


class Report:
    """Accumulates a markdown run report with pass/fail flags."""

    def __init__(self, title: str, provenance: dict):
        self.lines = [f"# {title}", ""]
        self.lines.append(f"Generated {time.strftime('%Y-%m-%d %H:%M:%S')}")
        self.lines.append("")
        self.lines.append("## Configuration")
        for k, v in provenance.items():
            self.lines.append(f"- {k}: {v}")
        self.lines.append("")
        self.failed = False

    def section(self, title: str) -> None:
        self.lines += [f"## {title}", ""]

    def note(self, text: str) -> None:
        self.lines.append(text)

    def check(self, label: str, ok: bool, detail: str = "") -> bool:
        flag = "PASS" if ok else "FAIL"
        self.lines.append(f"- [{flag}] {label}" + (f" ({detail})" if detail else ""))
        if not ok:
            self.failed = True
        return ok

    def write(self, path: str) -> None:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w") as fh:
            fh.write("\n".join(self.lines) + "\n")
