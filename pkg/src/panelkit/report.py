"""Report documents rendered as fixed-width text or JSON.

Tables hold raw values tagged with a display kind. The text renderer
formats them; the JSON renderer emits them at full precision, so both
views come from the same numbers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

SCHEMA = "panelkit/1"


@dataclass(frozen=True)
class Cell:
    value: object
    kind: str = "num"  # num | prob | int | fixed3 | loading | text


def num(v):
    return Cell(v, "num")


def prob(v):
    return Cell(v, "prob")


def fixed3(v):
    return Cell(v, "fixed3")


@dataclass
class Table:
    title: str | None
    columns: list
    rows: list
    notes: list = field(default_factory=list)
    suppress: float | None = None


@dataclass
class ReportDocument:
    command: str
    header: list  # (label, value) pairs
    sections: list
    warnings: list = field(default_factory=list)
    results: dict = field(default_factory=dict)


def _finite(v):
    return v is not None and not (isinstance(v, float) and not math.isfinite(v))


def format_number(v) -> str:
    """Six significant digits, fixed point; scientific outside [1e-4, 1e7)."""
    if not _finite(v):
        return "NA"
    v = float(v)
    if v == 0:
        return "0.000000"
    a = abs(v)
    if a >= 1e7 or a < 1e-4:
        return f"{v:.5E}"
    int_digits = int(math.floor(math.log10(a))) + 1
    text = f"{v:.{max(0, 6 - int_digits)}f}"
    if len(text.lstrip("-").replace(".", "").lstrip("0")) > 6 and 6 - int_digits > 0:
        text = f"{v:.{6 - int_digits - 1}f}"
    return text


def format_prob(p) -> str:
    """Four decimals; anything below 5e-5 prints as 0.0000."""
    if not _finite(p):
        return "NA"
    p = float(p)
    if p < 5e-5:
        return "0.0000"
    return f"{min(p, 1.0):.4f}"


def format_cell(cell, suppress=None) -> str:
    if not isinstance(cell, Cell):
        return "" if cell is None else str(cell)
    v, kind = cell.value, cell.kind
    if kind == "text":
        return "" if v is None else str(v)
    if v is None:
        return ""
    if kind == "prob":
        return format_prob(v)
    if kind == "int":
        return str(int(v))
    if kind in ("fixed3", "loading"):
        if not _finite(v):
            return "NA"
        if kind == "loading" and suppress is not None and abs(float(v)) < suppress:
            return ""
        return f"{float(v):.3f}"
    return format_number(v)


def _json_value(v):
    if isinstance(v, Cell):
        v = v.value
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, np.ndarray):
        return [_json_value(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


def render_table(table: Table) -> list[str]:
    cols = len(table.columns)
    cells = [[format_cell(c, table.suppress) for c in row] for row in table.rows]
    widths = [len(str(h)) for h in table.columns]
    for row in cells:
        for j, c in enumerate(row):
            widths[j] = max(widths[j], len(c))
    lines = []
    if table.title:
        lines.append(table.title)
    if any(str(h) for h in table.columns):
        lines.append("  ".join(
            str(h).ljust(widths[j]) if j == 0 else str(h).rjust(widths[j])
            for j, h in enumerate(table.columns)
        ).rstrip())
    for raw, row in zip(table.rows, cells):
        row = row + [""] * (cols - len(row))
        left = [j == 0 or not isinstance(c, Cell) or c.kind == "text" for j, c in enumerate(raw)]
        left += [False] * (cols - len(left))
        lines.append("  ".join(
            c.ljust(widths[j]) if left[j] else c.rjust(widths[j]) for j, c in enumerate(row)
        ).rstrip())
    lines.extend(table.notes)
    return lines


def render_text(doc: ReportDocument) -> str:
    lines = [f"{label}: {value}" if value is not None else label for label, value in doc.header]
    for w in doc.warnings:
        lines.append(f"WARNING: {w}")
    for table in doc.sections:
        lines.append("")
        lines.extend(render_table(table))
    return "\n".join(lines) + "\n"


def render_json(doc: ReportDocument) -> str:
    payload = {
        "schema": SCHEMA,
        "command": doc.command,
        "header": [[label, _json_value(value)] for label, value in doc.header],
        "sections": [
            {
                "title": t.title,
                "columns": list(t.columns),
                "rows": [[_json_value(c) for c in row] for row in t.rows],
                "notes": list(t.notes),
            }
            for t in doc.sections
        ],
        "warnings": list(doc.warnings),
        "results": _json_value(doc.results),
    }
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def render(doc: ReportDocument, fmt: str = "text") -> str:
    return render_json(doc) if fmt == "json" else render_text(doc)
