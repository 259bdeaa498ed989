"""Aligned plain-text tables for the report-style CLI outputs."""

from __future__ import annotations


def render_table(headers, rows) -> str:
    """First column left-aligned, the rest right-aligned, two-space gutters."""
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    n_cols = max(len(row) for row in cells)
    widths = [0] * n_cols
    for row in cells:
        for j, cell in enumerate(row):
            widths[j] = max(widths[j], len(cell))
    lines = []
    for i, row in enumerate(cells):
        parts = []
        for j, cell in enumerate(row):
            parts.append(cell.ljust(widths[j]) if j == 0 else cell.rjust(widths[j]))
        lines.append("  ".join(parts).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
