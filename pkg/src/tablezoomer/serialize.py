"""Textualize tables and schemas for prompting.

Four table formats are supported; schema serialization is canonical JSON
with a stable key order so that temperature-0 prompting is reproducible
byte-for-byte.
"""

from __future__ import annotations

import json
from enum import Enum

from .store import Table, cell_text

PLAIN_CELL_WIDTH_CAP = 40


class TableFormat(str, Enum):
    MARKDOWN_GRID = "markdown_grid"
    JSON_RECORDS = "json_records"
    PLAIN_ALIGNED = "plain_aligned"
    STRUCT_MARKUP = "struct_markup"


def _truncation_note(hidden: int) -> str:
    return f"... ({hidden} more rows)"


def _md_escape(text: str) -> str:
    return text.replace("|", "\\|")


def serialize_table(table: Table, format: TableFormat, max_rows: int | None = None) -> str:
    """Render a table as text; `max_rows` truncates with an explicit marker."""
    fmt = TableFormat(format)
    shown = table.row_count if max_rows is None else min(max_rows, table.row_count)
    hidden = table.row_count - shown

    if fmt is TableFormat.JSON_RECORDS:
        records = [table.row(i) for i in range(shown)]
        text = json.dumps(records, ensure_ascii=False)
        if hidden:
            text += "\n" + _truncation_note(hidden)
        return text

    names = table.column_names
    rows = [[cell_text(col.cells[i]) for col in table.columns] for i in range(shown)]

    if fmt is TableFormat.MARKDOWN_GRID:
        lines = ["|" + "|".join(_md_escape(n) for n in names) + "|"]
        lines.append("|" + "|".join("---" for _ in names) + "|")
        for row in rows:
            lines.append("|" + "|".join(_md_escape(c) for c in row) + "|")
        if hidden:
            lines.append(_truncation_note(hidden))
        return "\n".join(lines)

    if fmt is TableFormat.PLAIN_ALIGNED:
        def clip(text: str) -> str:
            if len(text) <= PLAIN_CELL_WIDTH_CAP:
                return text
            return text[: PLAIN_CELL_WIDTH_CAP - 3] + "..."

        clipped = [[clip(c) for c in row] for row in rows]
        widths = [
            min(PLAIN_CELL_WIDTH_CAP, max([len(n)] + [len(r[i]) for r in clipped] or [0]))
            for i, n in enumerate(names)
        ]
        gutter = max(len(str(shown - 1)) if shown else 1, 1)
        lines = [" " * gutter + "  " + "  ".join(clip(n).rjust(w) for n, w in zip(names, widths))]
        for i, row in enumerate(clipped):
            lines.append(str(i).rjust(gutter) + "  " + "  ".join(c.rjust(w) for c, w in zip(row, widths)))
        if hidden:
            lines.append(_truncation_note(hidden))
        return "\n".join(lines)

    # struct markup: one block of "column: value" lines per row
    lines = []
    for i, row in enumerate(rows):
        lines.append(f"[ROW {i + 1}]")
        for name, cell in zip(names, row):
            lines.append(f"{name}: {cell}")
        lines.append("[/ROW]")
    if hidden:
        lines.append(_truncation_note(hidden))
    return "\n".join(lines)


def serialize_schema(schema) -> str:
    """Canonical JSON for a global or refined schema; stable across runs."""
    return json.dumps(schema.to_dict(), ensure_ascii=False, indent=1)
