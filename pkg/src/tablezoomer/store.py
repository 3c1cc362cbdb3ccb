"""Typed in-memory tables and per-column statistical profiles.

Tables are loaded in one streaming pass into per-column cell buffers, typed
by a fixed inference rule, and profiled so that downstream schema building
never needs to look at the raw file again. Tables and stats are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import json
import math
import re
import statistics
from dataclasses import dataclass
from datetime import datetime, date, timedelta
from enum import Enum
from pathlib import Path

from .errors import EmptyTableError, MalformedTableError

Cell = bool | int | float | str | None

# categorical inference: distinct count must stay under max(this, 5% of non-null)
CATEGORICAL_FLOOR = 20
TOP_ITEMS = 3

_BOOL_TOKENS = {"true", "false", "yes", "no", "0", "1"}
_TRUE_TOKENS = {"true", "yes", "1"}
_NUMBER_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_ISO_DATE_RE = re.compile(
    r"^\d{4}-\d{2}-\d{2}"
    r"([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?$"
)


class DataType(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    TEXTUAL = "textual"
    BOOLEAN = "boolean"
    DATETIME = "datetime"


def is_null(cell: Cell) -> bool:
    """Nulls are None and whitespace-only strings; everything else is a value."""
    if cell is None:
        return True
    return isinstance(cell, str) and cell.strip() == ""


def parse_number(cell: Cell) -> int | float | None:
    """Parse a cell as a number, or None. Booleans are tokens, not numbers."""
    if isinstance(cell, bool):
        return None
    if isinstance(cell, (int, float)):
        return cell if math.isfinite(cell) else None
    if not isinstance(cell, str):
        return None
    token = cell.strip()
    if not _NUMBER_RE.match(token):
        return None
    try:
        if re.match(r"^[+-]?\d+$", token):
            return int(token)
        return float(token)
    except ValueError:  # pragma: no cover - the regex already gates this
        return None


def parse_iso_datetime(cell: Cell) -> datetime | None:
    """Parse an ISO-8601 date or datetime string into a naive datetime, or None.

    Offset-aware values are shifted to UTC and the offset dropped so that one
    column can mix date-only and zoned cells without breaking comparisons.
    """
    if not isinstance(cell, str):
        return None
    token = cell.strip()
    if not _ISO_DATE_RE.match(token):
        return None
    try:
        normalized = token.replace("Z", "+00:00")
        if len(normalized) == 10:
            d = date.fromisoformat(normalized)
            return datetime(d.year, d.month, d.day)
        dt = datetime.fromisoformat(normalized)
    except ValueError:
        return None
    if dt.tzinfo is not None:
        dt = (dt - dt.utcoffset()).replace(tzinfo=None)
    return dt


def cell_text(cell: Cell) -> str:
    """Render a cell for text-format serialization and string matching."""
    if cell is None:
        return ""
    if isinstance(cell, bool):
        return "true" if cell else "false"
    if isinstance(cell, float) and cell.is_integer() and abs(cell) < 1e15:
        return str(int(cell))
    return str(cell)


@dataclass(frozen=True)
class Column:
    name: str
    dtype: DataType
    cells: list[Cell]

    def non_null_cells(self) -> list[Cell]:
        return [c for c in self.cells if not is_null(c)]


@dataclass(frozen=True)
class Table:
    name: str
    columns: list[Column]
    row_count: int
    source_path: Path

    def __post_init__(self) -> None:
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise MalformedTableError(f"duplicate column names after trimming: {names}")
        for col in self.columns:
            if len(col.cells) != self.row_count:
                raise MalformedTableError(
                    f"column {col.name!r} has {len(col.cells)} cells, expected {self.row_count}"
                )

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for col in self.columns:
            if col.name == name:
                return col
        raise KeyError(name)

    def row(self, index: int) -> dict[str, Cell]:
        return {c.name: c.cells[index] for c in self.columns}


@dataclass(frozen=True)
class ColumnStats:
    """Profile of one column, computed over non-null cells only."""

    null_count: int
    non_null_count: int
    minimum: Cell = None
    maximum: Cell = None
    mean: Cell = None
    median: Cell = None
    distinct_count: int | None = None
    top_items: list[tuple[Cell, int]] | None = None

    def to_dict(self) -> dict:
        out: dict = {
            "null_count": self.null_count,
            "non_null_count": self.non_null_count,
        }
        if self.minimum is not None:
            out["min"] = self.minimum
            out["max"] = self.maximum
            out["mean"] = self.mean
            out["median"] = self.median
        if self.distinct_count is not None:
            out["distinct_count"] = self.distinct_count
            out["top_items"] = [[v, n] for v, n in (self.top_items or [])]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ColumnStats":
        return cls(
            null_count=data["null_count"],
            non_null_count=data["non_null_count"],
            minimum=data.get("min"),
            maximum=data.get("max"),
            mean=data.get("mean"),
            median=data.get("median"),
            distinct_count=data.get("distinct_count"),
            top_items=[(v, n) for v, n in data["top_items"]] if "top_items" in data else None,
        )


def infer_column_type(cells: list[Cell]) -> DataType:
    """Assign a DataType from cell contents.

    Rule, over non-null cells: all numbers -> numeric; all ISO-8601 dates ->
    datetime; all boolean-ish tokens with at most two distinct values ->
    boolean; distinct count <= max(20, 5% of non-null) -> categorical;
    otherwise textual. An all-null column is textual.
    """
    non_null = [c for c in cells if not is_null(c)]
    if not non_null:
        return DataType.TEXTUAL
    if all(parse_number(c) is not None for c in non_null):
        return DataType.NUMERIC
    if all(parse_iso_datetime(c) is not None for c in non_null):
        return DataType.DATETIME
    tokens = {cell_text(c).strip().lower() for c in non_null}
    if tokens <= _BOOL_TOKENS and len(tokens) <= 2:
        return DataType.BOOLEAN
    distinct = len({cell_text(c) for c in non_null})
    if distinct <= max(CATEGORICAL_FLOOR, 0.05 * len(non_null)):
        return DataType.CATEGORICAL
    return DataType.TEXTUAL


def _median_pair(values: list) -> tuple:
    n = len(values)
    mid = n // 2
    if n % 2 == 1:
        return values[mid], values[mid]
    return values[mid - 1], values[mid]


def column_stats(column: Column) -> ColumnStats:
    """Compute the statistical profile for one typed column."""
    cells = column.cells
    non_null = [c for c in cells if not is_null(c)]
    null_count = len(cells) - len(non_null)
    base = dict(null_count=null_count, non_null_count=len(non_null))
    if not non_null:
        return ColumnStats(**base)

    if column.dtype is DataType.NUMERIC:
        numbers = sorted(parse_number(c) for c in non_null)
        lo, hi = _median_pair(numbers)
        median = lo if lo == hi else (lo + hi) / 2
        mean = sum(numbers) / len(numbers)
        return ColumnStats(
            **base,
            minimum=numbers[0],
            maximum=numbers[-1],
            mean=mean,
            median=median,
        )

    if column.dtype is DataType.DATETIME:
        epoch = datetime(1970, 1, 1)
        parsed = sorted((parse_iso_datetime(c), c) for c in non_null)
        stamps = [(dt - epoch).total_seconds() for dt, _ in parsed]
        lo, hi = _median_pair(stamps)
        mean_dt = epoch + timedelta(seconds=sum(stamps) / len(stamps))
        median_dt = epoch + timedelta(seconds=(lo + hi) / 2)
        return ColumnStats(
            **base,
            minimum=parsed[0][1],
            maximum=parsed[-1][1],
            mean=mean_dt.isoformat(sep=" "),
            median=median_dt.isoformat(sep=" "),
        )

    if column.dtype in (DataType.CATEGORICAL, DataType.BOOLEAN):
        counts: dict[Cell, int] = {}
        for c in non_null:
            counts[c] = counts.get(c, 0) + 1
        first_seen = {v: i for i, v in reversed(list(enumerate(counts)))}
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], first_seen[kv[0]]))
        return ColumnStats(
            **base,
            distinct_count=len(counts),
            top_items=ranked[:TOP_ITEMS],
        )

    return ColumnStats(**base)


def naive_column_stats(column: Column) -> ColumnStats:
    """Two-pass reference profile used as the testing oracle for column_stats."""
    non_null = column.non_null_cells()
    null_count = len(column.cells) - len(non_null)
    if not non_null:
        return ColumnStats(null_count=null_count, non_null_count=0)
    if column.dtype is DataType.NUMERIC:
        numbers = [parse_number(c) for c in non_null]
        return ColumnStats(
            null_count=null_count,
            non_null_count=len(non_null),
            minimum=min(numbers),
            maximum=max(numbers),
            mean=statistics.mean(numbers),
            median=statistics.median(numbers),
        )
    if column.dtype in (DataType.CATEGORICAL, DataType.BOOLEAN):
        seen: list[Cell] = []
        for c in non_null:
            if c not in seen:
                seen.append(c)
        ranked = sorted(seen, key=lambda v: (-non_null.count(v), seen.index(v)))
        return ColumnStats(
            null_count=null_count,
            non_null_count=len(non_null),
            distinct_count=len(seen),
            top_items=[(v, non_null.count(v)) for v in ranked[:TOP_ITEMS]],
        )
    return ColumnStats(null_count=null_count, non_null_count=len(non_null))


# --- loading -----------------------------------------------------------------

def _dedupe_headers(raw: list[str]) -> list[str]:
    names: list[str] = []
    seen: dict[str, int] = {}
    for i, raw_name in enumerate(raw):
        name = raw_name.strip() or f"unnamed_{i + 1}"
        if name in seen:
            seen[name] += 1
            name = f"{name}_{seen[name]}"
        seen.setdefault(name, 1)
        names.append(name)
    return names


def _coerce(cells: list[Cell], dtype: DataType) -> list[Cell]:
    if dtype is not DataType.NUMERIC:
        return [None if is_null(c) else c for c in cells]
    return [None if is_null(c) else parse_number(c) for c in cells]


def _sniff_format(path: Path, format_hint: str | None) -> str:
    if format_hint:
        hint = format_hint.lower()
        if hint not in ("csv", "tsv", "jsonl"):
            raise MalformedTableError(f"unknown format hint {format_hint!r}")
        return hint
    suffix = path.suffix.lower()
    if suffix in (".jsonl", ".ndjson"):
        return "jsonl"
    if suffix == ".tsv":
        return "tsv"
    with path.open("r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
    if first.lstrip().startswith("{"):
        return "jsonl"
    return "tsv" if first.count("\t") > first.count(",") else "csv"


def _load_delimited(path: Path, delimiter: str, ragged_tolerance: int) -> tuple[list[str], list[list[Cell]]]:
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyTableError(f"{path}: no header row")
        names = _dedupe_headers(header)
        width = len(names)
        buffers: list[list[Cell]] = [[] for _ in range(width)]
        ragged = 0
        for lineno, row in enumerate(reader, start=2):
            if not row:  # blank line
                continue
            if len(row) != width:
                ragged += 1
                if ragged > ragged_tolerance:
                    raise MalformedTableError(
                        f"{path}:{lineno}: row has {len(row)} cells, expected {width} "
                        f"({ragged} ragged rows exceeds tolerance {ragged_tolerance})"
                    )
                row = (row + [None] * width)[:width]
            for i in range(width):
                buffers[i].append(row[i])
    return names, buffers


def _load_jsonl(path: Path) -> tuple[list[str], list[list[Cell]]]:
    names: list[str] = []
    rows: list[dict] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedTableError(f"{path}:{lineno}: invalid JSON ({exc})")
            if not isinstance(record, dict):
                raise MalformedTableError(f"{path}:{lineno}: row is not an object")
            for key in record:
                if key not in names:
                    names.append(key)
            rows.append(record)
    names = _dedupe_headers(names)
    buffers: list[list[Cell]] = [[] for _ in names]
    for record in rows:
        for i, name in enumerate(names):
            value = record.get(name)
            if isinstance(value, (dict, list)):
                value = json.dumps(value, ensure_ascii=False)
            buffers[i].append(value)
    return names, buffers


def load_table(
    path: str | Path,
    format_hint: str | None = None,
    *,
    ragged_tolerance: int = 0,
) -> Table:
    """Load a delimited or line-delimited-record file into a typed Table.

    One streaming pass builds per-column buffers; duplicate header names get
    an ordinal suffix; ragged rows beyond `ragged_tolerance` abort the load.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"table file not found: {path}")
    fmt = _sniff_format(path, format_hint)
    if fmt == "jsonl":
        names, buffers = _load_jsonl(path)
    else:
        delimiter = "\t" if fmt == "tsv" else ","
        names, buffers = _load_delimited(path, delimiter, ragged_tolerance)
    row_count = len(buffers[0]) if buffers else 0
    if row_count == 0:
        raise EmptyTableError(f"{path}: zero data rows")
    columns = []
    for name, cells in zip(names, buffers):
        dtype = infer_column_type(cells)
        columns.append(Column(name=name, dtype=dtype, cells=_coerce(cells, dtype)))
    return Table(name=path.stem, columns=columns, row_count=row_count, source_path=path)
