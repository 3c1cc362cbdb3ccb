"""Build the global table schema once per table and cache it by content hash.

The schema carries column types, statistics, K sampled cell values per
column, J sampled full rows, and model-written semantic annotations. It is
the table's stand-in for every later prompt, so its serialized size must
stay flat as the table grows.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path

from . import prompts
from .errors import MalformedAnnotationError
from .llm import ChatRequest, LlmClient
from .serialize import serialize_schema
from .store import Cell, ColumnStats, Table, column_stats, load_table
from .util import REASK_NOTE, extract_json

logger = logging.getLogger(__name__)

MISSING_MEANING = "(no description)"

# one writer per table fingerprint within this process
_FINGERPRINT_LOCKS: dict[str, threading.Lock] = {}
_LOCKS_GUARD = threading.Lock()


@dataclass(frozen=True)
class SchemaColumn:
    name: str
    dtype: str
    stats: ColumnStats
    samples: list[Cell]
    meaning: str | None = None

    def to_dict(self) -> dict:
        out: dict = {"name": self.name, "dtype": self.dtype}
        if self.meaning is not None:
            out["specific_meaning"] = self.meaning
        out["stats"] = self.stats.to_dict()
        out["samples"] = list(self.samples)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SchemaColumn":
        return cls(
            name=data["name"],
            dtype=data["dtype"],
            stats=ColumnStats.from_dict(data["stats"]),
            samples=list(data["samples"]),
            meaning=data.get("specific_meaning"),
        )


@dataclass(frozen=True)
class InitialSchema:
    table_name: str
    row_count: int
    column_count: int
    columns: list[SchemaColumn]
    row_samples: list[dict]

    def to_dict(self) -> dict:
        return {
            "table_name": self.table_name,
            "row_count": self.row_count,
            "column_count": self.column_count,
            "columns": [c.to_dict() for c in self.columns],
            "row_samples": self.row_samples,
        }


@dataclass(frozen=True)
class GlobalSchema:
    table_name: str
    table_description: str
    row_count: int
    column_count: int
    fingerprint: str
    columns: list[SchemaColumn]
    row_samples: list[dict]

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> SchemaColumn:
        for col in self.columns:
            if col.name == name:
                return col
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "table_name": self.table_name,
            "table_description": self.table_description,
            "row_count": self.row_count,
            "column_count": self.column_count,
            "fingerprint": self.fingerprint,
            "columns": [c.to_dict() for c in self.columns],
            "row_samples": self.row_samples,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GlobalSchema":
        return cls(
            table_name=data["table_name"],
            table_description=data["table_description"],
            row_count=data["row_count"],
            column_count=data["column_count"],
            fingerprint=data["fingerprint"],
            columns=[SchemaColumn.from_dict(c) for c in data["columns"]],
            row_samples=list(data["row_samples"]),
        )


def table_fingerprint(path: str | Path) -> str:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"table file not found: {path}")
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_initial_schema(table: Table, k: int, j: int, seed: int) -> InitialSchema:
    """Profile every column and draw K column samples and J row samples.

    Sampling is uniform without replacement and a pure function of
    (table, k, j, seed): one RNG consumed in column order, then rows.
    """
    if k < 0 or j < 0:
        raise ValueError("k and j must be non-negative")
    rng = random.Random(seed)
    columns = []
    for col in table.columns:
        non_null = col.non_null_cells()
        samples = rng.sample(non_null, min(k, len(non_null))) if k else []
        columns.append(
            SchemaColumn(name=col.name, dtype=col.dtype.value, stats=column_stats(col), samples=samples)
        )
    indices = rng.sample(range(table.row_count), min(j, table.row_count)) if j else []
    row_samples = [table.row(i) for i in indices]
    return InitialSchema(
        table_name=table.name,
        row_count=table.row_count,
        column_count=len(table.columns),
        columns=columns,
        row_samples=row_samples,
    )


def _parse_annotation(text: str) -> tuple[str, dict[str, str]]:
    payload = extract_json(text, expect=dict)
    if "table_description" not in payload or "column_description" not in payload:
        raise ValueError("missing table_description/column_description")
    description = str(payload["table_description"])
    meanings: dict[str, str] = {}
    for entry in payload["column_description"]:
        if not isinstance(entry, dict) or "column_name" not in entry:
            raise ValueError("column_description entries need column_name")
        meanings[str(entry["column_name"])] = str(entry.get("specific_meaning", "")).strip()
    return description, meanings


def annotate_schema(initial: InitialSchema, llm: LlmClient, *, fingerprint: str = "") -> GlobalSchema:
    """Ask the model for table/column descriptions and attach them.

    Columns the response skips get a placeholder meaning; columns the
    response invents are dropped with a warning. One re-ask on unparseable
    JSON, then MalformedAnnotationError.
    """
    prompt = prompts.render(
        "table_describer",
        table_name=initial.table_name,
        table_schema=serialize_schema(initial),
    )
    messages = [{"role": "user", "content": prompt}]
    response = llm.chat(ChatRequest(messages=list(messages)))
    try:
        description, meanings = _parse_annotation(response)
    except ValueError:
        messages += [
            {"role": "assistant", "content": response},
            {"role": "user", "content": REASK_NOTE},
        ]
        retry = llm.chat(ChatRequest(messages=messages))
        try:
            description, meanings = _parse_annotation(retry)
        except ValueError as exc:
            raise MalformedAnnotationError(f"annotation unparseable after re-ask: {exc}")

    known = {c.name for c in initial.columns}
    for extra in set(meanings) - known:
        logger.warning("annotation names unknown column %r; dropping it", extra)
    columns = [
        SchemaColumn(
            name=c.name,
            dtype=c.dtype,
            stats=c.stats,
            samples=c.samples,
            meaning=meanings.get(c.name) or MISSING_MEANING,
        )
        for c in initial.columns
    ]
    return GlobalSchema(
        table_name=initial.table_name,
        table_description=description,
        row_count=initial.row_count,
        column_count=initial.column_count,
        fingerprint=fingerprint,
        columns=columns,
        row_samples=initial.row_samples,
    )


def _cache_path(cache_dir: Path, fingerprint: str) -> Path:
    return cache_dir / f"{fingerprint}.json"


def _load_cached(path: Path, fingerprint: str) -> GlobalSchema | None:
    if not path.is_file():
        return None
    try:
        schema = GlobalSchema.from_dict(json.loads(path.read_text(encoding="utf-8")))
        if schema.fingerprint != fingerprint:
            raise ValueError("fingerprint mismatch inside cache document")
        return schema
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        logger.warning("schema cache %s unusable (%s); rebuilding", path, exc)
        return None


def _atomic_write(path: Path, text: str) -> None:
    # readers must never see a partial document; last complete write wins
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def describe_once(
    table_path: str | Path,
    cache_dir: str | Path,
    k: int,
    j: int,
    seed: int,
    llm: LlmClient,
    *,
    table: Table | None = None,
) -> GlobalSchema:
    """Return the table's global schema, building and annotating at most once.

    The cache is keyed by content hash, so renamed or copied files reuse
    their annotations and a cache hit performs zero LLM calls.
    """
    table_path = Path(table_path)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    fingerprint = table_fingerprint(table_path)
    path = _cache_path(cache_dir, fingerprint)

    cached = _load_cached(path, fingerprint)
    if cached is not None:
        return cached

    with _LOCKS_GUARD:
        lock = _FINGERPRINT_LOCKS.setdefault(fingerprint, threading.Lock())
    with lock:
        cached = _load_cached(path, fingerprint)
        if cached is not None:
            return cached
        if table is None:
            table = load_table(table_path)
        initial = build_initial_schema(table, k, j, seed)
        schema = annotate_schema(initial, llm, fingerprint=fingerprint)
        _atomic_write(path, serialize_schema(schema))
        return schema
