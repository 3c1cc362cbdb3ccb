"""Shrink the global schema to a query-focused sub-schema.

Column selection keeps only the plan's columns; entity linking reconciles
query entities against actual cell values by LCS overlap; zooming packages
the result (plus extra samples for column-only sub-queries) as the refined
schema handed to code generation.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass

from ._kernels import encode_batch, encode_text, lcs_lengths
from .describer import GlobalSchema, SchemaColumn
from .planner import QueryPlan, QueryType
from .store import Column, Table, cell_text, is_null

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.6
DEFAULT_MAX_CANDIDATES = 5


@dataclass(frozen=True)
class EntityClarification:
    query_entity: str
    column_name: str
    candidates: list[tuple[str, float]]  # (cell value, overlap), overlap descending

    def to_dict(self) -> dict:
        return {
            "query_entity": self.query_entity,
            "candidates": [{"value": v, "overlap": round(o, 6)} for v, o in self.candidates],
        }


@dataclass(frozen=True)
class RefinedSchema:
    table_name: str
    table_description: str
    row_count: int
    parent_fingerprint: str
    columns: list[SchemaColumn]
    clarifications: list[EntityClarification]
    zoom_note: str

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def to_dict(self) -> dict:
        by_column: dict[str, list[EntityClarification]] = {}
        for cl in self.clarifications:
            by_column.setdefault(cl.column_name, []).append(cl)
        columns = []
        for col in self.columns:
            entry = col.to_dict()
            if col.name in by_column:
                entry["known_entities"] = [cl.to_dict() for cl in by_column[col.name]]
            columns.append(entry)
        return {
            "table_name": self.table_name,
            "table_description": self.table_description,
            "row_count": self.row_count,
            "column_count": len(self.columns),
            "parent_fingerprint": self.parent_fingerprint,
            "zoom_note": self.zoom_note,
            "columns": columns,
        }


def normalize_match_text(text: str) -> str:
    """Case-fold and collapse whitespace before any LCS comparison."""
    return " ".join(text.casefold().split())


def lcs_overlap(entity: str, value: str) -> float:
    """|LCS(entity, value)| / |entity| over normalized text, in [0, 1]."""
    ne = normalize_match_text(entity)
    if not ne:
        raise ValueError("entity must be non-empty")
    nv = normalize_match_text(value)
    if not nv:
        return 0.0
    matrix, lengths = encode_batch([nv])
    return int(lcs_lengths(encode_text(ne), matrix, lengths)[0]) / len(ne)


def link_entity(
    entity: str,
    column: Column,
    threshold: float = DEFAULT_THRESHOLD,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> EntityClarification:
    """Retrieve the column's cell values whose overlap strictly exceeds the threshold.

    Scans distinct non-null values only (duplicates cannot change membership),
    sorts by overlap descending with lexicographic tie-breaks, and truncates.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    ne = normalize_match_text(entity)
    if not ne:
        raise ValueError("entity must be non-empty")
    distinct = list(dict.fromkeys(cell_text(c) for c in column.cells if not is_null(c)))
    candidates: list[tuple[str, float]] = []
    if distinct:
        normalized = [normalize_match_text(v) for v in distinct]
        matrix, lengths = encode_batch(normalized)
        overlaps = lcs_lengths(encode_text(ne), matrix, lengths) / len(ne)
        for value, overlap in zip(distinct, overlaps):
            if overlap > threshold:
                candidates.append((value, float(overlap)))
        candidates.sort(key=lambda vo: (-vo[1], vo[0]))
    return EntityClarification(
        query_entity=entity,
        column_name=column.name,
        candidates=candidates[:max_candidates],
    )


def link_entity_naive(
    entity: str,
    column: Column,
    threshold: float = DEFAULT_THRESHOLD,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> EntityClarification:
    """Unoptimized full-scan reference (pure-python DP over every cell value)."""
    ne = normalize_match_text(entity)
    if not ne:
        raise ValueError("entity must be non-empty")
    distinct = list(dict.fromkeys(cell_text(c) for c in column.cells if not is_null(c)))
    candidates = []
    for value in distinct:
        nv = normalize_match_text(value)
        prev = [0] * (len(nv) + 1)
        for ch in ne:
            cur = [0]
            for j, vch in enumerate(nv, start=1):
                cur.append(prev[j - 1] + 1 if ch == vch else max(cur[j - 1], prev[j]))
            prev = cur
        overlap = prev[-1] / len(ne)
        if overlap > threshold:
            candidates.append((value, overlap))
    candidates.sort(key=lambda vo: (-vo[1], vo[0]))
    return EntityClarification(query_entity=entity, column_name=column.name, candidates=candidates[:max_candidates])


def _draw_samples(column: Column, k_zoom: int, seed: int) -> list:
    non_null = column.non_null_cells()
    rng = random.Random(f"{seed}:zoom:{column.name}")
    return rng.sample(non_null, min(k_zoom, len(non_null)))


def zoom(
    schema: GlobalSchema,
    plan: QueryPlan,
    table: Table,
    *,
    threshold: float = DEFAULT_THRESHOLD,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
    k_zoom: int = 6,
    seed: int = 0,
) -> RefinedSchema:
    """Retain the plan's columns, expand samples, and attach entity links.

    Column-only sub-queries get their retained columns re-sampled up to
    `k_zoom` values; row-column sub-queries additionally contribute one
    clarification per (entity, column) match. If the plan somehow retains
    nothing, the full schema is returned with a warning instead of an empty
    one.
    """
    relevant = set(plan.all_relevant_columns())
    retained_names = [n for n in schema.column_names if n in relevant]
    total = len(schema.columns)
    fallback = not retained_names
    if fallback:
        logger.warning("zoom fallback: plan retained no columns; keeping the full schema")
        retained_names = list(schema.column_names)

    expand = set()
    if not fallback:
        for sub in plan.sub_queries:
            if sub.qtype is QueryType.COLUMN_ONLY:
                expand.update(sub.relevant_columns)

    columns = []
    for col in schema.columns:
        if col.name not in retained_names:
            continue
        samples = col.samples
        if col.name in expand and table is not None:
            samples = _draw_samples(table.column(col.name), k_zoom, seed)
        columns.append(
            SchemaColumn(name=col.name, dtype=col.dtype, stats=col.stats, samples=samples, meaning=col.meaning)
        )

    clarifications: list[EntityClarification] = []
    if not fallback:
        seen: set[tuple[str, str]] = set()
        for sub in plan.sub_queries:
            if sub.qtype is not QueryType.ROW_COLUMN:
                continue
            for entity, column_name in sub.row_matches:
                if (entity, column_name) in seen:
                    continue
                seen.add((entity, column_name))
                clarifications.append(
                    link_entity(entity, table.column(column_name), threshold, max_candidates)
                )

    removed = total - len(columns)
    if fallback:
        note = f"zoom fallback: plan matched no schema columns, all {total} columns kept"
    else:
        note = f"retained {len(columns)} of {total} columns; removed {removed} query-irrelevant columns"
    return RefinedSchema(
        table_name=schema.table_name,
        table_description=schema.table_description,
        row_count=schema.row_count,
        parent_fingerprint=schema.fingerprint,
        columns=columns,
        clarifications=clarifications,
        zoom_note=note,
    )
