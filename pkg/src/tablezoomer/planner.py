"""Parse a question against the global schema into typed sub-queries.

Column-only sub-queries are answerable from aggregates; row-column
sub-queries additionally carry (entity, column) pairs for row filtering.
Validation normalizes column names against the schema and drops
hallucinated ones rather than failing the whole question.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

from . import prompts
from .describer import GlobalSchema
from .errors import MalformedPlanError, PlanValidationError
from .llm import ChatRequest, LlmClient
from .serialize import serialize_schema
from .util import REASK_NOTE, extract_json

logger = logging.getLogger(__name__)


class QueryType(str, Enum):
    COLUMN_ONLY = "column_only"
    ROW_COLUMN = "row_column"


@dataclass(frozen=True)
class SubQuery:
    qtype: QueryType
    relevant_columns: list[str]
    row_matches: list[tuple[str, str]]  # (entity text, column name)

    def to_dict(self) -> dict:
        return {
            "type": self.qtype.value,
            "relevant_columns": list(self.relevant_columns),
            "row_matches": [[e, c] for e, c in self.row_matches],
        }


@dataclass(frozen=True)
class QueryPlan:
    original_query: str
    sub_queries: list[SubQuery]

    def all_relevant_columns(self) -> list[str]:
        seen: list[str] = []
        for sub in self.sub_queries:
            for name in sub.relevant_columns:
                if name not in seen:
                    seen.append(name)
        return seen

    def to_dict(self) -> dict:
        return {
            "original_query": self.original_query,
            "sub_queries": [s.to_dict() for s in self.sub_queries],
        }


def _parse_router_response(text: str, query: str) -> QueryPlan:
    payload = extract_json(text)
    if isinstance(payload, dict):
        payload = [payload]
    if not isinstance(payload, list) or not payload:
        raise ValueError("router response must be a non-empty JSON array")
    subs = []
    for item in payload:
        if not isinstance(item, dict):
            raise ValueError("sub-query entries must be objects")
        type_text = str(item.get("type", "")).lower()
        if "row-column" in type_text:
            qtype = QueryType.ROW_COLUMN
        elif "column-only" in type_text:
            qtype = QueryType.COLUMN_ONLY
        else:
            raise ValueError(f"unknown sub-query type {item.get('type')!r}")
        columns = item.get("relevant_column_list")
        if not isinstance(columns, list) or not columns:
            raise ValueError("relevant_column_list must be a non-empty list")
        matches: list[tuple[str, str]] = []
        for pair in item.get("row_match_list", []) or []:
            if isinstance(pair, dict):
                for entity, column in pair.items():
                    matches.append((str(entity), str(column)))
            elif isinstance(pair, (list, tuple)) and len(pair) == 2:
                matches.append((str(pair[0]), str(pair[1])))
            else:
                raise ValueError("row_match_list entries must map entity -> column")
        subs.append(SubQuery(qtype=qtype, relevant_columns=[str(c) for c in columns], row_matches=matches))
    return QueryPlan(original_query=query, sub_queries=subs)


def plan(query: str, schema: GlobalSchema, llm: LlmClient) -> QueryPlan:
    """Route the question through the query-router prompt and validate it."""
    prompt = prompts.render("query_router", table_schema=serialize_schema(schema), query=query)
    messages = [{"role": "user", "content": prompt}]
    response = llm.chat(ChatRequest(messages=list(messages)))
    try:
        parsed = _parse_router_response(response, query)
    except ValueError:
        messages += [
            {"role": "assistant", "content": response},
            {"role": "user", "content": REASK_NOTE},
        ]
        retry = llm.chat(ChatRequest(messages=messages))
        try:
            parsed = _parse_router_response(retry, query)
        except ValueError as exc:
            raise MalformedPlanError(f"plan unparseable after re-ask: {exc}")
    return validate_plan(parsed, schema)


def validate_plan(plan: QueryPlan, schema: GlobalSchema) -> QueryPlan:
    """Normalize column names against the schema; drop what cannot resolve.

    Exact match wins, then case-insensitive match; anything else is dropped
    with a warning. A sub-query left with no columns fails validation. A
    row-column sub-query that loses every entity match demotes to
    column-only (and a column-only one carrying matches promotes), keeping
    the type consistent with the surviving evidence.
    """
    exact = {name: name for name in schema.column_names}
    folded = {}
    for name in schema.column_names:
        folded.setdefault(name.lower(), name)

    def resolve(name: str) -> str | None:
        if name in exact:
            return name
        return folded.get(name.strip().lower())

    validated: list[SubQuery] = []
    for i, sub in enumerate(plan.sub_queries):
        columns: list[str] = []
        for raw in sub.relevant_columns:
            resolved = resolve(raw)
            if resolved is None:
                logger.warning("sub-query %d: dropping unknown column %r", i, raw)
            elif resolved not in columns:
                columns.append(resolved)
        if not columns:
            raise PlanValidationError(
                f"sub-query {i} has no valid columns (got {sub.relevant_columns!r})"
            )
        matches: list[tuple[str, str]] = []
        for entity, raw_col in sub.row_matches:
            resolved = resolve(raw_col)
            if resolved is None:
                logger.warning("sub-query %d: dropping row match %r -> unknown column %r", i, entity, raw_col)
                continue
            if resolved not in columns:
                columns.append(resolved)
            matches.append((entity, resolved))
        qtype = QueryType.ROW_COLUMN if matches else QueryType.COLUMN_ONLY
        if qtype is not sub.qtype:
            logger.warning("sub-query %d: reclassified %s -> %s", i, sub.qtype.value, qtype.value)
        validated.append(SubQuery(qtype=qtype, relevant_columns=columns, row_matches=matches))
    return QueryPlan(original_query=plan.original_query, sub_queries=validated)
