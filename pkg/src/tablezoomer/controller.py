"""The reasoning loop: describe once, then cycle plan/zoom/generate/execute
with reflection until the answer is ready or the round cap is hit.

Per-round faults (bad plans, unparseable programs, failed executions, even a
missing runner) degrade into recorded observations so reflection can reroute;
only a failed describe phase or a dead LLM aborts the question. The loop is
hard-capped at `k_max` rounds regardless of what the model says.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import prompts
from .codegen import GeneratedProgram, generate, repair
from .describer import GlobalSchema, describe_once
from .errors import (
    AnswerCoercionFailed,
    BudgetExceededError,
    DescribeFailedError,
    LlmUnavailableError,
    MalformedGenerationError,
    MalformedPlanError,
    PlanValidationError,
    RepairBudgetExhausted,
    TableZoomerError,
)
from .executor import ExecutionResult, ExecutorGateway
from .llm import CallBudget, ChatRequest, CountingClient, LlmClient
from .planner import QueryPlan, plan as plan_query
from .refiner import RefinedSchema, zoom
from .serialize import serialize_schema
from .store import Table, load_table

logger = logging.getLogger(__name__)

ANSWER_TYPES = ("boolean", "category", "number", "list_category", "list_number")
COMPLETION_PHRASE = "i have completed the task"

_RESPONSE_LINE = re.compile(r"^\s*[*\-#> ]*response\s*[::]\s*(.*)$", re.IGNORECASE | re.MULTILINE)
_QUERY_LINE = re.compile(
    r"^\s*[*\-#> ]*(?:further query|next query|query)\s*[::]\s*(.+)$", re.IGNORECASE | re.MULTILINE
)
_SCI_NOTATION = re.compile(r"[eE][+-]?\d+")
_NUMBER_TOKEN = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)$")

ANSWER_TYPE_REQUIREMENTS = {
    "boolean": 'boolean: "True" or "False"',
    "category": "category: a single categorical value taken from the data",
    "number": "number: a specific numeric value, without scientific notation",
    "list_category": "list[category]: a comma-separated list of categorical values",
    "list_number": "list[number]: a comma-separated list of numeric values, without scientific notation",
}


@dataclass
class ThoughtRecord:
    """One reasoning cycle: the query, its plan, the program, the observation."""

    round: int
    query: str
    plan: QueryPlan | None
    program: GeneratedProgram | None
    result: ExecutionResult | None
    fault: str = ""
    columns_retained: int | None = None
    columns_total: int | None = None

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "query": self.query,
            "plan": self.plan.to_dict() if self.plan else None,
            "program": self.program.to_dict() if self.program else None,
            # wall_time is excluded: serialized traces must be byte-stable
            "result": self.result.to_dict(include_wall_time=False) if self.result else None,
            "fault": self.fault,
            "columns_retained": self.columns_retained,
            "columns_total": self.columns_total,
        }


@dataclass(frozen=True)
class Reflection:
    complete: bool
    further_query: str | None
    rationale: str


@dataclass
class FinalAnswer:
    value: object
    answer_type: str
    trace: list[ThoughtRecord] = field(default_factory=list)
    rounds_used: int = 0
    llm_calls: int = 0

    def to_dict(self) -> dict:
        return {
            "answer": self.value,
            "answer_type": self.answer_type,
            "rounds_used": self.rounds_used,
            "llm_calls": self.llm_calls,
            "trace": [r.to_dict() for r in self.trace],
        }


def render_records(records: list[ThoughtRecord]) -> str:
    """Serialize thinking records into the Query/Thought/Action/Observation form."""
    blocks = []
    for rec in records:
        lines = [f"Query: {rec.query}"]
        if rec.plan is not None:
            parts = []
            for sub in rec.plan.sub_queries:
                entry = f"{sub.qtype.value} over columns {sub.relevant_columns}"
                if sub.row_matches:
                    entry += f" with row matches {sub.row_matches}"
                parts.append(entry)
            lines.append("Thought: " + "; ".join(parts))
        if rec.program is not None:
            lines.append(f"Action: {rec.program.code_thought}")
            lines.append("```python\n" + rec.program.source + "\n```")
        if rec.result is not None:
            if rec.result.status == "ok":
                lines.append(f"Observation: {rec.result.stdout.strip()}")
            else:
                lines.append(f"Observation: execution {rec.result.status}: {rec.result.error_trace.strip()}")
        elif rec.fault:
            lines.append(f"Observation: {rec.fault}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def reflect(
    schema: GlobalSchema,
    original_query: str,
    records: list[ThoughtRecord],
    llm: LlmClient,
) -> Reflection:
    """Decide whether the gathered observations answer the question.

    A `Response:` section (or an explicit completion phrase) means done; a
    proposed further query continues the loop; anything ambiguous defaults
    to done, because burning rounds on unparseable reflections buys nothing.
    """
    if not records:
        raise ValueError("reflect requires at least one thinking record")
    prompt = prompts.render(
        "react",
        table_schema=serialize_schema(schema),
        query=original_query,
        his_observations=render_records(records),
    )
    response = llm.chat(ChatRequest.user(prompt))
    match = _RESPONSE_LINE.search(response)
    if match is not None:
        rest = response[match.end():].strip()
        rationale = match.group(1).strip() or rest.split("\n", 1)[0].strip()
        return Reflection(complete=True, further_query=None, rationale=rationale or "final response given")
    if COMPLETION_PHRASE in response.lower():
        return Reflection(complete=True, further_query=None, rationale="completion signaled")
    queries = _QUERY_LINE.findall(response)
    for candidate in reversed(queries):
        text = candidate.strip()
        if text and text != original_query:
            return Reflection(complete=False, further_query=text, rationale="further query proposed")
    return Reflection(complete=True, further_query=None, rationale="ambiguous reflection; formatting what exists")


def coerce_answer(raw: str, answer_type: str):
    """Coerce formatter output into the requested answer type or raise ValueError."""
    text = raw.strip()
    if answer_type == "boolean":
        token = text.strip(" .!\"'").lower()
        if token in ("true", "yes"):
            return True
        if token in ("false", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if answer_type == "number":
        return _coerce_number(text)
    if answer_type == "category":
        if not text:
            raise ValueError("empty category answer")
        return text
    if answer_type in ("list_category", "list_number"):
        items = _split_list(text)
        if not items:
            raise ValueError(f"empty list answer: {raw!r}")
        if answer_type == "list_number":
            return [_coerce_number(item) for item in items]
        return items
    raise ValueError(f"unknown answer type {answer_type!r}")


def _coerce_number(text: str):
    token = text.strip().strip("\"'").rstrip(".")
    if _SCI_NOTATION.search(token):
        raise ValueError(f"scientific notation rejected: {text!r}")
    token = token.replace(",", "")
    if not _NUMBER_TOKEN.match(token):
        raise ValueError(f"not a number: {text!r}")
    return int(token) if re.match(r"^[+-]?\d+$", token) else float(token)


def _split_list(text: str) -> list[str]:
    body = text.strip()
    if body.startswith("[") and body.endswith("]"):
        body = body[1:-1]
    items = [piece.strip().strip("\"'") for piece in re.split(r"[,;\n]+", body)]
    return [item for item in items if item]


def format_answer(
    query: str,
    records: list[ThoughtRecord],
    answer_type: str,
    llm: LlmClient,
    schema: GlobalSchema,
):
    """Produce the typed final answer from the accumulated records."""
    if not records:
        raise ValueError("format_answer requires at least one thinking record")
    if answer_type not in ANSWER_TYPES:
        raise ValueError(f"answer_type must be one of {ANSWER_TYPES}")
    prompt = prompts.render(
        "answer_formatter",
        query=query,
        requirements=ANSWER_TYPE_REQUIREMENTS[answer_type],
        table_schema=serialize_schema(schema),
        thought_process=render_records(records),
    )
    messages = [{"role": "user", "content": prompt}]
    response = llm.chat(ChatRequest(messages=list(messages)))
    try:
        return coerce_answer(response, answer_type)
    except ValueError:
        messages += [
            {"role": "assistant", "content": response},
            {
                "role": "user",
                "content": (
                    f"The answer could not be parsed. Reply with only the final answer as "
                    f"{ANSWER_TYPE_REQUIREMENTS[answer_type]}."
                ),
            },
        ]
        retry = llm.chat(ChatRequest(messages=messages))
        try:
            return coerce_answer(retry, answer_type)
        except ValueError as exc:
            raise AnswerCoercionFailed(f"answer not coercible to {answer_type}: {exc}")


@dataclass
class ControllerConfig:
    k: int = 3
    j: int = 2
    seed: int = 0
    cache_dir: str = ".schema_cache"
    threshold: float = 0.6
    max_candidates: int = 5
    k_zoom: int = 6
    max_repairs: int = 2
    k_max: int = 5
    timeout: float = 30.0


def answer_question(
    table_path: str | Path,
    query: str,
    answer_type: str,
    config: ControllerConfig,
    llm: LlmClient,
    gateway: ExecutorGateway,
    *,
    table: Table | None = None,
) -> FinalAnswer:
    """Run the full reasoning workflow for one question and type the answer."""
    meter = CountingClient(llm)
    table_path = Path(table_path)
    if table is None:
        try:
            table = load_table(table_path)
        except TableZoomerError as exc:
            raise DescribeFailedError(f"cannot load table: {exc}")
    try:
        schema = describe_once(
            table_path, config.cache_dir, config.k, config.j, config.seed, meter, table=table
        )
    except LlmUnavailableError:
        raise
    except TableZoomerError as exc:
        raise DescribeFailedError(f"schema construction failed: {exc}")

    records: list[ThoughtRecord] = []
    current_query = query
    rounds_used = 0
    for round_number in range(1, config.k_max + 1):
        rounds_used = round_number
        record = ThoughtRecord(round=round_number, query=current_query, plan=None, program=None, result=None)
        try:
            record.plan = plan_query(current_query, schema, meter)
        except (MalformedPlanError, PlanValidationError, BudgetExceededError) as exc:
            record.fault = f"planning failed: {exc}"
        if record.plan is not None:
            refined = zoom(
                schema,
                record.plan,
                table,
                threshold=config.threshold,
                max_candidates=config.max_candidates,
                k_zoom=config.k_zoom,
                seed=config.seed,
            )
            record.columns_retained = len(refined.columns)
            record.columns_total = len(schema.columns)
            budget = CallBudget(1 + config.max_repairs)
            try:
                record.program = generate(current_query, refined, table_path, meter, budget=budget)
            except (MalformedGenerationError, BudgetExceededError) as exc:
                record.fault = f"code generation failed: {exc}"
            if record.program is not None:
                record.result = _execute_with_repairs(
                    record, refined, current_query, config, meter, gateway, budget
                )
        records.append(record)

        reflection = reflect(schema, query, records, meter)
        if reflection.complete or not reflection.further_query:
            break
        current_query = reflection.further_query

    value = format_answer(query, records, answer_type, meter, schema)
    return FinalAnswer(
        value=value,
        answer_type=answer_type,
        trace=records,
        rounds_used=rounds_used,
        llm_calls=meter.calls,
    )


def _execute_with_repairs(
    record: ThoughtRecord,
    refined: RefinedSchema,
    query: str,
    config: ControllerConfig,
    llm: LlmClient,
    gateway: ExecutorGateway,
    budget: CallBudget,
) -> ExecutionResult | None:
    program = record.program
    try:
        result = gateway.execute(program, timeout=config.timeout)
    except TableZoomerError as exc:
        record.fault = f"execution unavailable: {exc}"
        return None
    while result.status != "ok" and program.attempt <= config.max_repairs and budget.remaining > 0:
        try:
            program = repair(
                program, result.error_trace, query, refined, llm,
                max_repairs=config.max_repairs, budget=budget,
            )
        except (RepairBudgetExhausted, MalformedGenerationError, BudgetExceededError) as exc:
            logger.info("repair chain stopped: %s", exc)
            break
        record.program = program
        try:
            result = gateway.execute(program, timeout=config.timeout)
        except TableZoomerError as exc:
            record.fault = f"execution unavailable: {exc}"
            return result
    return result
