"""Generate executable data-frame programs from the refined schema.

The generation prompt embeds only the refined schema text, never the
verbalized table, so prompt size is independent of row count. Failed
executions come back through `repair` with the full error trace attached.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from . import prompts
from .errors import MalformedGenerationError, RepairBudgetExhausted
from .llm import CallBudget, ChatRequest, LlmClient
from .refiner import RefinedSchema
from .serialize import serialize_schema
from .util import REASK_NOTE, extract_json

DEFAULT_MAX_REPAIRS = 2


@dataclass(frozen=True)
class GeneratedProgram:
    code_thought: str
    source: str
    table_path: str
    attempt: int = 1

    def to_dict(self) -> dict:
        return {
            "code_thought": self.code_thought,
            "source": self.source,
            "table_path": self.table_path,
            "attempt": self.attempt,
        }


def _parse_program(text: str) -> tuple[str, str]:
    payload = extract_json(text, expect=dict)
    if "code_thought" not in payload or "code" not in payload:
        raise ValueError("response must carry both code_thought and code")
    thought = str(payload["code_thought"])
    code = str(payload["code"])
    if not code.strip():
        raise ValueError("code must be non-empty")
    return thought, code


def _chat_for_program(
    prompt: str,
    llm: LlmClient,
    budget: CallBudget | None,
    exhausted_error: Exception,
) -> tuple[str, str]:
    messages = [{"role": "user", "content": prompt}]
    if budget is not None and not budget.take():
        raise exhausted_error
    response = llm.chat(ChatRequest(messages=list(messages)))
    try:
        return _parse_program(response)
    except ValueError:
        messages += [
            {"role": "assistant", "content": response},
            {"role": "user", "content": REASK_NOTE},
        ]
        if budget is not None and not budget.take():
            raise MalformedGenerationError("malformed program and no call budget left to re-ask")
        retry = llm.chat(ChatRequest(messages=messages))
        try:
            return _parse_program(retry)
        except ValueError as exc:
            raise MalformedGenerationError(f"program unparseable after re-ask: {exc}")


def generate(
    query: str,
    refined: RefinedSchema,
    table_path: str | Path,
    llm: LlmClient,
    *,
    budget: CallBudget | None = None,
) -> GeneratedProgram:
    """First program attempt for a question against the refined schema."""
    prompt = prompts.render(
        "pot",
        question=query,
        table_path=str(table_path),
        csv_data=serialize_schema(refined),
    )
    thought, code = _chat_for_program(
        prompt, llm, budget, MalformedGenerationError("no call budget left to generate")
    )
    return GeneratedProgram(code_thought=thought, source=code, table_path=str(table_path), attempt=1)


def repair(
    program: GeneratedProgram,
    error_trace: str,
    query: str,
    refined: RefinedSchema,
    llm: LlmClient,
    *,
    max_repairs: int = DEFAULT_MAX_REPAIRS,
    budget: CallBudget | None = None,
) -> GeneratedProgram:
    """Feed the failing code and its error trace back for a corrected attempt."""
    if not error_trace.strip():
        raise ValueError("repair requires a non-empty error trace")
    if program.attempt > max_repairs:
        raise RepairBudgetExhausted(
            f"attempt {program.attempt + 1} would exceed {1 + max_repairs} total attempts"
        )
    prompt = prompts.render(
        "repair",
        question=query,
        table_path=program.table_path,
        csv_data=serialize_schema(refined),
        previous_code=program.source,
        error_trace=error_trace,
    )
    thought, code = _chat_for_program(
        prompt, llm, budget, RepairBudgetExhausted("no call budget left to repair")
    )
    return GeneratedProgram(
        code_thought=thought,
        source=code,
        table_path=program.table_path,
        attempt=program.attempt + 1,
    )
