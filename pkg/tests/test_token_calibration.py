"""Token-proxy behavior: the pluggable hook, and calibration when possible."""

from __future__ import annotations

import importlib.util

import pytest

from tablezoomer import prompts
from tablezoomer.errors import BudgetExceededError
from tablezoomer.llm import ChatRequest, ScriptedClient, token_estimate
from tablezoomer.serialize import serialize_schema
from tablezoomer.describer import annotate_schema, build_initial_schema
from tablezoomer.store import load_table

from helpers import annotation_response, make_people_csv


def fixture_prompts(tmp_path) -> list[str]:
    """Representative prompt texts rendered from the real templates."""
    table = load_table(make_people_csv(tmp_path / "people.csv"))
    llm = ScriptedClient([annotation_response(table.column_names)])
    schema = annotate_schema(build_initial_schema(table, 3, 2, 0), llm, fingerprint="0" * 64)
    schema_text = serialize_schema(schema)
    return [
        prompts.render("table_describer", table_name="people", table_schema=schema_text),
        prompts.render("query_router", table_schema=schema_text, query="mean price per city?"),
        prompts.render("pot", question="mean price per city?", table_path="people.csv",
                       csv_data=schema_text),
        prompts.render("react", table_schema=schema_text, query="mean price per city?",
                       his_observations="Query: mean price per city?\nObservation: 5.75"),
    ]


def test_custom_estimator_hook_drives_budget():
    client = ScriptedClient(["ok"], token_budget=5)
    client.token_estimator = lambda text: 1  # everything is tiny now
    assert client.chat(ChatRequest.user("x" * 10_000)) == "ok"

    strict = ScriptedClient(["never"], token_budget=5)
    strict.token_estimator = lambda text: 10_000
    with pytest.raises(BudgetExceededError):
        strict.chat(ChatRequest.user("tiny"))


@pytest.mark.skipif(
    importlib.util.find_spec("tiktoken") is None,
    reason="no exact tokenizer importable in this environment",
)
def test_proxy_within_25_percent_of_exact_tokenizer(tmp_path):
    import tiktoken

    encoder = tiktoken.get_encoding("cl100k_base")
    for prompt in fixture_prompts(tmp_path):
        exact = len(encoder.encode(prompt))
        proxy = token_estimate(prompt)
        assert abs(proxy - exact) / exact < 0.25
