"""Builders for scripted model responses and fixture tables."""

from __future__ import annotations

import json
import random
from pathlib import Path


def annotation_response(column_names: list[str], table_description: str = "A test table.") -> str:
    return json.dumps({
        "table_description": table_description,
        "column_description": [
            {"column_name": name, "specific_meaning": f"Holds the {name} value."}
            for name in column_names
        ],
    })


def router_response(*subs: dict) -> str:
    """Each sub: {"type": ..., "columns": [...], "matches": [(entity, column), ...]}"""
    payload = []
    for sub in subs:
        payload.append({
            "type": sub.get("type", "column-only retrieval"),
            "relevant_column_list": sub["columns"],
            "row_match_list": [{e: c} for e, c in sub.get("matches", [])],
        })
    return json.dumps(payload)


def pot_response(code: str, thought: str = "Read the table and compute the value.") -> str:
    return json.dumps({"code_thought": thought, "code": code})


def react_done(answer: str) -> str:
    return f"Thought: the observations already answer the question.\nResponse: {answer}"


def react_more(next_query: str) -> str:
    return f"Thought: one more value is needed first.\nQuery: {next_query}"


def print_code(value: str) -> str:
    return f"print({value!r})"


def sum_column_code(table_path: Path | str, column: str) -> str:
    return (
        "import csv\n"
        f"with open({str(table_path)!r}, encoding='utf-8') as fh:\n"
        "    rows = list(csv.DictReader(fh))\n"
        f"print(sum(float(r[{column!r}]) for r in rows))\n"
    )


def write_csv(path: Path, header: list[str], rows: list[list]) -> Path:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(c) for c in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def make_people_csv(path: Path) -> Path:
    return write_csv(
        path,
        ["name", "age", "city", "price"],
        [
            ["Alice", 34, "Lisbon", "10.5"],
            ["Bob", 28, "Porto", "3.25"],
            ["Carol", 41, "Lisbon", "7.0"],
            ["Dan", 55, "Faro", "2.25"],
        ],
    )


def make_wide_csv(path: Path, rows: int, columns: int = 20, seed: int = 7) -> Path:
    """Deterministic wide fixture: half numeric, half categorical columns.

    The category vocabulary is fixed (12 values) so the inferred dtype is
    stable across row scales.
    """
    rng = random.Random(seed)
    header = [f"col_{i:02d}" for i in range(columns)]
    vocabulary = [f"{base}{i}" for base in ("alpha", "beta", "gamma", "delta") for i in range(3)]
    body = []
    for r in range(rows):
        row = []
        for c in range(columns):
            if c % 2 == 0:
                row.append(f"{rng.uniform(0, 1000):.3f}")
            else:
                row.append(vocabulary[rng.randrange(len(vocabulary))])
        body.append(row)
    return write_csv(path, header, body)
