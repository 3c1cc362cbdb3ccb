"""Benchmark harness: corpora, normalized exact-match scoring, strategy runs.

Three strategies are runnable side by side: the schema-zooming agent, a
plain program-generation baseline over the full markdown table, and a
textual chain-of-thought baseline. Per-example failures score as incorrect
rather than being excluded, so reported accuracy is honest end-to-end.
"""

from __future__ import annotations

import json
import logging
import math
import re
import time
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import prompts
from .codegen import GeneratedProgram
from .controller import (
    ControllerConfig,
    ThoughtRecord,
    answer_question,
    format_answer,
)
from .describer import describe_once
from .errors import CorpusLoadFailed, TableZoomerError
from .executor import ExecutorGateway
from .llm import ChatRequest, CountingClient, LlmClient
from .serialize import TableFormat, serialize_table
from .store import load_table
from .util import extract_json

logger = logging.getLogger(__name__)

STRATEGIES = ("tablezoomer", "pot_baseline", "tcot_baseline")
NUMBER_REL_TOL = 1e-6

_TYPE_ALIASES = {
    "boolean": "boolean",
    "bool": "boolean",
    "category": "category",
    "number": "number",
    "list[category]": "list_category",
    "list_category": "list_category",
    "list[number]": "list_number",
    "list_number": "list_number",
}


@dataclass(frozen=True)
class QaExample:
    table_path: Path
    question: str
    gold_answer: str | list
    answer_type: str
    dataset_tag: str = ""


@dataclass
class ExampleRecord:
    index: int
    question: str
    prediction: object
    gold: object
    answer_type: str
    correct: bool
    rounds_used: int = 0
    llm_calls: int = 0
    prompt_tokens: int = 0
    wall_time: float = 0.0
    retained_ratio: float | None = None
    dataset_tag: str = ""
    error: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RunReport:
    strategy: str
    records: list[ExampleRecord] = field(default_factory=list)

    @property
    def accuracy(self) -> float:
        if not self.records:
            return 0.0
        return sum(r.correct for r in self.records) / len(self.records)

    def accuracy_by_type(self) -> dict[str, float]:
        buckets: dict[str, list[bool]] = {}
        for rec in self.records:
            buckets.setdefault(rec.answer_type, []).append(rec.correct)
        return {t: sum(v) / len(v) for t, v in sorted(buckets.items())}

    def mean_tokens(self) -> float:
        if not self.records:
            return 0.0
        return sum(r.prompt_tokens for r in self.records) / len(self.records)

    def retained_column_ratio(self) -> float | None:
        ratios = [r.retained_ratio for r in self.records if r.retained_ratio is not None]
        if not ratios:
            return None
        return sum(ratios) / len(ratios)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "examples": len(self.records),
            "accuracy": self.accuracy,
            "accuracy_by_type": self.accuracy_by_type(),
            "mean_prompt_tokens": self.mean_tokens(),
            "retained_column_ratio": self.retained_column_ratio(),
            "records": [r.to_dict() for r in self.records],
        }

    def to_text(self) -> str:
        lines = [
            f"strategy: {self.strategy}",
            f"examples: {len(self.records)}",
            f"accuracy: {self.accuracy:.4f}",
        ]
        for answer_type, acc in self.accuracy_by_type().items():
            lines.append(f"  {answer_type}: {acc:.4f}")
        lines.append(f"mean prompt tokens: {self.mean_tokens():.1f}")
        ratio = self.retained_column_ratio()
        if ratio is not None:
            lines.append(f"retained column ratio: {ratio:.4f}")
        return "\n".join(lines)

    def save(self, report_dir: str | Path, *, traces: list[dict] | None = None) -> Path:
        report_dir = Path(report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        json_path = report_dir / f"report_{self.strategy}.json"
        json_path.write_text(json.dumps(self.to_dict(), ensure_ascii=False, indent=1), encoding="utf-8")
        (report_dir / f"report_{self.strategy}.txt").write_text(self.to_text() + "\n", encoding="utf-8")
        if traces is not None:
            with (report_dir / f"traces_{self.strategy}.jsonl").open("w", encoding="utf-8") as fh:
                for trace in traces:
                    fh.write(json.dumps(trace, ensure_ascii=False) + "\n")
        return json_path


# --- exact-match scoring -------------------------------------------------------


def normalize_answer_text(text: str) -> str:
    """Lowercase, strip punctuation (Unicode category P), collapse whitespace."""
    lowered = str(text).lower()
    no_punct = "".join(c for c in lowered if unicodedata.category(c)[0] != "P")
    return " ".join(no_punct.split())


def _parse_em_number(value) -> float | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    token = str(value).strip().strip("\"'").replace(",", "")
    token = token.rstrip("%")
    try:
        number = float(token)
    except ValueError:
        return None
    return number if math.isfinite(number) else None


def _numbers_match(a: float, b: float) -> bool:
    return a == b or math.isclose(a, b, rel_tol=NUMBER_REL_TOL, abs_tol=0.0)


def _parse_em_boolean(value) -> bool | None:
    if isinstance(value, bool):
        return value
    token = normalize_answer_text(str(value))
    if token in ("true", "yes"):
        return True
    if token in ("false", "no"):
        return False
    return None


def _as_list(value) -> list:
    if isinstance(value, (list, tuple)):
        return list(value)
    text = str(value).strip()
    if text.startswith("[") and text.endswith("]"):
        text = text[1:-1]
    return [p.strip().strip("\"'") for p in re.split(r"[,;\n]+", text) if p.strip()]


def em_score(prediction, gold, answer_type: str, *, order_sensitive: bool = False) -> bool:
    """Normalized exact match; total over all inputs, never raises."""
    if prediction is None:
        return False
    answer_type = _TYPE_ALIASES.get(str(answer_type), str(answer_type))

    if answer_type == "boolean":
        pb, gb = _parse_em_boolean(prediction), _parse_em_boolean(gold)
        if pb is not None and gb is not None:
            return pb == gb
        return normalize_answer_text(str(prediction)) == normalize_answer_text(str(gold))

    if answer_type == "number":
        pn, gn = _parse_em_number(prediction), _parse_em_number(gold)
        if pn is not None and gn is not None:
            return _numbers_match(pn, gn)
        return normalize_answer_text(str(prediction)) == normalize_answer_text(str(gold))

    if answer_type in ("list_category", "list_number"):
        pred_items, gold_items = _as_list(prediction), _as_list(gold)
        if len(pred_items) != len(gold_items):
            return False
        if answer_type == "list_number":
            pred_numbers = [_parse_em_number(v) for v in pred_items]
            gold_numbers = [_parse_em_number(v) for v in gold_items]
            if all(v is not None for v in pred_numbers + gold_numbers):
                if not order_sensitive:
                    pred_numbers, gold_numbers = sorted(pred_numbers), sorted(gold_numbers)
                return all(_numbers_match(p, g) for p, g in zip(pred_numbers, gold_numbers))
        pred_norm = [normalize_answer_text(str(v)) for v in pred_items]
        gold_norm = [normalize_answer_text(str(v)) for v in gold_items]
        if not order_sensitive:
            pred_norm, gold_norm = sorted(pred_norm), sorted(gold_norm)
        return pred_norm == gold_norm

    return normalize_answer_text(str(prediction)) == normalize_answer_text(str(gold))


# --- corpus loading ------------------------------------------------------------


def _canonical_type(raw: str, where: str) -> str:
    key = str(raw).strip().lower()
    if key not in _TYPE_ALIASES:
        raise CorpusLoadFailed(f"{where}: unknown answer type {raw!r}")
    return _TYPE_ALIASES[key]


def _validate_example(example: QaExample, where: str) -> QaExample:
    is_list_type = example.answer_type.startswith("list_")
    if is_list_type and not isinstance(example.gold_answer, list):
        raise CorpusLoadFailed(f"{where}: {example.answer_type} answer must be a list")
    if not is_list_type and isinstance(example.gold_answer, list):
        raise CorpusLoadFailed(f"{where}: scalar answer type {example.answer_type} with list gold")
    if not example.table_path.is_file():
        raise CorpusLoadFailed(f"{where}: table file missing: {example.table_path}")
    return example


def _load_generic_jsonl(path: Path) -> list[QaExample]:
    examples = []
    root = path.parent
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusLoadFailed(f"{where}: invalid JSON ({exc})")
            try:
                example = QaExample(
                    table_path=(root / record["table_path"]).resolve(),
                    question=str(record["question"]),
                    gold_answer=record["answer"],
                    answer_type=_canonical_type(record["type"], where),
                    dataset_tag=str(record.get("dataset", "")),
                )
            except KeyError as exc:
                raise CorpusLoadFailed(f"{where}: missing field {exc}")
            examples.append(_validate_example(example, where))
    return examples


def _load_databench(path: Path) -> list[QaExample]:
    """Layout: <root>/qa.jsonl with question/answer/type/dataset fields and
    one table per dataset at <root>/<dataset>/all.csv."""
    root = path if path.is_dir() else path.parent
    qa_file = root / "qa.jsonl" if path.is_dir() else path
    if not qa_file.is_file():
        raise CorpusLoadFailed(f"{root}: no qa.jsonl found")
    examples = []
    with qa_file.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{qa_file}:{lineno}"
            try:
                record = json.loads(line)
                dataset = str(record["dataset"])
                answer_type = _canonical_type(record["type"], where)
                gold = record["answer"]
            except json.JSONDecodeError as exc:
                raise CorpusLoadFailed(f"{where}: invalid JSON ({exc})")
            except KeyError as exc:
                raise CorpusLoadFailed(f"{where}: missing field {exc}")
            if answer_type.startswith("list_") and isinstance(gold, str):
                gold = [p.strip() for p in gold.split(",") if p.strip()]
            example = QaExample(
                table_path=(root / dataset / "all.csv").resolve(),
                question=str(record["question"]),
                gold_answer=gold,
                answer_type=answer_type,
                dataset_tag=dataset,
            )
            examples.append(_validate_example(example, where))
    return examples


def _load_tablebench(path: Path) -> list[QaExample]:
    """JSONL with embedded tables ({"columns": [...], "data": [[...]]});
    tables are materialized as CSV next to the corpus file."""
    import csv as csv_module

    tables_dir = path.parent / f".{path.stem}_tables"
    tables_dir.mkdir(exist_ok=True)
    examples = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
                table = record["table"]
                if isinstance(table, str):
                    table = json.loads(table)
                columns, data = table["columns"], table["data"]
                answer = str(record["answer"])
                example_id = str(record.get("id", lineno))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusLoadFailed(f"{where}: bad record ({exc})")
            table_path = tables_dir / f"{example_id}.csv"
            if not table_path.is_file():
                with table_path.open("w", encoding="utf-8", newline="") as out:
                    writer = csv_module.writer(out)
                    writer.writerow(columns)
                    writer.writerows(data)
            gold: str | list = answer
            if _parse_em_boolean(answer) is not None:
                answer_type = "boolean"
            elif _parse_em_number(answer) is not None:
                answer_type = "number"
            elif ", " in answer:
                answer_type = "list_category"
                gold = [p.strip() for p in answer.split(",") if p.strip()]
            else:
                answer_type = "category"
            examples.append(
                _validate_example(
                    QaExample(
                        table_path=table_path.resolve(),
                        question=str(record["question"]),
                        gold_answer=gold,
                        answer_type=answer_type,
                        dataset_tag=str(record.get("qtype", "tablebench")),
                    ),
                    where,
                )
            )
    return examples


def _load_wikitableqa(path: Path) -> list[QaExample]:
    """TSV with id/utterance/context/targetValue; context is a csv path
    relative to the corpus root; multi-answers are |-separated."""
    root = path.parent
    examples = []
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        try:
            q_idx, ctx_idx, ans_idx = (
                header.index("utterance"),
                header.index("context"),
                header.index("targetValue"),
            )
        except ValueError as exc:
            raise CorpusLoadFailed(f"{path}:1: unexpected header ({exc})")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            parts = line.rstrip("\n").split("\t")
            if len(parts) <= max(q_idx, ctx_idx, ans_idx):
                raise CorpusLoadFailed(f"{where}: too few columns")
            answer = parts[ans_idx]
            gold: str | list
            if "|" in answer:
                gold = [p.strip() for p in answer.split("|") if p.strip()]
                numbers = [_parse_em_number(p) for p in gold]
                answer_type = "list_number" if all(n is not None for n in numbers) else "list_category"
            elif _parse_em_number(answer) is not None:
                gold, answer_type = answer, "number"
            else:
                gold, answer_type = answer, "category"
            examples.append(
                _validate_example(
                    QaExample(
                        table_path=(root / parts[ctx_idx]).resolve(),
                        question=parts[q_idx],
                        gold_answer=gold,
                        answer_type=answer_type,
                        dataset_tag="wikitableqa",
                    ),
                    where,
                )
            )
    return examples


_ADAPTERS = {
    "generic_jsonl": _load_generic_jsonl,
    "databench": _load_databench,
    "tablebench": _load_tablebench,
    "wikitableqa": _load_wikitableqa,
}


def load_corpus(path: str | Path, adapter: str = "generic_jsonl") -> list[QaExample]:
    if adapter not in _ADAPTERS:
        raise CorpusLoadFailed(f"unknown adapter {adapter!r}; pick one of {sorted(_ADAPTERS)}")
    path = Path(path)
    if not path.exists():
        raise CorpusLoadFailed(f"corpus path does not exist: {path}")
    examples = _ADAPTERS[adapter](path)
    if not examples:
        raise CorpusLoadFailed(f"{path}: corpus is empty")
    return examples


# --- strategies ------------------------------------------------------------------


def _run_tablezoomer(example: QaExample, config: ControllerConfig, llm: LlmClient, gateway: ExecutorGateway):
    final = answer_question(
        example.table_path, example.question, example.answer_type, config, llm, gateway
    )
    ratios = [
        rec.columns_retained / rec.columns_total
        for rec in final.trace
        if rec.columns_retained is not None and rec.columns_total
    ]
    ratio = sum(ratios) / len(ratios) if ratios else None
    return final.value, final.rounds_used, final.llm_calls, ratio, final


def _run_pot_baseline(example: QaExample, config: ControllerConfig, llm: LlmClient, gateway: ExecutorGateway):
    """Plain program generation over the full markdown table, one attempt,
    results pushed through the answer formatter."""
    meter = CountingClient(llm)
    table = load_table(example.table_path)
    markdown = serialize_table(table, TableFormat.MARKDOWN_GRID)
    prompt = prompts.render(
        "pot", question=example.question, table_path=str(example.table_path), csv_data=markdown
    )
    response = meter.chat(ChatRequest.user(prompt))
    payload = extract_json(response, expect=dict)
    program = GeneratedProgram(
        code_thought=str(payload.get("code_thought", "")),
        source=str(payload["code"]),
        table_path=str(example.table_path),
    )
    result = gateway.execute(program, timeout=config.timeout)
    record = ThoughtRecord(
        round=1, query=example.question, plan=None, program=program, result=result
    )
    schema = describe_once(
        example.table_path, config.cache_dir, config.k, config.j, config.seed, meter, table=table
    )
    value = format_answer(example.question, [record], example.answer_type, meter, schema)
    return value, 1, meter.calls, None, None


def _run_tcot_baseline(example: QaExample, config: ControllerConfig, llm: LlmClient, gateway: ExecutorGateway):
    meter = CountingClient(llm)
    table = load_table(example.table_path)
    markdown = serialize_table(table, TableFormat.MARKDOWN_GRID)
    prompt = prompts.render("tcot", question=example.question, csv_data=markdown)
    response = meter.chat(ChatRequest.user(prompt))
    payload = extract_json(response, expect=dict)
    if "answer" not in payload:
        raise TableZoomerError("tcot response missing the answer field")
    return payload["answer"], 1, meter.calls, None, None


_STRATEGY_RUNNERS = {
    "tablezoomer": _run_tablezoomer,
    "pot_baseline": _run_pot_baseline,
    "tcot_baseline": _run_tcot_baseline,
}


def run_benchmark(
    corpus: list[QaExample],
    strategy: str,
    config: ControllerConfig,
    llm: LlmClient,
    gateway: ExecutorGateway,
    *,
    parallelism: int = 1,
    report_dir: str | Path | None = None,
    save_traces: bool = False,
    order_sensitive_lists: bool = False,
) -> RunReport:
    """Evaluate every example with the chosen strategy and aggregate EM accuracy."""
    if strategy not in _STRATEGY_RUNNERS:
        raise TableZoomerError(f"unknown strategy {strategy!r}; pick one of {STRATEGIES}")
    runner = _STRATEGY_RUNNERS[strategy]
    traces: list[dict] = []

    def evaluate(indexed: tuple[int, QaExample]) -> tuple[ExampleRecord, dict | None]:
        index, example = indexed
        meter = CountingClient(llm)
        started = time.monotonic()
        record = ExampleRecord(
            index=index,
            question=example.question,
            prediction=None,
            gold=example.gold_answer,
            answer_type=example.answer_type,
            correct=False,
            dataset_tag=example.dataset_tag,
        )
        trace_doc = None
        try:
            value, rounds, calls, ratio, final = runner(example, config, meter, gateway)
            record.prediction = value
            record.rounds_used = rounds
            record.llm_calls = calls
            record.retained_ratio = ratio
            record.correct = em_score(
                value, example.gold_answer, example.answer_type,
                order_sensitive=order_sensitive_lists,
            )
            if final is not None:
                trace_doc = {"index": index, "question": example.question, **final.to_dict()}
        except Exception as exc:  # per-example fault capture: failures score as incorrect
            record.error = f"{type(exc).__name__}: {exc}"
            logger.warning("example %d failed: %s", index, record.error)
        record.prompt_tokens = meter.prompt_tokens
        record.llm_calls = meter.calls
        record.wall_time = time.monotonic() - started
        return record, trace_doc

    indexed = list(enumerate(corpus))
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(evaluate, indexed))
    else:
        outcomes = [evaluate(item) for item in indexed]

    report = RunReport(strategy=strategy)
    for record, trace_doc in outcomes:
        report.records.append(record)
        if trace_doc is not None:
            traces.append(trace_doc)
    if report_dir is not None:
        report.save(report_dir, traces=traces if save_traces else None)
    return report
