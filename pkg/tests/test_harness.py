from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tablezoomer.controller import ControllerConfig
from tablezoomer.errors import CorpusLoadFailed
from tablezoomer.harness import (
    QaExample,
    em_score,
    load_corpus,
    normalize_answer_text,
    run_benchmark,
)
from tablezoomer.llm import ScriptedClient
from tablezoomer.serialize import TableFormat, serialize_table
from tablezoomer.store import load_table

from helpers import (
    annotation_response,
    make_people_csv,
    pot_response,
    print_code,
    react_done,
    router_response,
    write_csv,
)


class TestNormalization:
    @given(st.text(max_size=60))
    @settings(max_examples=200, deadline=None)
    def test_idempotent(self, text):
        once = normalize_answer_text(text)
        assert normalize_answer_text(once) == once

    def test_punctuation_and_case(self):
        assert normalize_answer_text("  The, Answer!  ") == "the answer"


class TestEmScore:
    @pytest.mark.parametrize(
        "prediction,gold,answer_type,expected",
        [
            ("True.", "true", "boolean", True),
            ("3.140000", "3.14", "number", True),
            (["b", "a"], ["a", "b"], "list_category", True),
            ("yes", "true", "boolean", True),
            ("False", "true", "boolean", False),
            ("3.15", "3.14", "number", False),
        ],
    )
    def test_examples(self, prediction, gold, answer_type, expected):
        assert em_score(prediction, gold, answer_type) is expected

    def test_symmetry_for_non_numeric(self):
        pairs = [("Attractions", "attractions."), ("x y", "X  Y"), ("a", "b")]
        for a, b in pairs:
            assert em_score(a, b, "category") == em_score(b, a, "category")

    @given(a=st.text(max_size=30), b=st.text(max_size=30))
    @settings(max_examples=200, deadline=None)
    def test_symmetry_property_category(self, a, b):
        assert em_score(a, b, "category") == em_score(b, a, "category")

    @given(
        a=st.lists(st.text(min_size=1, max_size=8), min_size=1, max_size=5),
        b=st.lists(st.text(min_size=1, max_size=8), min_size=1, max_size=5),
    )
    @settings(max_examples=150, deadline=None)
    def test_symmetry_property_list_category(self, a, b):
        assert em_score(a, b, "list_category") == em_score(b, a, "list_category")

    def test_order_sensitive_flag(self):
        assert not em_score(["b", "a"], ["a", "b"], "list_category", order_sensitive=True)
        assert em_score(["a", "b"], ["a", "b"], "list_category", order_sensitive=True)

    def test_total_on_garbage(self):
        assert em_score(None, "x", "number") is False
        assert em_score("", "", "category") is True
        assert em_score(object(), "x", "category") in (True, False)


class TestLoadCorpus:
    def corpus_file(self, tmp_path, records):
        make_people_csv(tmp_path / "people.csv")
        path = tmp_path / "corpus.jsonl"
        path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
        return path

    def test_generic_three_lines(self, tmp_path):
        path = self.corpus_file(tmp_path, [
            {"table_path": "people.csv", "question": "q1", "answer": "34", "type": "number"},
            {"table_path": "people.csv", "question": "q2", "answer": "Lisbon", "type": "category"},
            {"table_path": "people.csv", "question": "q3", "answer": ["a", "b"], "type": "list[category]"},
        ])
        corpus = load_corpus(path)
        assert len(corpus) == 3
        assert corpus[2].answer_type == "list_category"

    def test_scalar_type_with_list_gold_names_line(self, tmp_path):
        path = self.corpus_file(tmp_path, [
            {"table_path": "people.csv", "question": "q", "answer": ["1", "2"], "type": "number"},
        ])
        with pytest.raises(CorpusLoadFailed, match="corpus.jsonl:1"):
            load_corpus(path)

    def test_missing_table_flagged(self, tmp_path):
        path = self.corpus_file(tmp_path, [
            {"table_path": "ghost.csv", "question": "q", "answer": "1", "type": "number"},
        ])
        with pytest.raises(CorpusLoadFailed, match="ghost.csv"):
            load_corpus(path)

    def test_databench_layout(self, tmp_path):
        dataset_dir = tmp_path / "sales"
        dataset_dir.mkdir()
        write_csv(dataset_dir / "all.csv", ["item", "amount"], [["pen", "2"], ["book", "9"]])
        (tmp_path / "qa.jsonl").write_text(
            json.dumps({"question": "max amount?", "answer": "9", "type": "number", "dataset": "sales"})
            + "\n",
            encoding="utf-8",
        )
        corpus = load_corpus(tmp_path, adapter="databench")
        assert corpus[0].table_path.name == "all.csv"
        assert corpus[0].dataset_tag == "sales"

    def test_tablebench_materializes_embedded_tables(self, tmp_path):
        record = {
            "id": "tb1",
            "qtype": "FactChecking",
            "question": "is it true?",
            "answer": "True",
            "table": {"columns": ["a", "b"], "data": [[1, "x"], [2, "y"]]},
        }
        path = tmp_path / "tb.jsonl"
        path.write_text(json.dumps(record) + "\n", encoding="utf-8")
        corpus = load_corpus(path, adapter="tablebench")
        assert corpus[0].answer_type == "boolean"
        table = load_table(corpus[0].table_path)
        assert table.column_names == ["a", "b"]

    def test_wikitableqa_layout(self, tmp_path):
        (tmp_path / "csv").mkdir()
        write_csv(tmp_path / "csv" / "1.csv", ["team", "wins"], [["reds", "3"], ["blues", "5"]])
        tsv = "id\tutterance\tcontext\ttargetValue\nnt-1\thow many wins?\tcsv/1.csv\t5\n"
        (tmp_path / "questions.tsv").write_text(tsv, encoding="utf-8")
        corpus = load_corpus(tmp_path / "questions.tsv", adapter="wikitableqa")
        assert corpus[0].answer_type == "number"
        assert corpus[0].question == "how many wins?"

    def test_unknown_adapter(self, tmp_path):
        with pytest.raises(CorpusLoadFailed):
            load_corpus(tmp_path / "x.jsonl", adapter="mystery")


def one_question_corpus(tmp_path) -> list[QaExample]:
    table = make_people_csv(tmp_path / "people.csv")
    return [QaExample(table_path=table, question="total price?", gold_answer="23.0", answer_type="number")]


class TestRunBenchmark:
    def test_tablezoomer_strategy_scores_one(self, tmp_path, gateway):
        corpus = one_question_corpus(tmp_path)
        llm = ScriptedClient([
            annotation_response(["name", "age", "city", "price"]),
            router_response({"type": "column-only retrieval", "columns": ["price"]}),
            pot_response(print_code("23.0")),
            react_done("23.0"),
            "23.0",
        ])
        config = ControllerConfig(cache_dir=str(tmp_path / "cache"), timeout=10.0)
        report = run_benchmark(corpus, "tablezoomer", config, llm, gateway, report_dir=tmp_path / "reports")
        assert report.accuracy == 1.0
        record = report.records[0]
        assert record.llm_calls == 5
        assert record.retained_ratio == pytest.approx(1 / 4)
        assert (tmp_path / "reports" / "report_tablezoomer.json").is_file()

    def test_scripted_wrong_answers_score_zero(self, tmp_path, gateway):
        corpus = one_question_corpus(tmp_path)
        llm = ScriptedClient([
            json.dumps({"answer": "999", "explanation": "wrong on purpose"}),
        ])
        config = ControllerConfig(cache_dir=str(tmp_path / "cache"))
        report = run_benchmark(corpus, "tcot_baseline", config, llm, gateway)
        assert report.accuracy == 0.0

    def test_tcot_baseline_gets_full_markdown_table(self, tmp_path, gateway):
        corpus = one_question_corpus(tmp_path)
        llm = ScriptedClient([json.dumps({"answer": "23.0", "explanation": "sum"})])
        config = ControllerConfig(cache_dir=str(tmp_path / "cache"))
        report = run_benchmark(corpus, "tcot_baseline", config, llm, gateway)
        table_md = serialize_table(load_table(corpus[0].table_path), TableFormat.MARKDOWN_GRID)
        assert table_md in llm.requests[0].prompt_text()
        assert report.accuracy == 1.0

    def test_pot_baseline_executes_and_formats(self, tmp_path, gateway):
        corpus = one_question_corpus(tmp_path)
        llm = ScriptedClient([
            pot_response(print_code("23.0")),
            annotation_response(["name", "age", "city", "price"]),
            "23.0",
        ])
        config = ControllerConfig(cache_dir=str(tmp_path / "cache"), timeout=10.0)
        report = run_benchmark(corpus, "pot_baseline", config, llm, gateway)
        assert report.accuracy == 1.0
        assert report.records[0].llm_calls == 3

    def test_failures_recorded_as_incorrect(self, tmp_path, gateway):
        corpus = one_question_corpus(tmp_path)
        llm = ScriptedClient(["completely unusable"])  # tcot json parse will fail
        config = ControllerConfig(cache_dir=str(tmp_path / "cache"))
        report = run_benchmark(corpus, "tcot_baseline", config, llm, gateway)
        assert report.accuracy == 0.0
        assert report.records[0].error

    def test_aggregates_recombine_exactly(self, tmp_path, gateway):
        table = make_people_csv(tmp_path / "people.csv")
        corpus = [
            QaExample(table, "q1", "x", "category"),
            QaExample(table, "q2", "true", "boolean"),
            QaExample(table, "q3", "2", "number"),
        ]
        llm = ScriptedClient([
            json.dumps({"answer": "x", "explanation": ""}),
            json.dumps({"answer": "false", "explanation": ""}),
            json.dumps({"answer": "2", "explanation": ""}),
        ])
        config = ControllerConfig(cache_dir=str(tmp_path / "cache"))
        report = run_benchmark(corpus, "tcot_baseline", config, llm, gateway)
        by_type = report.accuracy_by_type()
        counts = {"category": 1, "boolean": 1, "number": 1}
        recombined = sum(by_type[t] * counts[t] for t in counts) / sum(counts.values())
        assert abs(recombined - report.accuracy) < 1e-12

    def test_prompt_tokens_flat_in_row_count(self, tmp_path, gateway):
        """Same question over a 100x bigger table costs (nearly) the same prompt tokens."""
        from helpers import make_wide_csv

        tokens = []
        for name, rows in (("small", 100), ("big", 10_000)):
            sub = tmp_path / name
            sub.mkdir()
            table_path = make_wide_csv(sub / "t.csv", rows=rows)
            corpus = [QaExample(table_path, "sum col_00?", "0", "number")]
            llm = ScriptedClient([
                annotation_response([f"col_{i:02d}" for i in range(20)]),
                router_response({"type": "column-only retrieval", "columns": ["col_00"]}),
                pot_response(print_code("0")),
                react_done("0"),
                "0",
            ])
            config = ControllerConfig(cache_dir=str(sub / "cache"), timeout=10.0)
            report = run_benchmark(corpus, "tablezoomer", config, llm, gateway)
            tokens.append(report.records[0].prompt_tokens)
        small, big = tokens
        assert abs(big - small) / small < 0.02
